import { parseArgs } from "node:util";

import { DEFAULT_FINETUNE, runFinetune } from "./finetune.js";
import { PairModel, loadModel } from "./model.js";
import { DEFAULT_BATCH_SIZE, serveStdio, serveTcp } from "./server.js";

const USAGE = `usage:
  main.js serve [--model DIR] [--host H] [--port N | --stdio] [--batch-size N]
  main.js finetune --train FILE --out DIR [--dev FILE] [--base DIR]
                   [--epochs N] [--batch-size N] [--lr X] [--seed N] [--beta X]`;

function fail(message: string, code: number): never {
  console.error(message);
  process.exit(code);
}

async function cmdServe(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      host: { type: "string", default: "127.0.0.1" },
      port: { type: "string", default: "7421" },
      stdio: { type: "boolean", default: false },
      "batch-size": { type: "string", default: String(DEFAULT_BATCH_SIZE) },
    },
  });
  const batchSize = Number(values["batch-size"]);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    fail("--batch-size must be a positive integer", 2);
  }
  const model = values.model ? loadModel(values.model) : PairModel.untrained();
  if (!values.model) {
    console.error("no --model given; serving the untrained baseline (all scores 0.5)");
  }
  if (values.stdio) {
    await serveStdio(model, batchSize);
    return;
  }
  const port = Number(values.port);
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    fail("--port must be an integer in [0, 65535]", 2);
  }
  const tcp = await serveTcp(model, values.host as string, port, batchSize);
  console.log(`listening on ${tcp.host}:${tcp.port}`);
  const stop = () => {
    tcp.close().then(() => process.exit(0));
  };
  process.on("SIGINT", stop);
  process.on("SIGTERM", stop);
}

function cmdFinetune(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      train: { type: "string" },
      dev: { type: "string", default: "" },
      out: { type: "string" },
      base: { type: "string", default: "" },
      epochs: { type: "string", default: String(DEFAULT_FINETUNE.epochs) },
      "batch-size": { type: "string", default: String(DEFAULT_FINETUNE.batchSize) },
      lr: { type: "string", default: String(DEFAULT_FINETUNE.learningRate) },
      seed: { type: "string", default: String(DEFAULT_FINETUNE.seed) },
      beta: { type: "string", default: String(DEFAULT_FINETUNE.beta) },
    },
  });
  if (!values.train || !values.out) {
    fail(`missing --train or --out\n${USAGE}`, 2);
  }
  const numeric = {
    epochs: Number(values.epochs),
    batchSize: Number(values["batch-size"]),
    learningRate: Number(values.lr),
    seed: Number(values.seed),
    beta: Number(values.beta),
  };
  if (!Number.isInteger(numeric.epochs) || numeric.epochs < 1) {
    fail("--epochs must be a positive integer", 2);
  }
  if (!Number.isInteger(numeric.batchSize) || numeric.batchSize < 1) {
    fail("--batch-size must be a positive integer", 2);
  }
  if (!(numeric.learningRate > 0) || !(numeric.beta > 0)) {
    fail("--lr and --beta must be positive", 2);
  }
  const result = runFinetune({
    ...numeric,
    base: values.base as string,
    trainPath: values.train as string,
    devPath: values.dev as string,
    outDir: values.out as string,
  });
  const m = result.metrics;
  console.log(
    `wrote ${values.out}: threshold ${m.threshold.toFixed(4)}, ` +
      `dev P ${m.precision.toFixed(3)} R ${m.recall.toFixed(3)} F1 ${m.f1.toFixed(3)}`,
  );
}

async function main(): Promise<void> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    if (command === "serve") {
      await cmdServe(rest);
    } else if (command === "finetune") {
      cmdFinetune(rest);
    } else {
      fail(USAGE, 2);
    }
  } catch (err) {
    if (err instanceof Error && "code" in err && err.code === "ERR_PARSE_ARGS_UNKNOWN_OPTION") {
      fail(`${err.message}\n${USAGE}`, 2);
    }
    fail(err instanceof Error ? err.message : String(err), 1);
  }
}

main();
