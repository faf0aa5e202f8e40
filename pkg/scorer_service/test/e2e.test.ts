import { ChildProcess, execFileSync, spawn } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { runFinetune } from "../src/finetune.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const MAIN = path.join(HERE, "..", "dist", "main.js");

let workDir: string;
let service: ChildProcess | null = null;
let servicePort = 0;

function writeLines(file: string, rows: unknown[]): void {
  fs.writeFileSync(file, rows.map((r) => JSON.stringify(r)).join("\n") + "\n");
}

function startService(modelDir: string): Promise<number> {
  return new Promise((resolve, reject) => {
    const child = spawn("node", [MAIN, "serve", "--model", modelDir, "--port", "0"], {
      stdio: ["ignore", "pipe", "inherit"],
    });
    service = child;
    let banner = "";
    child.stdout.on("data", (chunk) => {
      banner += chunk.toString();
      const match = banner.match(/listening on [^:]+:(\d+)/);
      if (match) {
        resolve(Number(match[1]));
      }
    });
    child.on("error", reject);
    child.on("exit", (code) => reject(new Error(`service exited early with code ${code}`)));
  });
}

// Tiny corpus: two reference paragraphs in one language, one suspicious
// document whose first two sentences translate them and whose last one is
// unrelated noise.
beforeAll(async () => {
  expect(fs.existsSync(MAIN)).toBe(true);

  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "e2e-"));
  const senses: string[] = [];
  for (let i = 0; i < 8; i++) {
    senses.push(`e${i}\ten\tsrc${i}\tNOUN\t0\t`);
    senses.push(`e${i}\txx\ttgt${i}\tNOUN\t\t`);
  }
  const sensesFile = path.join(workDir, "senses.tsv");
  fs.writeFileSync(sensesFile, senses.join("\n") + "\n");

  const refsFile = path.join(workDir, "refs.jsonl");
  writeLines(refsFile, [
    { id: "ref-1", lang: "en", text: "Src0 src1 src2.\n\nSrc3 src4 src5." },
    { id: "ref-2", lang: "en", text: "Src6 src7 src6." },
  ]);
  const suspFile = path.join(workDir, "susp.jsonl");
  writeLines(suspFile, [
    { id: "susp-1", lang: "xx", text: "Tgt2 tgt1 tgt0. Tgt5 tgt4 tgt3. Unrelated filler words." },
  ]);

  const dictFile = path.join(workDir, "dict.tsv");
  execFileSync("xlplag", ["build-clusters", "--senses", sensesFile, "--mode", "top1", "--out", dictFile]);
  execFileSync("xlplag", ["index", "--corpus", refsFile, "--dict", dictFile, "--out", path.join(workDir, "ref.idx")]);

  // Train the scorer on aligned src/tgt sentences so translated pairs
  // clear 0.5 and unrelated ones do not.
  const trainRows: string[] = [];
  for (let i = 0; i < 60; i++) {
    trainRows.push(`src${i} src${i + 1} src${i + 2}\ttgt${i} tgt${i + 1} tgt${i + 2}`);
  }
  const parallelFile = path.join(workDir, "parallel.tsv");
  fs.writeFileSync(parallelFile, trainRows.join("\n") + "\n");
  const trainFile = path.join(workDir, "train.jsonl");
  execFileSync("xlplag", [
    "gen-pairs", "--parallel", parallelFile, "--la", "en", "--lb", "xx",
    "--negatives", "1", "--seed", "3", "--out", trainFile,
  ]);
  const modelDir = path.join(workDir, "model");
  runFinetune({
    base: "", trainPath: trainFile, devPath: "", outDir: modelDir,
    epochs: 150, batchSize: 16, learningRate: 0.5, seed: 0, beta: 0.25,
  });
  servicePort = await startService(modelDir);
}, 60000);

afterAll(() => {
  if (service) {
    service.removeAllListeners("exit");
    service.kill("SIGTERM");
  }
  fs.rmSync(workDir, { recursive: true, force: true });
});

describe("detection against the live service", () => {
  it("emits a valid report with the translated sentences attributed", () => {
    const reportFile = path.join(workDir, "report.json");
    execFileSync("xlplag", [
      "detect",
      "--susp", path.join(workDir, "susp.jsonl"),
      "--index", path.join(workDir, "ref.idx"),
      "--dict", path.join(workDir, "dict.tsv"),
      "--scorer", `remote:127.0.0.1:${servicePort}`,
      "--threshold", "0.5",
      "--out", reportFile,
    ]);
    const report = JSON.parse(fs.readFileSync(reportFile, "utf-8"));
    expect(report.config.scorer).toBe(`remote:127.0.0.1:${servicePort}`);
    expect(Array.isArray(report.detections)).toBe(true);
    expect(report.detections.length).toBeGreaterThanOrEqual(2);
    for (const det of report.detections) {
      expect(det.susp_doc).toBe("susp-1");
      expect(det.src_doc).toMatch(/^ref-/);
      expect(det.susp_span[0]).toBeLessThan(det.susp_span[1]);
      expect(det.score).toBeGreaterThanOrEqual(0.5);
      expect(det.score).toBeLessThanOrEqual(1);
    }
    // The noise sentence must not be attributed to anything.
    const spans = report.detections.map((d: { susp_span: number[] }) => d.susp_span[1]);
    expect(Math.max(...spans)).toBeLessThanOrEqual(32);
  });

  it("speaks the same protocol over stdio", async () => {
    const child = spawn("node", [MAIN, "serve", "--model", path.join(workDir, "model"), "--stdio"], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    const done = new Promise<string>((resolve, reject) => {
      let data = "";
      child.stdout.on("data", (chunk) => (data += chunk.toString()));
      child.on("close", () => resolve(data));
      child.on("error", reject);
    });
    child.stdin.write('{"id": 11, "a": "src4 src5", "la": "en", "b": "tgt4 tgt5", "lb": "xx"}\n');
    child.stdin.end();
    const lines = (await done).trim().split("\n").map((line) => JSON.parse(line));
    expect(lines).toHaveLength(1);
    expect(lines[0].id).toBe(11);
    expect(lines[0].score).toBeGreaterThan(0.5);
  });

  it("serves a second client after the first batch closed", () => {
    const reportFile = path.join(workDir, "report2.json");
    execFileSync("xlplag", [
      "detect",
      "--susp", path.join(workDir, "susp.jsonl"),
      "--index", path.join(workDir, "ref.idx"),
      "--dict", path.join(workDir, "dict.tsv"),
      "--scorer", `remote:127.0.0.1:${servicePort}`,
      "--threshold", "0.5",
      "--out", reportFile,
    ]);
    const first = JSON.parse(fs.readFileSync(path.join(workDir, "report.json"), "utf-8"));
    const second = JSON.parse(fs.readFileSync(reportFile, "utf-8"));
    expect(second).toEqual(first);
  });
});
