import fs from "node:fs";
import path from "node:path";

import { calibrateThreshold, fBeta, pairMetrics } from "./calibrate.js";
import {
  DEFAULT_TRAIN,
  METRICS_FILE,
  PairExample,
  PairModel,
  TrainConfig,
  loadModel,
  saveModel,
} from "./model.js";

export interface FineTuneConfig extends TrainConfig {
  /** Artifacts directory to warm-start from; empty string trains from scratch. */
  base: string;
  trainPath: string;
  /** Defaults to trainPath when empty. */
  devPath: string;
  outDir: string;
  beta: number;
}

export const DEFAULT_FINETUNE: FineTuneConfig = {
  ...DEFAULT_TRAIN,
  base: "",
  trainPath: "",
  devPath: "",
  outDir: "",
  beta: 0.25,
};

/** Read a labeled pair dataset: one {"a","la","b","lb","label"} object per line. */
export function loadPairs(file: string): PairExample[] {
  const examples: PairExample[] = [];
  const lines = fs.readFileSync(file, "utf-8").split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) {
      continue;
    }
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error(`${file}: line ${i + 1}: invalid JSON`);
    }
    const label = obj.label;
    if (label !== 0 && label !== 1) {
      throw new Error(`${file}: line ${i + 1}: label must be 0 or 1`);
    }
    for (const field of ["a", "la", "b", "lb"]) {
      if (typeof obj[field] !== "string") {
        throw new Error(`${file}: line ${i + 1}: field ${field} must be a string`);
      }
    }
    examples.push({
      a: obj.a as string,
      la: obj.la as string,
      b: obj.b as string,
      lb: obj.lb as string,
      label,
    });
  }
  if (examples.length === 0) {
    throw new Error(`${file}: empty dataset`);
  }
  return examples;
}

export interface FineTuneResult {
  model: PairModel;
  metrics: {
    precision: number;
    recall: number;
    f1: number;
    f_beta: number;
    beta: number;
    threshold: number;
    train_examples: number;
    dev_examples: number;
  };
}

/**
 * Train on the train file, pick the F-beta-optimal threshold on the dev
 * file (train file when no dev is given), save artifacts and metrics.
 */
export function runFinetune(cfg: FineTuneConfig): FineTuneResult {
  const train = loadPairs(cfg.trainPath);
  const dev = cfg.devPath && cfg.devPath !== cfg.trainPath ? loadPairs(cfg.devPath) : train;

  const model = cfg.base ? loadModel(cfg.base) : PairModel.untrained();
  model.train(train, cfg);

  const scores = dev.map((e) => model.score(e.a, e.b));
  const labels = dev.map((e) => e.label);
  const threshold = calibrateThreshold(scores, labels, cfg.beta);
  const m = pairMetrics(scores, labels, threshold);
  model.threshold = threshold;
  model.beta = cfg.beta;

  const metrics = {
    precision: m.precision,
    recall: m.recall,
    f1: m.f1,
    f_beta: fBeta(m.precision, m.recall, cfg.beta),
    beta: cfg.beta,
    threshold,
    train_examples: train.length,
    dev_examples: dev.length,
  };
  saveModel(model, cfg.outDir);
  fs.writeFileSync(
    path.join(cfg.outDir, METRICS_FILE),
    JSON.stringify(metrics, Object.keys(metrics).sort(), 2) + "\n",
  );
  return { model, metrics };
}
