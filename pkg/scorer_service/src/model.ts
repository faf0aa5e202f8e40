/**
 * Logistic regression over pair features. Small enough to train in
 * milliseconds on a laptop, which is the point: the serving contract and
 * the fine-tuning recipe stay the same if a heavier classifier replaces it.
 */

import fs from "node:fs";
import path from "node:path";

import { FEATURE_COUNT, FEATURE_NAMES, extractFeatures } from "./features.js";

export const MODEL_FILE = "model.json";
export const METRICS_FILE = "metrics.json";

export interface PairExample {
  a: string;
  la: string;
  b: string;
  lb: string;
  label: 0 | 1;
}

export interface TrainConfig {
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
}

export const DEFAULT_TRAIN: TrainConfig = {
  epochs: 200,
  batchSize: 16,
  learningRate: 0.5,
  seed: 0,
};

interface ModelJson {
  version: number;
  base: string;
  featureNames: string[];
  weights: number[];
  bias: number;
  threshold: number;
  beta: number;
}

function sigmoid(z: number): number {
  return 1 / (1 + Math.exp(-z));
}

/** Deterministic PRNG; seed fixes the whole training data order. */
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled<T>(items: T[], rand: () => number): T[] {
  const out = items.slice();
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}

export class PairModel {
  weights: number[];
  bias: number;
  base: string;
  threshold: number;
  beta: number;

  constructor(weights: number[], bias: number, base: string, threshold = 0.5, beta = 0.25) {
    if (weights.length !== FEATURE_COUNT) {
      throw new Error(`expected ${FEATURE_COUNT} weights, got ${weights.length}`);
    }
    this.weights = weights;
    this.bias = bias;
    this.base = base;
    this.threshold = threshold;
    this.beta = beta;
  }

  /** All-zero weights: every pair scores exactly 0.5. */
  static untrained(base = "pair-lr-v1"): PairModel {
    return new PairModel(new Array(FEATURE_COUNT).fill(0), 0, base);
  }

  scoreFeatures(features: number[]): number {
    let z = this.bias;
    for (let i = 0; i < this.weights.length; i++) {
      z += this.weights[i] * features[i];
    }
    return sigmoid(z);
  }

  score(a: string, b: string): number {
    return this.scoreFeatures(extractFeatures(a, b));
  }

  /** Mini-batch gradient descent on logistic loss. Mutates the model. */
  train(examples: PairExample[], cfg: TrainConfig): void {
    if (examples.length === 0) {
      throw new Error("empty training set");
    }
    const rows = examples.map((e) => ({
      features: extractFeatures(e.a, e.b),
      label: e.label,
    }));
    const rand = mulberry32(cfg.seed);
    for (let epoch = 0; epoch < cfg.epochs; epoch++) {
      const order = shuffled(rows, rand);
      for (let start = 0; start < order.length; start += cfg.batchSize) {
        const batch = order.slice(start, start + cfg.batchSize);
        const gradW = new Array(FEATURE_COUNT).fill(0);
        let gradB = 0;
        for (const row of batch) {
          const err = this.scoreFeatures(row.features) - row.label;
          for (let i = 0; i < FEATURE_COUNT; i++) {
            gradW[i] += err * row.features[i];
          }
          gradB += err;
        }
        for (let i = 0; i < FEATURE_COUNT; i++) {
          this.weights[i] -= (cfg.learningRate * gradW[i]) / batch.length;
        }
        this.bias -= (cfg.learningRate * gradB) / batch.length;
      }
    }
  }

  toJSON(): ModelJson {
    return {
      version: 1,
      base: this.base,
      featureNames: [...FEATURE_NAMES],
      weights: this.weights,
      bias: this.bias,
      threshold: this.threshold,
      beta: this.beta,
    };
  }

  static fromJSON(data: ModelJson): PairModel {
    if (data.version !== 1) {
      throw new Error(`unsupported model version ${data.version}`);
    }
    const expected = [...FEATURE_NAMES];
    if (JSON.stringify(data.featureNames) !== JSON.stringify(expected)) {
      throw new Error("model was trained with a different feature set");
    }
    return new PairModel(data.weights, data.bias, data.base, data.threshold, data.beta);
  }
}

export function saveModel(model: PairModel, dir: string): string {
  fs.mkdirSync(dir, { recursive: true });
  const file = path.join(dir, MODEL_FILE);
  fs.writeFileSync(file, JSON.stringify(model.toJSON(), null, 2) + "\n");
  return file;
}

export function loadModel(dir: string): PairModel {
  const file = path.join(dir, MODEL_FILE);
  const data = JSON.parse(fs.readFileSync(file, "utf-8")) as ModelJson;
  return PairModel.fromJSON(data);
}
