import { execFileSync } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { pairMetrics } from "../src/calibrate.js";
import { loadPairs, runFinetune } from "../src/finetune.js";
import { PairModel, loadModel } from "../src/model.js";

let workDir: string;
let trainFile: string;
let heldOutFile: string;

function parallelRows(start: number, count: number): string {
  const lines: string[] = [];
  for (let i = start; i < start + count; i++) {
    const l1 = `word${i} word${i + 1} word${i + 2} word${i + 3}`;
    const l2 = `mot${i} mot${i + 1} mot${i + 2} mot${i + 3}`;
    lines.push(`${l1}\t${l2}`);
  }
  return lines.join("\n") + "\n";
}

// The training files come from the detector's own pair generator so the
// dataset format stays honest end to end.
beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "finetune-"));
  const trainTsv = path.join(workDir, "parallel_train.tsv");
  const evalTsv = path.join(workDir, "parallel_eval.tsv");
  fs.writeFileSync(trainTsv, parallelRows(0, 100));
  fs.writeFileSync(evalTsv, parallelRows(500, 50));
  trainFile = path.join(workDir, "train.jsonl");
  heldOutFile = path.join(workDir, "heldout.jsonl");
  execFileSync("xlplag", [
    "gen-pairs", "--parallel", trainTsv, "--la", "en", "--lb", "xx",
    "--negatives", "1", "--seed", "7", "--out", trainFile,
  ]);
  execFileSync("xlplag", [
    "gen-pairs", "--parallel", evalTsv, "--la", "en", "--lb", "xx",
    "--negatives", "1", "--seed", "11", "--out", heldOutFile,
  ]);
});

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

function finetuneTo(outDir: string, seed = 0) {
  return runFinetune({
    base: "",
    trainPath: trainFile,
    devPath: "",
    outDir,
    epochs: 150,
    batchSize: 16,
    learningRate: 0.5,
    seed,
    beta: 0.25,
  });
}

describe("dataset loading", () => {
  it("reads generator output", () => {
    const examples = loadPairs(trainFile);
    expect(examples.length).toBe(200);
    const positives = examples.filter((e) => e.label === 1);
    expect(positives.length).toBe(100);
    expect(positives[0].la).toBe("en");
    expect(positives[0].lb).toBe("xx");
  });

  it("rejects bad labels and empty files", () => {
    const bad = path.join(workDir, "bad.jsonl");
    fs.writeFileSync(bad, '{"a": "x", "la": "en", "b": "y", "lb": "xx", "label": 2}\n');
    expect(() => loadPairs(bad)).toThrow(/label/);
    const empty = path.join(workDir, "empty.jsonl");
    fs.writeFileSync(empty, "\n");
    expect(() => loadPairs(empty)).toThrow(/empty/);
  });
});

describe("fine-tuning", () => {
  it("writes artifacts and metrics, and beats the untrained model on its dev set", () => {
    const outDir = path.join(workDir, "artifacts");
    const result = finetuneTo(outDir);
    expect(fs.existsSync(path.join(outDir, "model.json"))).toBe(true);
    const metrics = JSON.parse(fs.readFileSync(path.join(outDir, "metrics.json"), "utf-8"));
    expect(metrics.threshold).toBeGreaterThanOrEqual(0);
    expect(metrics.threshold).toBeLessThanOrEqual(1);
    expect(metrics.beta).toBe(0.25);

    // Untrained baseline on the same dev data, at its own best threshold.
    const dev = loadPairs(trainFile);
    const untrained = PairModel.untrained();
    const scores = dev.map((e) => untrained.score(e.a, e.b));
    const labels = dev.map((e) => e.label);
    const baseline = pairMetrics(scores, labels, 0.5);
    expect(result.metrics.f1).toBeGreaterThanOrEqual(baseline.f1);
    expect(result.metrics.f1).toBeGreaterThan(0.9);
  });

  it("separates held-out positives from negatives", () => {
    const outDir = path.join(workDir, "artifacts-sep");
    const { model } = finetuneTo(outDir);
    const held = loadPairs(heldOutFile);
    const positives = held.filter((e) => e.label === 1);
    const negatives = held.filter((e) => e.label === 0);
    expect(positives.length).toBe(50);
    expect(negatives.length).toBe(50);
    const mean = (xs: number[]) => xs.reduce((s, x) => s + x, 0) / xs.length;
    const meanPos = mean(positives.map((e) => model.score(e.a, e.b)));
    const meanNeg = mean(negatives.map((e) => model.score(e.a, e.b)));
    expect(meanPos - meanNeg).toBeGreaterThan(0);
    console.log(`held-out mean scores: positive ${meanPos.toFixed(3)}, negative ${meanNeg.toFixed(3)}`);
  });

  it("scores an identical sentence pair above 0.5", () => {
    const outDir = path.join(workDir, "artifacts-smoke");
    const { model } = finetuneTo(outDir);
    const sentence = "the quick brown fox number 41";
    expect(model.score(sentence, sentence)).toBeGreaterThan(0.5);
  });

  it("reproduces artifacts byte for byte under a fixed seed", () => {
    const dirA = path.join(workDir, "artifacts-a");
    const dirB = path.join(workDir, "artifacts-b");
    finetuneTo(dirA, 9);
    finetuneTo(dirB, 9);
    const bytesA = fs.readFileSync(path.join(dirA, "model.json"), "utf-8");
    const bytesB = fs.readFileSync(path.join(dirB, "model.json"), "utf-8");
    expect(bytesA).toBe(bytesB);
  });

  it("round-trips artifacts through loadModel", () => {
    const outDir = path.join(workDir, "artifacts-load");
    const { model, metrics } = finetuneTo(outDir);
    const loaded = loadModel(outDir);
    expect(loaded.threshold).toBe(metrics.threshold);
    expect(loaded.score("word1 word2", "mot1 mot2")).toBe(model.score("word1 word2", "mot1 mot2"));
  });
});
