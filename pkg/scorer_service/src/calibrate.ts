/** Threshold selection on labeled scores, mirroring the detector's rule. */

export function fBeta(precision: number, recall: number, beta: number): number {
  const b2 = beta * beta;
  const denom = b2 * precision + recall;
  if (denom === 0) {
    return 0;
  }
  return ((1 + b2) * precision * recall) / denom;
}

export interface PairMetrics {
  precision: number;
  recall: number;
  f1: number;
}

/** Classify positive iff score >= threshold and count micro P/R/F1. */
export function pairMetrics(scores: number[], labels: number[], threshold: number): PairMetrics {
  let tp = 0;
  let fp = 0;
  let fn = 0;
  for (let i = 0; i < scores.length; i++) {
    const predicted = scores[i] >= threshold;
    if (predicted && labels[i] === 1) {
      tp++;
    } else if (predicted) {
      fp++;
    } else if (labels[i] === 1) {
      fn++;
    }
  }
  const precision = tp + fp === 0 ? 0 : tp / (tp + fp);
  const recall = tp + fn === 0 ? 0 : tp / (tp + fn);
  const f1 = fBeta(precision, recall, 1);
  return { precision, recall, f1 };
}

/**
 * Pick the threshold maximizing F-beta over {0, 1} plus the midpoints of
 * adjacent distinct scores. Ties go to the largest threshold.
 */
export function calibrateThreshold(scores: number[], labels: number[], beta: number): number {
  if (scores.length !== labels.length || scores.length === 0) {
    throw new Error("scores and labels must be nonempty and the same length");
  }
  const distinct = Array.from(new Set(scores)).sort((x, y) => x - y);
  const candidates = [0, 1];
  for (let i = 0; i + 1 < distinct.length; i++) {
    candidates.push((distinct[i] + distinct[i + 1]) / 2);
  }
  let best = 0;
  let bestScore = -1;
  for (const t of candidates.sort((x, y) => x - y)) {
    const m = pairMetrics(scores, labels, t);
    const f = fBeta(m.precision, m.recall, beta);
    if (f >= bestScore) {
      bestScore = f;
      best = t;
    }
  }
  return best;
}
