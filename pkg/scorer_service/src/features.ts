/**
 * Numeric features of a text pair. Deliberately language-blind: surface
 * statistics that survive translation (numerals, names, lengths) rather
 * than anything lexical, so the same model works for any language pair.
 */

export const FEATURE_NAMES = [
  "char_trigram_jaccard",
  "token_jaccard",
  "digit_run_jaccard",
  "char_length_ratio",
  "token_count_ratio",
] as const;

export const FEATURE_COUNT = FEATURE_NAMES.length;

function tokens(text: string): string[] {
  return text.toLowerCase().split(/\s+/).filter((t) => t.length > 0);
}

function charTrigrams(text: string): Set<string> {
  const squeezed = text.toLowerCase().replace(/\s+/g, " ").trim();
  const grams = new Set<string>();
  for (let i = 0; i + 3 <= squeezed.length; i++) {
    grams.add(squeezed.slice(i, i + 3));
  }
  return grams;
}

/** Maximal runs of ASCII digits: "mot007 and 12" -> {"007", "12"}. */
function digitRuns(text: string): Set<string> {
  return new Set(text.match(/[0-9]+/g) ?? []);
}

function jaccard(a: Set<string>, b: Set<string>): number {
  if (a.size === 0 && b.size === 0) {
    return 0;
  }
  let shared = 0;
  for (const item of a) {
    if (b.has(item)) {
      shared++;
    }
  }
  return shared / (a.size + b.size - shared);
}

function ratio(x: number, y: number): number {
  if (x === 0 && y === 0) {
    return 1;
  }
  return Math.min(x, y) / Math.max(x, y);
}

export function extractFeatures(a: string, b: string): number[] {
  const tokensA = tokens(a);
  const tokensB = tokens(b);
  return [
    jaccard(charTrigrams(a), charTrigrams(b)),
    jaccard(new Set(tokensA), new Set(tokensB)),
    jaccard(digitRuns(a), digitRuns(b)),
    ratio(a.length, b.length),
    ratio(tokensA.length, tokensB.length),
  ];
}
