/** Live hallucination scoring, arithmetic-identical to the server.
 *
 * The server computes the rate as an exact fraction and converts to a
 * double at the edge.  To land on the same double here, every error
 * value is scaled to an integer count of half units (0, 1, 2), summed
 * exactly, and divided once: (100 * halves) / (2 * n).  Numerator and
 * denominator are exact integers, so the single IEEE division is the
 * correctly rounded value of the same rational the server rounds.
 */

import type { ErrorValue } from "./types.js";

export interface LiveScore {
  /** Percentage over the judged units. */
  rate: number;
  /** Bucketed 1..5, 5 is clean. */
  score: number;
  binarized: 0 | 1;
  judged: number;
  total: number;
  /** True while unjudged units remain; the display labels it so. */
  partial: boolean;
}

export function hallucinationRate(values: readonly ErrorValue[]): number {
  if (values.length === 0) {
    return 0;
  }
  let halves = 0;
  for (const v of values) {
    if (v !== 0 && v !== 0.5 && v !== 1) {
      throw new Error(`error value must be 0, 0.5 or 1, got ${v}`);
    }
    halves += v * 2;
  }
  return (100 * halves) / (2 * values.length);
}

// Buckets close from above: a rate exactly on the edge takes the better
// score, matching the server's rubric.
export function bucketScore(rate: number): number {
  if (rate < 0 || rate > 100) {
    throw new Error(`rate must be within 0..100, got ${rate}`);
  }
  if (rate <= 10) return 5;
  if (rate <= 25) return 4;
  if (rate <= 40) return 3;
  if (rate <= 50) return 2;
  return 1;
}

export function binarizeScore(score: number): 0 | 1 {
  return score <= 2 ? 1 : 0;
}

/**
 * Score a draft mid-flight. Unjudged units are excluded and the result
 * is flagged partial; with nothing judged yet the display shows a clean
 * slate rather than an error.
 */
export function liveScore(
  judgedValues: readonly ErrorValue[],
  totalUnits: number,
): LiveScore {
  const rate = hallucinationRate(judgedValues);
  const score = bucketScore(rate);
  return {
    rate,
    score,
    binarized: binarizeScore(score),
    judged: judgedValues.length,
    total: totalUnits,
    partial: judgedValues.length < totalUnits,
  };
}
