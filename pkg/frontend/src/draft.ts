/** Local draft state for one task: selections, extra units, detailness.
 *
 * Nothing here talks to the network. The one invariant that matters is
 * completeness: a payload can only be built from a draft where every
 * flagged phrase is judged, every extra unit has text and a judgment,
 * and detailness is set.
 */

import { liveScore, type LiveScore } from "./scoring.js";
import type { Detailness, ErrorValue, ExtraUnit, SubmitFields, TaskView } from "./types.js";

export interface Draft {
  selections: (ErrorValue | null)[];
  extras: ExtraUnit[];
  detailness: Detailness | null;
  /** Set after a 2xx submit; a locked draft rejects further edits. */
  locked: boolean;
}

export function newDraft(task: TaskView): Draft {
  return {
    selections: task.flagged_phrases.map(() => null),
    extras: [],
    detailness: null,
    locked: false,
  };
}

function assertEditable(draft: Draft): void {
  if (draft.locked) {
    throw new Error("task already submitted");
  }
}

export function setPhrase(draft: Draft, index: number, value: ErrorValue | null): void {
  assertEditable(draft);
  if (index < 0 || index >= draft.selections.length) {
    throw new Error(`no flagged phrase at index ${index}`);
  }
  draft.selections[index] = value;
}

/** Cycle null -> 0 -> 0.5 -> 1 -> null, the click behavior of a toggle. */
export function cyclePhrase(draft: Draft, index: number): ErrorValue | null {
  const order: (ErrorValue | null)[] = [null, 0, 0.5, 1];
  const current = draft.selections[index];
  const next = order[(order.indexOf(current) + 1) % order.length];
  setPhrase(draft, index, next);
  return next;
}

export function addExtra(draft: Draft): number {
  assertEditable(draft);
  draft.extras.push({ text: "", error: null });
  return draft.extras.length - 1;
}

export function removeExtra(draft: Draft, index: number): void {
  assertEditable(draft);
  draft.extras.splice(index, 1);
}

export function setExtraText(draft: Draft, index: number, text: string): void {
  assertEditable(draft);
  draft.extras[index].text = text;
}

export function setExtraError(draft: Draft, index: number, value: ErrorValue | null): void {
  assertEditable(draft);
  draft.extras[index].error = value;
}

export function setDetailness(draft: Draft, value: Detailness | null): void {
  assertEditable(draft);
  draft.detailness = value;
}

// An extra row becomes a content unit once it has text; blank rows are
// scaffolding and never count.
function liveExtras(draft: Draft): ExtraUnit[] {
  return draft.extras.filter((u) => u.text.trim() !== "");
}

export function isComplete(draft: Draft): boolean {
  return (
    draft.detailness !== null &&
    draft.selections.every((v) => v !== null) &&
    draft.extras.every((u) => u.text.trim() !== "" && u.error !== null)
  );
}

/** Score over judged units only; see scoring.liveScore for the labeling. */
export function scoreDraft(draft: Draft): LiveScore {
  const judged: ErrorValue[] = [];
  for (const v of draft.selections) {
    if (v !== null) judged.push(v);
  }
  const extras = liveExtras(draft);
  for (const u of extras) {
    if (u.error !== null) judged.push(u.error);
  }
  return liveScore(judged, draft.selections.length + extras.length);
}

/**
 * Build the submit body. Refuses incomplete drafts: no label payload
 * leaves the client unless the completeness invariant holds.
 */
export function buildSubmit(task: TaskView, draft: Draft, annotator: string): SubmitFields {
  if (!isComplete(draft)) {
    throw new Error("draft incomplete: judge every phrase, finish extra units, set detailness");
  }
  const errors: number[] = draft.selections.map((v) => v as ErrorValue);
  const extraTexts: string[] = [];
  for (const u of draft.extras) {
    errors.push(u.error as ErrorValue);
    extraTexts.push(u.text.trim());
  }
  return {
    task_id: task.task_id,
    annotator_id: annotator,
    detailness: draft.detailness as Detailness,
    phrase_errors: errors,
    extra_units: extraTexts,
  };
}

/** Caption slice for a flagged span; the wire format carries offsets only. */
export function phraseText(task: TaskView, index: number): string {
  const span = task.flagged_phrases[index];
  return task.caption.slice(span.start, span.end);
}
