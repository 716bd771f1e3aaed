import { describe, expect, it } from "vitest";

import {
  addExtra,
  buildSubmit,
  cyclePhrase,
  isComplete,
  newDraft,
  phraseText,
  removeExtra,
  scoreDraft,
  setDetailness,
  setExtraError,
  setExtraText,
  setPhrase,
} from "../src/draft.js";
import type { TaskView } from "../src/types.js";

const task: TaskView = {
  task_id: "t7",
  clip_id: "clip-7",
  caption: "Rain hits a tin roof while a kettle whistles.",
  flagged_phrases: [
    { start: 0, end: 4 },
    { start: 29, end: 35 },
  ],
  audio_url: "/audio/clip-7",
};

describe("draft state", () => {
  it("starts unjudged and incomplete", () => {
    const draft = newDraft(task);
    expect(draft.selections).toEqual([null, null]);
    expect(isComplete(draft)).toBe(false);
    expect(scoreDraft(draft)).toMatchObject({ judged: 0, total: 2, partial: true });
  });

  it("slices phrase text from spans", () => {
    expect(phraseText(task, 0)).toBe("Rain");
    expect(phraseText(task, 1)).toBe("kettle");
  });

  it("completeness needs every phrase, every extra, and detailness", () => {
    const draft = newDraft(task);
    setPhrase(draft, 0, 0);
    setPhrase(draft, 1, 0.5);
    expect(isComplete(draft)).toBe(false);
    setDetailness(draft, 3);
    expect(isComplete(draft)).toBe(true);

    const i = addExtra(draft);
    expect(isComplete(draft)).toBe(false);
    setExtraText(draft, i, "distant thunder");
    expect(isComplete(draft)).toBe(false);
    setExtraError(draft, i, 1);
    expect(isComplete(draft)).toBe(true);
  });

  it("blank extra rows do not count as units", () => {
    const draft = newDraft(task);
    setPhrase(draft, 0, 1);
    setPhrase(draft, 1, 0);
    addExtra(draft);
    expect(scoreDraft(draft).total).toBe(2);
    setExtraText(draft, 0, "hum");
    expect(scoreDraft(draft).total).toBe(3);
    removeExtra(draft, 0);
    expect(scoreDraft(draft).total).toBe(2);
  });

  it("extras enter the payload after the flagged phrases, in order", () => {
    const draft = newDraft(task);
    setPhrase(draft, 0, 0);
    setPhrase(draft, 1, 1);
    setDetailness(draft, 1);
    const a = addExtra(draft);
    setExtraText(draft, a, " hum ");
    setExtraError(draft, a, 0.5);
    const fields = buildSubmit(task, draft, "a2");
    expect(fields.phrase_errors).toEqual([0, 1, 0.5]);
    expect(fields.extra_units).toEqual(["hum"]);
  });

  it("cycle walks null -> 0 -> 0.5 -> 1 -> null", () => {
    const draft = newDraft(task);
    expect(cyclePhrase(draft, 0)).toBe(0);
    expect(cyclePhrase(draft, 0)).toBe(0.5);
    expect(cyclePhrase(draft, 0)).toBe(1);
    expect(cyclePhrase(draft, 0)).toBe(null);
  });

  it("a locked draft rejects edits", () => {
    const draft = newDraft(task);
    draft.locked = true;
    expect(() => setPhrase(draft, 0, 0)).toThrow(/submitted/);
    expect(() => setDetailness(draft, 2)).toThrow(/submitted/);
    expect(() => addExtra(draft)).toThrow(/submitted/);
  });

  it("bounds-checks phrase indices", () => {
    const draft = newDraft(task);
    expect(() => setPhrase(draft, 2, 0)).toThrow(/index/);
  });
});
