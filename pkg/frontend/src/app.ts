/** Page wiring: task list, inline phrase toggles, live score, submit. */

import { ApiClient, offendingField, SubmitQueue } from "./api.js";
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
  type Draft,
} from "./draft.js";
import type { Detailness, ErrorValue, TaskView } from "./types.js";

const api = new ApiClient("");
const queue = new SubmitQueue(api);

const el = {
  annotator: document.getElementById("annotator") as HTMLSelectElement,
  taskList: document.getElementById("task-list") as HTMLUListElement,
  work: document.getElementById("work") as HTMLElement,
  status: document.getElementById("status") as HTMLElement,
  queueNote: document.getElementById("queue-note") as HTMLElement,
};

let currentTask: TaskView | null = null;
let currentDraft: Draft | null = null;

function setStatus(text: string, isError = false): void {
  el.status.textContent = text;
  el.status.className = isError ? "error" : "";
}

function renderQueueNote(): void {
  const n = queue.pending().length;
  el.queueNote.textContent = n > 0 ? `${n} submit(s) queued offline` : "";
  el.queueNote.onclick = n > 0 ? () => void flushQueue() : null;
}

async function flushQueue(): Promise<void> {
  const results = await queue.flush();
  renderQueueNote();
  if (results.length > 0) {
    setStatus(`flushed ${results.length} queued submit(s)`);
    await refreshTasks();
  }
}

async function refreshTasks(): Promise<void> {
  const annotator = el.annotator.value;
  if (!annotator) return;
  const tasks = await api.tasksFor(annotator);
  el.taskList.replaceChildren(
    ...tasks.map((task) => {
      const item = document.createElement("li");
      const link = document.createElement("a");
      link.href = "#";
      link.textContent = `${task.task_id} (${task.clip_id})`;
      link.onclick = (ev) => {
        ev.preventDefault();
        openTask(task);
      };
      item.append(link);
      return item;
    }),
  );
  if (tasks.length === 0) {
    const item = document.createElement("li");
    item.textContent = "nothing pending";
    el.taskList.append(item);
  }
}

const errorLabel = (v: ErrorValue | null) => (v === null ? "?" : String(v));

function openTask(task: TaskView): void {
  currentTask = task;
  currentDraft = newDraft(task);
  renderWork();
}

function clearHighlights(): void {
  for (const node of el.work.querySelectorAll(".highlight")) {
    node.classList.remove("highlight");
  }
}

function renderWork(): void {
  const task = currentTask;
  const draft = currentDraft;
  if (!task || !draft) {
    el.work.replaceChildren();
    return;
  }
  el.work.replaceChildren();

  const audio = document.createElement("audio");
  audio.controls = true;
  audio.src = api.audioUrl(task.clip_id);
  el.work.append(audio);

  // caption with phrase toggles spliced in at their spans
  const caption = document.createElement("p");
  caption.id = "caption";
  let cursor = 0;
  task.flagged_phrases.forEach((span, i) => {
    caption.append(task.caption.slice(cursor, span.start));
    const mark = document.createElement("button");
    mark.className = "phrase";
    mark.textContent = `${phraseText(task, i)} [${errorLabel(draft.selections[i])}]`;
    mark.onclick = () => {
      cyclePhrase(draft, i);
      renderWork();
    };
    caption.append(mark);
    cursor = span.end;
  });
  caption.append(task.caption.slice(cursor));
  el.work.append(caption);

  const extras = document.createElement("div");
  extras.id = "extra-units";
  draft.extras.forEach((unit, i) => {
    const row = document.createElement("div");
    const text = document.createElement("input");
    text.value = unit.text;
    text.placeholder = "missed content unit";
    text.onchange = () => setExtraText(draft, i, text.value);
    const pick = document.createElement("button");
    pick.textContent = errorLabel(unit.error);
    pick.onclick = () => {
      const order: (ErrorValue | null)[] = [null, 0, 0.5, 1];
      setExtraError(draft, i, order[(order.indexOf(unit.error) + 1) % order.length]);
      renderWork();
    };
    const drop = document.createElement("button");
    drop.textContent = "x";
    drop.onclick = () => {
      removeExtra(draft, i);
      renderWork();
    };
    row.append(text, pick, drop);
    extras.append(row);
  });
  const add = document.createElement("button");
  add.textContent = "add missed unit";
  add.onclick = () => {
    addExtra(draft);
    renderWork();
  };
  extras.append(add);
  el.work.append(extras);

  const detail = document.createElement("div");
  detail.id = "detailness";
  detail.append("detailness: ");
  for (const v of [1, 2, 3] as Detailness[]) {
    const pick = document.createElement("button");
    pick.textContent = draft.detailness === v ? `[${v}]` : String(v);
    pick.onclick = () => {
      setDetailness(draft, v);
      renderWork();
    };
    detail.append(pick);
  }
  el.work.append(detail);

  const live = scoreDraft(draft);
  const panel = document.createElement("p");
  panel.id = "live-score";
  panel.textContent =
    `rate ${live.rate.toFixed(2)}% score ${live.score}` +
    (live.partial ? ` (partial: ${live.judged}/${live.total} judged)` : "");
  el.work.append(panel);

  const submit = document.createElement("button");
  submit.id = "submit";
  submit.textContent = draft.locked ? "submitted" : "submit";
  submit.disabled = draft.locked || !isComplete(draft);
  submit.onclick = () => void doSubmit();
  el.work.append(submit);
}

async function doSubmit(): Promise<void> {
  const task = currentTask;
  const draft = currentDraft;
  if (!task || !draft) return;
  clearHighlights();
  const fields = buildSubmit(task, draft, el.annotator.value);
  const result = await queue.submit(fields);
  renderQueueNote();
  if (result.kind === "accepted") {
    draft.locked = true;
    setStatus(
      `stored: server rate ${result.ack.rate.toFixed(2)}% score ${result.ack.score} ` +
        `(${result.ack.labels_for_task}/2 labels)`,
    );
    renderWork();
    await refreshTasks();
  } else if (result.kind === "rejected") {
    setStatus(`${result.status}: ${result.message}`, true);
    const field = offendingField(result.message);
    const target =
      field === "detailness"
        ? "#detailness"
        : field === "extra_units"
          ? "#extra-units"
          : field === "phrase_errors"
            ? "#caption"
            : null;
    if (target) {
      el.work.querySelector(target)?.classList.add("highlight");
    }
  } else {
    setStatus("offline: submit queued, click the queue note to retry", true);
  }
}

async function boot(): Promise<void> {
  const info = await api.bootstrap();
  el.annotator.replaceChildren(
    ...info.annotators.map((name) => {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      return opt;
    }),
  );
  el.annotator.onchange = () => void refreshTasks();
  setStatus(`${info.task_count} tasks, ${info.annotators_per_task} annotators per task`);
  await refreshTasks();
}

void boot();
