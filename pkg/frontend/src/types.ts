/** Wire and view types shared across the annotator page. */

/** Judgment for one content unit. */
export type ErrorValue = 0 | 0.5 | 1;

export type Detailness = 1 | 2 | 3;

/** Character span into the task caption, half-open. */
export interface PhraseSpan {
  start: number;
  end: number;
}

/** One assigned task as served by GET /annotation/tasks. */
export interface TaskView {
  task_id: string;
  clip_id: string;
  caption: string;
  flagged_phrases: PhraseSpan[];
  audio_url: string;
}

export interface Bootstrap {
  annotators: string[];
  task_count: number;
  annotators_per_task: number;
}

/** Annotator-added content unit; text typed by hand, judged like a phrase. */
export interface ExtraUnit {
  text: string;
  error: ErrorValue | null;
}

/** Body of POST /annotation/labels. Key order is the canonical wire order. */
export interface SubmitFields {
  task_id: string;
  annotator_id: string;
  detailness: Detailness;
  phrase_errors: number[];
  extra_units: string[];
}

/** Server acknowledgment: its own recomputation of the scores. */
export interface SubmitAck {
  task_id: string;
  annotator_id: string;
  rate: number;
  score: number;
  binarized: number;
  labels_for_task: number;
}
