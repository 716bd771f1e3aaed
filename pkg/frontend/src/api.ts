/** HTTP client for the annotation service, plus an offline submit queue.
 *
 * Server-rejected submits (4xx) are final and surfaced with the body's
 * error string; only transport failures are retryable, and those park
 * the payload in a visible queue.
 */

import { canonicalSubmitBody } from "./payload.js";
import type { Bootstrap, SubmitAck, SubmitFields, TaskView } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type SubmitResult =
  | { kind: "accepted"; ack: SubmitAck }
  | { kind: "rejected"; status: number; message: string }
  | { kind: "offline" };

/** Which form control a server rejection points at, for highlighting. */
export function offendingField(message: string): "detailness" | "phrase_errors" | "extra_units" | null {
  if (message.startsWith("detailness")) return "detailness";
  if (message.startsWith("phrase_errors")) return "phrase_errors";
  if (message.startsWith("extra_units")) return "extra_units";
  return null;
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.base + path);
    if (!resp.ok) {
      const body = await resp.json().catch(() => ({}));
      throw new Error(body.error ?? `GET ${path} failed with ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  bootstrap(): Promise<Bootstrap> {
    return this.getJson("/bootstrap");
  }

  async tasksFor(annotator: string): Promise<TaskView[]> {
    const data = await this.getJson<{ tasks: TaskView[] }>(
      `/annotation/tasks?annotator=${encodeURIComponent(annotator)}`,
    );
    return data.tasks;
  }

  audioUrl(clipId: string): string {
    return `${this.base}/audio/${encodeURIComponent(clipId)}`;
  }

  async submit(fields: SubmitFields): Promise<SubmitResult> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.base}/annotation/labels`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: canonicalSubmitBody(fields),
      });
    } catch {
      return { kind: "offline" };
    }
    if (resp.ok) {
      return { kind: "accepted", ack: (await resp.json()) as SubmitAck };
    }
    const body = await resp.json().catch(() => ({}));
    return {
      kind: "rejected",
      status: resp.status,
      message: typeof body.error === "string" ? body.error : `HTTP ${resp.status}`,
    };
  }
}

export interface QueuedSubmit {
  fields: SubmitFields;
  attempts: number;
}

/**
 * Holds submits that could not reach the server. flush() retries in
 * order and stops at the first transport failure so ordering survives a
 * flaky connection; rejections drop out of the queue and are reported.
 */
export class SubmitQueue {
  private readonly items: QueuedSubmit[] = [];

  constructor(private readonly client: ApiClient) {}

  pending(): readonly QueuedSubmit[] {
    return this.items;
  }

  async submit(fields: SubmitFields): Promise<SubmitResult> {
    const result = await this.client.submit(fields);
    if (result.kind === "offline") {
      this.items.push({ fields, attempts: 1 });
    }
    return result;
  }

  async flush(): Promise<SubmitResult[]> {
    const results: SubmitResult[] = [];
    while (this.items.length > 0) {
      const head = this.items[0];
      const result = await this.client.submit(head.fields);
      if (result.kind === "offline") {
        head.attempts += 1;
        break;
      }
      this.items.shift();
      results.push(result);
    }
    return results;
  }
}
