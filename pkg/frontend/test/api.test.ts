// Client behavior against a scripted transport: acks, rejection
// surfacing, and the offline queue. No real server here; the parity
// suite covers that.

import { describe, expect, it } from "vitest";

import { ApiClient, offendingField, SubmitQueue, type FetchLike } from "../src/api.js";
import type { SubmitFields } from "../src/types.js";

const fields = (task: string): SubmitFields => ({
  task_id: task,
  annotator_id: "a1",
  detailness: 2,
  phrase_errors: [0],
  extra_units: [],
});

const json = (status: number, body: unknown): Response =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });

/** Pops one canned reaction per call; "down" simulates no network. */
function scripted(reactions: (Response | "down")[]): FetchLike {
  return async () => {
    const next = reactions.shift();
    if (next === undefined) throw new Error("unexpected request");
    if (next === "down") throw new TypeError("fetch failed");
    return next;
  };
}

describe("submit", () => {
  it("parses the ack on 201", async () => {
    const client = new ApiClient(
      "",
      scripted([
        json(201, {
          task_id: "t0",
          annotator_id: "a1",
          rate: 0,
          score: 5,
          binarized: 0,
          labels_for_task: 1,
        }),
      ]),
    );
    const result = await client.submit(fields("t0"));
    expect(result.kind).toBe("accepted");
    if (result.kind === "accepted") {
      expect(result.ack.score).toBe(5);
      expect(result.ack.labels_for_task).toBe(1);
    }
  });

  it("surfaces the server's 409 message verbatim", async () => {
    const message = "annotator 'a3' is not assigned to task 't0'";
    const client = new ApiClient("", scripted([json(409, { error: message })]));
    const result = await client.submit(fields("t0"));
    expect(result).toEqual({ kind: "rejected", status: 409, message });
  });

  it("maps 400 messages to the offending control", async () => {
    const message =
      "phrase_errors must cover every flagged phrase plus extra units: expected 2 values, got 1";
    const client = new ApiClient("", scripted([json(400, { error: message })]));
    const result = await client.submit(fields("t0"));
    expect(result.kind).toBe("rejected");
    if (result.kind === "rejected") {
      expect(offendingField(result.message)).toBe("phrase_errors");
    }
  });

  it("reports a transport failure as offline", async () => {
    const client = new ApiClient("", scripted(["down"]));
    expect(await client.submit(fields("t0"))).toEqual({ kind: "offline" });
  });
});

describe("offending field mapping", () => {
  it("covers the validation messages", () => {
    expect(offendingField("detailness must be an integer in 1..3")).toBe("detailness");
    expect(offendingField("extra_units must be non-empty strings")).toBe("extra_units");
    expect(offendingField("phrase_errors values must be 0, 0.5 or 1")).toBe("phrase_errors");
    expect(offendingField("no task 'zz'")).toBe(null);
  });
});

describe("offline queue", () => {
  it("parks failed submits and flushes them in order once the network returns", async () => {
    const seen: string[] = [];
    const reactions: (Response | "down")[] = ["down", "down", "down"];
    const transport: FetchLike = async (url, init) => {
      const next = reactions.shift();
      if (next === "down") throw new TypeError("fetch failed");
      if (init?.body) seen.push((JSON.parse(String(init.body)) as SubmitFields).task_id);
      return json(201, { task_id: "", annotator_id: "", rate: 0, score: 5, binarized: 0, labels_for_task: 1 });
    };
    const queue = new SubmitQueue(new ApiClient("", transport));

    expect((await queue.submit(fields("t0"))).kind).toBe("offline");
    expect((await queue.submit(fields("t1"))).kind).toBe("offline");
    expect(queue.pending().map((q) => q.fields.task_id)).toEqual(["t0", "t1"]);

    // still down: flush keeps the queue, bumps the attempt count
    expect(await queue.flush()).toEqual([]);
    expect(queue.pending()[0].attempts).toBe(2);

    const results = await queue.flush();
    expect(results.map((r) => r.kind)).toEqual(["accepted", "accepted"]);
    expect(seen).toEqual(["t0", "t1"]);
    expect(queue.pending()).toHaveLength(0);
  });

  it("drops rejected submits from the queue and reports them", async () => {
    const reactions: (Response | "down")[] = [
      "down",
      json(409, { error: "task 't0' already has 2 labels" }),
    ];
    const queue = new SubmitQueue(new ApiClient("", scripted(reactions)));
    await queue.submit(fields("t0"));
    const results = await queue.flush();
    expect(results).toHaveLength(1);
    expect(results[0].kind).toBe("rejected");
    expect(queue.pending()).toHaveLength(0);
  });
});
