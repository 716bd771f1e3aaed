/** Canonical wire encoding of a submit body.
 *
 * The server and its fixtures serialize with compact separators and raw
 * unicode; JSON.stringify does the same once the key order is pinned by
 * construction. Building the object literal field by field keeps the
 * byte sequence stable no matter what order a caller assembled theirs.
 */

import type { SubmitFields } from "./types.js";

export function canonicalSubmitBody(fields: SubmitFields): string {
  return JSON.stringify({
    task_id: fields.task_id,
    annotator_id: fields.annotator_id,
    detailness: fields.detailness,
    phrase_errors: fields.phrase_errors,
    extra_units: fields.extra_units,
  });
}
