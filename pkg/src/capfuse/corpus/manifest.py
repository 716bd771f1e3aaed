"""Manifest ingestion and serialization.

The manifest is line-delimited JSON, one clip per line, so corpora far larger
than memory can be streamed.  Fields per line: ``clip_id`` (string),
``audio_path`` (string), ``video_path`` (string or null), ``duration_s``
(number), ``tags`` (array of ``{label, confidence_pct}``).
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import DuplicateClipIdError, ManifestError
from .records import ClipRecord, Tag


def _parse_line(line: str, lineno: int) -> ClipRecord:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"line {lineno}: expected an object, got {type(raw).__name__}")

    def require(key: str):
        if key not in raw:
            raise ManifestError(f"line {lineno}: missing field {key!r}")
        return raw[key]

    clip_id = require("clip_id")
    if not isinstance(clip_id, str) or not clip_id:
        raise ManifestError(f"line {lineno}: clip_id must be a non-empty string")
    audio_path = require("audio_path")
    if not isinstance(audio_path, str) or not audio_path:
        raise ManifestError(f"line {lineno}: audio_path must be a non-empty string")
    video_path = raw.get("video_path")
    if video_path is not None and not isinstance(video_path, str):
        raise ManifestError(f"line {lineno}: video_path must be a string or null")
    duration = require("duration_s")
    if not isinstance(duration, (int, float)) or duration <= 0:
        raise ManifestError(f"line {lineno}: duration_s must be a positive number")

    tags: list[Tag] = []
    for i, t in enumerate(raw.get("tags", [])):
        if not isinstance(t, dict) or "label" not in t or "confidence_pct" not in t:
            raise ManifestError(f"line {lineno}: tags[{i}] must have label and confidence_pct")
        pct = t["confidence_pct"]
        if not isinstance(pct, (int, float)) or not 0 <= pct <= 100:
            raise ManifestError(f"line {lineno}: tags[{i}].confidence_pct must be in [0, 100]")
        tags.append(Tag(label=str(t["label"]), confidence_pct=float(pct)))

    return ClipRecord(
        clip_id=clip_id,
        media_audio=audio_path,
        media_video=video_path,
        duration_s=float(duration),
        tags=tags,
    )


def load_manifest(path: str | Path) -> list[ClipRecord]:
    """Load all clip records; every stage starts out pending.

    Raises ManifestError naming the line for malformed content and
    DuplicateClipIdError naming both lines for a repeated clip_id.
    """
    path = Path(path)
    records: list[ClipRecord] = []
    seen: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = _parse_line(line, lineno)
            if record.clip_id in seen:
                raise DuplicateClipIdError(record.clip_id, seen[record.clip_id], lineno)
            seen[record.clip_id] = lineno
            records.append(record)
    return records


def record_to_manifest_dict(record: ClipRecord) -> dict:
    return {
        "clip_id": record.clip_id,
        "audio_path": record.media_audio,
        "video_path": record.media_video,
        "duration_s": record.duration_s,
        "tags": [{"label": t.label, "confidence_pct": t.confidence_pct} for t in record.tags],
    }


def write_manifest(records: list[ClipRecord], path: str | Path) -> None:
    """Serialize records back to manifest lines (inverse of load_manifest)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_manifest_dict(record), ensure_ascii=False))
            fh.write("\n")
