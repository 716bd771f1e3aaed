"""Parsing of raw synthesizer output into a FusedCaption.

Model replies arrive as free text: bare JSON, fenced JSON, JSON wrapped in
prose, or the uncertainty sentinel on its own.  The rules here are strict
about structure (both keys required, caption non-empty, ambiguities a list
of strings) but tolerant about packaging.
"""

from __future__ import annotations

import json

from ..corpus import FusedCaption
from ..errors import FusionParseError, FusionSchemaError
from ..prompts import AMBIGUITIES_KEY, CAPTION_KEY, UNCERTAIN_SENTINEL

_EXCERPT_LEN = 120


def _excerpt(text: str) -> str:
    flat = " ".join(text.split())
    return flat if len(flat) <= _EXCERPT_LEN else flat[: _EXCERPT_LEN - 3] + "..."


def _strip_fences(text: str) -> str:
    """Unwrap a reply that is one fenced code block; otherwise return as-is."""
    stripped = text.strip()
    if not (stripped.startswith("```") and stripped.endswith("```") and len(stripped) > 6):
        return stripped
    inner = stripped[3:-3]
    first_newline = inner.find("\n")
    if first_newline == -1:
        return inner.strip()
    # Drop the fence-info line (``` or ```json or similar).
    return inner[first_newline + 1 :].strip()


def _balanced_objects(text: str):
    """Yield top-level brace-balanced substrings, string/escape aware."""
    depth = 0
    start = -1
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"' and depth > 0:
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]


def first_json_object(text: str) -> dict | list | None:
    """First brace-balanced substring that parses as JSON, or None."""
    for candidate in _balanced_objects(text):
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            continue
    return None


def parse_fusion_output(clip_id: str, raw: str) -> FusedCaption:
    """Interpret a synthesizer reply for one clip.

    The reply is uncertain only when, after unwrapping a code fence, it is
    exactly the sentinel; a sentinel buried in prose does not count.
    Otherwise the first brace-balanced substring that parses as JSON is the
    payload: it must carry both expected keys, a non-empty string caption,
    and a list-of-strings ambiguities field.  Replies with no parseable
    JSON raise FusionParseError; structurally wrong JSON raises
    FusionSchemaError.
    """
    if not raw or not raw.strip():
        raise FusionParseError(f"{clip_id}: empty synthesizer output")
    if _strip_fences(raw) == UNCERTAIN_SENTINEL:
        return FusedCaption(clip_id=clip_id, uncertain=True)

    payload = first_json_object(raw)
    if payload is None or not isinstance(payload, dict):
        raise FusionParseError(f"{clip_id}: no JSON object in output: {_excerpt(raw)}")

    if AMBIGUITIES_KEY not in payload:
        raise FusionSchemaError(f"{clip_id}: missing key {AMBIGUITIES_KEY!r}")
    if CAPTION_KEY not in payload:
        raise FusionSchemaError(f"{clip_id}: missing key {CAPTION_KEY!r}")
    caption = payload[CAPTION_KEY]
    if not isinstance(caption, str) or not caption.strip():
        raise FusionSchemaError(f"{clip_id}: caption must be a non-empty string")
    ambiguities = payload[AMBIGUITIES_KEY]
    if not isinstance(ambiguities, list) or not all(isinstance(a, str) for a in ambiguities):
        raise FusionSchemaError(f"{clip_id}: ambiguities must be a list of strings")
    return FusedCaption(
        clip_id=clip_id,
        ambiguities=[a.strip() for a in ambiguities if a.strip()],
        caption=caption.strip(),
        uncertain=False,
    )
