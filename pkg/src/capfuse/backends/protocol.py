"""Wire protocol shared by all backend roles.

One HTTP+JSON protocol regardless of the model behind an endpoint:

    POST {base}/v1/{separate|classify|generate|embed}
        {clip_id, role, prompt?, media_b64_or_url?, params}
    ->  {ok, result, model_id, latency_ms} | {ok: false, error, ...}

    GET {base}/v1/meta -> {role, model_id, embed_dim?}

Text payloads for embedding travel in ``prompt``; media references travel in
``media_b64_or_url``.
"""

from __future__ import annotations

import jsonschema

from ..errors import ProtocolError

ROLES: tuple[str, ...] = (
    "separator",
    "asr",
    "audio_captioner",
    "music_gate",
    "music_captioner",
    "video_captioner",
    "synthesizer",
    "embedder",
)

# Roles whose responses are raw text via the generate op.
TEXT_ROLES: tuple[str, ...] = (
    "asr",
    "audio_captioner",
    "music_captioner",
    "video_captioner",
    "synthesizer",
)

OPS: tuple[str, ...] = ("separate", "classify", "generate", "embed")

REQUEST_SCHEMA = {
    "type": "object",
    "required": ["clip_id", "role", "params"],
    "properties": {
        "clip_id": {"type": "string", "minLength": 1},
        "role": {"enum": list(ROLES)},
        "prompt": {"type": ["string", "null"]},
        "media_b64_or_url": {
            "type": ["string", "array", "null"],
            "items": {"type": "string"},
        },
        "params": {"type": "object"},
    },
    "additionalProperties": False,
}

RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["ok", "result", "model_id", "latency_ms"],
    "properties": {
        "ok": {"type": "boolean"},
        "result": {},
        "model_id": {"type": "string"},
        "latency_ms": {"type": "number", "minimum": 0},
        "error": {
            "type": "object",
            "properties": {"code": {"type": "string"}, "message": {"type": "string"}},
        },
    },
    "additionalProperties": False,
}

META_SCHEMA = {
    "type": "object",
    "required": ["role", "model_id"],
    "properties": {
        "role": {"enum": list(ROLES)},
        "model_id": {"type": "string", "minLength": 1},
        "embed_dim": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

# Per-op result shapes inside a successful response.
RESULT_SCHEMAS = {
    "separate": {
        "type": "object",
        "required": ["vocal", "accompaniment"],
        "properties": {
            "vocal": {"type": "string", "minLength": 1},
            "accompaniment": {"type": "string", "minLength": 1},
        },
        "additionalProperties": False,
    },
    "classify": {
        "type": "object",
        "required": ["music_score"],
        "properties": {"music_score": {"type": "number", "minimum": 0, "maximum": 1}},
        "additionalProperties": False,
    },
    "generate": {"type": "string"},
    "embed": {"type": "array", "items": {"type": "number"}, "minItems": 1},
}


def build_request(
    clip_id: str,
    role: str,
    prompt: str | None = None,
    media: str | list[str] | None = None,
    params: dict | None = None,
) -> dict:
    return {
        "clip_id": clip_id,
        "role": role,
        "prompt": prompt,
        "media_b64_or_url": media,
        "params": params or {},
    }


def validate_request(body: dict) -> None:
    try:
        jsonschema.validate(body, REQUEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ProtocolError(f"request violates wire schema: {exc.message}") from exc


def validate_response(body: dict, op: str) -> None:
    try:
        jsonschema.validate(body, RESPONSE_SCHEMA)
        if body.get("ok"):
            jsonschema.validate(body["result"], RESULT_SCHEMAS[op])
    except jsonschema.ValidationError as exc:
        raise ProtocolError(f"response violates wire schema for {op!r}: {exc.message}") from exc


def validate_meta(body: dict) -> None:
    try:
        jsonschema.validate(body, META_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ProtocolError(f"meta violates wire schema: {exc.message}") from exc
