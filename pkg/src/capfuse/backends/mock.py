"""Deterministic in-process backends for desk-scale runs and tests.

DeterministicBackends answers every wire op as a pure function of
(seed, role, op, request), optionally overlaid with fixture files at
fixtures_dir/<role>/<clip_id>.json holding {"result": ...}.  MockTransport
speaks the wire protocol over mock:// URLs, validates both directions
against the schemas, counts attempts, logs a global call/return event
sequence, and can inject faults per (role, op, clip_id).
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from collections import Counter
from pathlib import Path
from urllib.parse import urlsplit

import numpy as np

from ..errors import ProtocolError, TransportFailure
from ..prompts import AMBIGUITIES_KEY, CAPTION_KEY, UNCERTAIN_SENTINEL
from . import protocol
from .client import BackendClient, BackendEndpoint

_NOUNS = ("rain", "engine", "crowd", "guitar", "footsteps", "wind", "birdsong", "traffic")
_SCENES = ("a narrow street", "an open field", "a small room", "a train platform")
_MOODS = ("calm", "tense", "lively", "muted")


def _digest(*parts: object) -> int:
    joined = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


def _unit_fraction(*parts: object) -> float:
    return _digest(*parts) / float(1 << 64)


class DeterministicBackends:
    """Pure responder: same seed and request always yield the same response."""

    def __init__(
        self,
        seed: int = 0,
        embed_dim: int = 16,
        fixtures_dir: str | Path | None = None,
        score_overrides: dict[str, float] | None = None,
        text_overrides: dict[tuple[str, str], str] | None = None,
    ) -> None:
        self.seed = seed
        self.embed_dim = embed_dim
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.score_overrides = dict(score_overrides or {})
        self.text_overrides = dict(text_overrides or {})

    # -- introspection helpers used by tests to derive expectations -------

    def music_score(self, clip_id: str) -> float:
        if clip_id in self.score_overrides:
            return self.score_overrides[clip_id]
        return round(_unit_fraction(self.seed, "music_gate", clip_id), 6)

    def is_uncertain(self, clip_id: str) -> bool:
        if ("synthesizer", clip_id) in self.text_overrides:
            return UNCERTAIN_SENTINEL == self.text_overrides[("synthesizer", clip_id)].strip()
        if self._fixture("synthesizer", clip_id) is not None:
            return False
        return _digest(self.seed, "fuse_variant", clip_id) % 10 == 8

    # -- response synthesis ----------------------------------------------

    def meta(self, role: str) -> dict:
        body = {"role": role, "model_id": f"mock-{role}-v1"}
        if role == "embedder":
            body["embed_dim"] = self.embed_dim
        return body

    def _fixture(self, role: str, clip_id: str):
        if self.fixtures_dir is None:
            return None
        path = self.fixtures_dir / role / f"{clip_id}.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["result"]

    def _phrase(self, clip_id: str, salt: str) -> str:
        noun = _NOUNS[_digest(self.seed, salt, clip_id, "n") % len(_NOUNS)]
        scene = _SCENES[_digest(self.seed, salt, clip_id, "s") % len(_SCENES)]
        mood = _MOODS[_digest(self.seed, salt, clip_id, "m") % len(_MOODS)]
        return f"{noun} in {scene}, {mood}"

    def _generate(self, role: str, clip_id: str, prompt: str) -> str:
        if (role, clip_id) in self.text_overrides:
            return self.text_overrides[(role, clip_id)]
        fixture = self._fixture(role, clip_id)
        if fixture is not None:
            return fixture
        if role == "synthesizer" and '"music genre"' in prompt:
            return self._extraction_reply(prompt)
        if role == "synthesizer" and "Format: ['type1', 'type2']" in prompt:
            return self._modality_reply(prompt)
        if role == "asr":
            if _digest(self.seed, "has_speech", clip_id) % 4 == 0:
                return ""
            return f"someone says clip {clip_id} take {_digest(self.seed, 'asr', clip_id) % 9}"
        if role == "audio_captioner":
            return f"The sound of {self._phrase(clip_id, 'aud')}."
        if role == "music_captioner":
            return f"A {_MOODS[_digest(self.seed, 'mus', clip_id) % len(_MOODS)]} melody with {_NOUNS[_digest(self.seed, 'mus2', clip_id) % len(_NOUNS)]} rhythm."
        if role == "video_captioner":
            return f"A view of {self._phrase(clip_id, 'vid')}."
        if role == "synthesizer":
            return self._fusion_text(clip_id)
        raise ProtocolError(f"role {role!r} does not generate text")

    def _extraction_reply(self, prompt: str) -> str:
        """Object-extraction pass: pull words from the quoted sentence."""
        match = re.search(r"Sentence: '(.*)'", prompt)
        words = [w.strip(".,:;!?()").lower() for w in (match.group(1) if match else "").split()]
        words = [w for w in words if len(w) > 3]
        fields: dict[str, list[str]] = {"instrument": [], "emotion": [], "music genre": [], "scene": []}
        for i, key in enumerate(fields):
            if words and _digest(self.seed, "objext", prompt, key) % 3 != 0:
                fields[key] = [words[_digest(self.seed, "objext_pick", prompt, i) % len(words)]]
        if _digest(self.seed, "objext_absent", prompt) % 4 == 0:
            fields["scene"] = fields["scene"] + ["unrelated_invented_place"]
        return json.dumps(fields, ensure_ascii=False)

    def _modality_reply(self, prompt: str) -> str:
        """Modality-attribution pass: a non-empty subset of source types."""
        names = ("audio_caption", "speech_caption", "music_caption", "video_caption")
        bits = _digest(self.seed, "modality", prompt)
        used = [n for i, n in enumerate(names) if (bits >> i) & 1]
        if not used:
            used = [names[bits % len(names)]]
        return "[" + ", ".join(f"'{n}'" for n in used) + "]"

    def _fusion_text(self, clip_id: str) -> str:
        variant = _digest(self.seed, "fuse_variant", clip_id) % 10
        if variant == 8:
            return UNCERTAIN_SENTINEL
        caption = f"Clip {clip_id} carries {self._phrase(clip_id, 'fuse')}."
        ambiguities: list[str] = []
        if _digest(self.seed, "fuse_amb", clip_id) % 3 == 0:
            ambiguities = [f"unclear source of {_NOUNS[_digest(self.seed, 'amb', clip_id) % len(_NOUNS)]}"]
        obj = {AMBIGUITIES_KEY: ambiguities, CAPTION_KEY: caption}
        text = json.dumps(obj, ensure_ascii=False)
        if variant == 4:
            return f"```json\n{text}\n```"
        if variant == 5:
            return f"Here is the integrated result:\n{text}"
        if variant == 6:
            return f"```\n{text}\n```"
        if variant == 7:
            return json.dumps({**obj, "Confidence": "high"}, ensure_ascii=False)
        if variant == 9:
            return f"{text}\nLet me know if anything needs adjusting."
        return text

    def _embed(self, kind: str, payload: str) -> list[float]:
        raw = hashlib.sha256(
            f"{self.seed}\x1fembed\x1f{kind}\x1f{payload}".encode("utf-8")
        ).digest()
        rng = np.random.default_rng(int.from_bytes(raw, "big"))
        vec = rng.standard_normal(self.embed_dim)
        vec /= np.linalg.norm(vec)
        return [float(v) for v in vec]

    def respond(self, op: str, request: dict) -> dict:
        role = request["role"]
        clip_id = request["clip_id"]
        if op == "separate":
            media = request.get("media_b64_or_url") or ""
            result = {"vocal": f"{media}#vocal", "accompaniment": f"{media}#accomp"}
        elif op == "classify":
            result = {"music_score": self.music_score(clip_id)}
        elif op == "generate":
            result = self._generate(role, clip_id, request.get("prompt") or "")
        elif op == "embed":
            kind = request.get("params", {}).get("kind", "text")
            payload = request.get("prompt") if kind == "text" else request.get("media_b64_or_url")
            if not payload:
                return {
                    "ok": False,
                    "result": None,
                    "model_id": f"mock-{role}-v1",
                    "latency_ms": 0.0,
                    "error": {"code": "empty_payload", "message": "nothing to embed"},
                }
            result = self._embed(kind, payload)
        else:
            raise ProtocolError(f"unknown op {op!r}")
        return {"ok": True, "result": result, "model_id": f"mock-{role}-v1", "latency_ms": 1.0}


class MockTransport:
    """Wire-level mock with schema validation, counters, events, faults.

    faults maps (role, op, clip_id) to a list of outcomes consumed one per
    attempt: "timeout" raises TransportFailure, "500" returns HTTP 500,
    "reject" returns HTTP 422, "ok" behaves normally.  An exhausted list
    behaves normally.
    """

    def __init__(
        self,
        backends: DeterministicBackends,
        faults: dict[tuple[str, str, str], list[str]] | None = None,
    ) -> None:
        self.backends = backends
        self.faults = {k: list(v) for k, v in (faults or {}).items()}
        self.counters: Counter[tuple[str, str, str]] = Counter()
        self.meta_counters: Counter[str] = Counter()
        self.events: list[tuple[int, str, str, str, str]] = []
        self._lock = threading.Lock()
        self._seq = 0

    def _log(self, phase: str, role: str, op: str, clip_id: str) -> int:
        with self._lock:
            self._seq += 1
            self.events.append((self._seq, phase, role, op, clip_id))
            return self._seq

    def calls(self, role: str | None = None, op: str | None = None, clip_id: str | None = None) -> int:
        return sum(
            n
            for (r, o, c), n in self.counters.items()
            if (role is None or r == role) and (op is None or o == op) and (clip_id is None or c == clip_id)
        )

    def send(self, method: str, url: str, body: dict | None, timeout_s: float) -> tuple[int, dict]:
        parts = urlsplit(url)
        op = parts.path.rsplit("/", 1)[-1]
        if op == "meta":
            role = parts.netloc
            with self._lock:
                self.meta_counters[role] += 1
            return 200, self.backends.meta(role)
        if body is None:
            raise ProtocolError(f"POST {op} requires a body")
        protocol.validate_request(body)
        role, clip_id = body["role"], body["clip_id"]
        if role != parts.netloc:
            raise ProtocolError(f"body role {role!r} does not match endpoint {parts.netloc!r}")
        with self._lock:
            self.counters[(role, op, clip_id)] += 1
            plan = self.faults.get((role, op, clip_id))
            outcome = plan.pop(0) if plan else "ok"
        self._log("call", role, op, clip_id)
        try:
            if outcome == "timeout":
                raise TransportFailure(f"injected timeout for {role}/{op}/{clip_id}")
            if outcome == "500":
                return 500, {"ok": False, "result": None, "model_id": "mock", "latency_ms": 0.0}
            if outcome == "reject":
                return 422, {
                    "ok": False,
                    "result": None,
                    "model_id": "mock",
                    "latency_ms": 0.0,
                    "error": {"code": "rejected", "message": f"injected rejection for {clip_id}"},
                }
            response = self.backends.respond(op, body)
            protocol.validate_response(response, op)
            return 200, response
        finally:
            self._log("return", role, op, clip_id)


def make_mock_clients(
    backends: DeterministicBackends,
    transport: MockTransport | None = None,
    roles: tuple[str, ...] = protocol.ROLES,
    max_retries: int = 2,
    backoff_base_ms: int = 250,
    sleep=lambda s: None,
    max_in_flight: int | None = 4,
) -> tuple[dict[str, BackendClient], MockTransport]:
    """Build one client per role sharing a single transport."""
    transport = transport or MockTransport(backends)
    clients = {
        role: BackendClient(
            BackendEndpoint(
                role=role,
                base_url=f"mock://{role}",
                max_retries=max_retries,
                backoff_base_ms=backoff_base_ms,
            ),
            transport,
            sleep=sleep,
            max_in_flight=max_in_flight,
        )
        for role in roles
    }
    return clients, transport


def as_httpx_handler(backends: DeterministicBackends):
    """Adapter so httpx.MockTransport can serve the wire protocol in tests."""
    import httpx

    def handler(request: httpx.Request) -> httpx.Response:
        op = request.url.path.rsplit("/", 1)[-1]
        if op == "meta":
            return httpx.Response(200, json=backends.meta(request.url.host))
        body = json.loads(request.content.decode("utf-8"))
        protocol.validate_request(body)
        return httpx.Response(200, json=backends.respond(op, body))

    return handler
