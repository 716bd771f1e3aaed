"""Backend client with bounded retry and typed per-role operations."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from ..errors import BackendRejected, ConfigError, ProtocolError, TransportFailure
from . import protocol


@dataclass(frozen=True)
class BackendEndpoint:
    """Where a role lives and how patiently to talk to it."""

    role: str
    base_url: str
    timeout_s: float = 30.0
    max_retries: int = 2
    backoff_base_ms: int = 250

    def __post_init__(self) -> None:
        if self.role not in protocol.ROLES:
            raise ConfigError("role", f"unknown role {self.role!r}")
        if not self.base_url:
            raise ConfigError("base_url", "must be non-empty")
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s", "must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries", "must be >= 0")
        if self.backoff_base_ms < 0:
            raise ConfigError("backoff_base_ms", "must be >= 0")


@dataclass(frozen=True)
class GateResult:
    """Music-gate verdict; passed means score cleared the threshold."""

    score: float
    threshold: float
    passed: bool

    def __post_init__(self) -> None:
        if self.passed != (self.score >= self.threshold):
            raise ValueError("passed must equal score >= threshold")


class Transport(Protocol):
    def send(self, method: str, url: str, body: dict | None, timeout_s: float) -> tuple[int, dict]:
        """Return (status_code, parsed JSON body); raise TransportFailure on network errors."""
        ...


class HttpTransport:
    def __init__(self, client: httpx.Client | None = None) -> None:
        self._client = client or httpx.Client()

    def send(self, method: str, url: str, body: dict | None, timeout_s: float) -> tuple[int, dict]:
        try:
            resp = self._client.request(method, url, json=body, timeout=timeout_s)
        except httpx.TimeoutException as exc:
            raise TransportFailure(f"timeout talking to {url}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransportFailure(f"transport error talking to {url}: {exc}") from exc
        try:
            parsed = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON response from {url}") from exc
        if not isinstance(parsed, dict):
            raise ProtocolError(f"expected JSON object from {url}")
        return resp.status_code, parsed

    def close(self) -> None:
        self._client.close()


@dataclass
class CallStats:
    calls: int = 0
    retries: int = 0
    failures: int = 0


class BackendClient:
    """One role's endpoint plus retry policy and wire validation.

    Retryable failures (network errors, timeouts, 5xx) are retried up to
    max_retries times; retry i sleeps backoff_base_ms * 2**(i-1) before the
    next attempt.  4xx responses are the backend refusing the request and are
    surfaced immediately.  The sleep function is injectable so tests can pin
    the clock.
    """

    def __init__(
        self,
        endpoint: BackendEndpoint,
        transport: Transport,
        sleep=time.sleep,
        max_in_flight: int | None = None,
    ) -> None:
        self.endpoint = endpoint
        self._transport = transport
        self._sleep = sleep
        self._gate = threading.BoundedSemaphore(max_in_flight) if max_in_flight else None
        self._meta: dict | None = None
        self.stats = CallStats()
        self.last_retries = 0

    # -- plumbing ---------------------------------------------------------

    def _url(self, op: str) -> str:
        return f"{self.endpoint.base_url.rstrip('/')}/v1/{op}"

    def _send(self, method: str, url: str, body: dict | None) -> tuple[int, dict]:
        if self._gate is None:
            return self._transport.send(method, url, body, self.endpoint.timeout_s)
        with self._gate:
            return self._transport.send(method, url, body, self.endpoint.timeout_s)

    def meta(self) -> dict:
        """Handshake; cached for the client's lifetime."""
        if self._meta is None:
            status, body = self._send("GET", self._url("meta"), None)
            if status != 200:
                raise ProtocolError(f"meta returned HTTP {status} for {self.endpoint.role}")
            protocol.validate_meta(body)
            if body["role"] != self.endpoint.role:
                raise ProtocolError(
                    f"endpoint serves role {body['role']!r}, expected {self.endpoint.role!r}"
                )
            self._meta = body
        return self._meta

    def _call(self, op: str, request: dict):
        protocol.validate_request(request)
        url = self._url(op)
        attempts = 1 + self.endpoint.max_retries
        self.stats.calls += 1
        self.last_retries = 0
        last_exc: Exception | None = None
        for attempt in range(1, attempts + 1):
            if attempt > 1:
                delay_ms = self.endpoint.backoff_base_ms * 2 ** (attempt - 2)
                self._sleep(delay_ms / 1000.0)
                self.stats.retries += 1
                self.last_retries += 1
            try:
                status, body = self._send("POST", url, request)
            except TransportFailure as exc:
                last_exc = exc
                continue
            if 500 <= status < 600:
                last_exc = TransportFailure(f"{op} returned HTTP {status}")
                continue
            if 400 <= status < 500:
                self.stats.failures += 1
                message = body.get("error", {}).get("message", "") if isinstance(body, dict) else ""
                raise BackendRejected(status, message or f"{op} rejected")
            protocol.validate_response(body, op)
            if not body["ok"]:
                self.stats.failures += 1
                err = body.get("error") or {}
                raise BackendRejected(status, err.get("message", f"{op} reported failure"))
            return body["result"]
        self.stats.failures += 1
        raise TransportFailure(
            f"{op} for role {self.endpoint.role} failed after {attempts} attempts: {last_exc}"
        )

    # -- typed operations -------------------------------------------------

    def separate(self, clip_id: str, audio_ref: str) -> tuple[str, str]:
        result = self._call(
            "separate", protocol.build_request(clip_id, self.endpoint.role, media=audio_ref)
        )
        return result["vocal"], result["accompaniment"]

    def classify_music(self, clip_id: str, audio_ref: str, threshold: float) -> GateResult:
        result = self._call(
            "classify", protocol.build_request(clip_id, self.endpoint.role, media=audio_ref)
        )
        score = float(result["music_score"])
        return GateResult(score=score, threshold=threshold, passed=score >= threshold)

    def generate_text(
        self,
        clip_id: str,
        prompt: str,
        media: str | list[str] | None = None,
        params: dict | None = None,
    ) -> str:
        if not prompt or not prompt.strip():
            raise ValueError("prompt must be non-empty")
        return self._call(
            "generate",
            protocol.build_request(clip_id, self.endpoint.role, prompt=prompt, media=media, params=params),
        )

    def embed(self, clip_id: str, kind: str, payload: str, params: dict | None = None) -> list[float]:
        """Embed text (payload in prompt) or audio (payload as media ref)."""
        if not payload:
            raise ValueError("embed payload must be non-empty")
        merged = {"kind": kind, **(params or {})}
        if kind == "text":
            request = protocol.build_request(clip_id, self.endpoint.role, prompt=payload, params=merged)
        else:
            request = protocol.build_request(clip_id, self.endpoint.role, media=payload, params=merged)
        vector = self._call("embed", request)
        expected = self.meta().get("embed_dim")
        if expected is not None and len(vector) != expected:
            raise ProtocolError(
                f"embedder returned {len(vector)} dims, handshake promised {expected}"
            )
        return [float(v) for v in vector]
