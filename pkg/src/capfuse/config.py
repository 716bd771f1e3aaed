"""Run configuration: endpoint wiring plus pipeline knobs.

Configs load from JSON; validation errors name the offending field with a
dotted path so service callers can surface them directly.  Endpoints with
a mock:// base URL are served by the in-process deterministic backends,
which is how desk-scale runs and tests work without real model servers.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .backends import (
    BackendClient,
    BackendEndpoint,
    DeterministicBackends,
    HttpTransport,
    MockTransport,
    ROLES,
)
from .errors import ConfigError
from .prompts import PromptSet


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    timeout_s: float = 30.0
    max_retries: int = 2
    backoff_base_ms: int = 250

    @property
    def is_mock(self) -> bool:
        return self.base_url.startswith("mock://")


@dataclass(frozen=True)
class RunConfig:
    endpoints: dict[str, EndpointConfig]
    similarity_threshold: float = 0.08
    music_gate_threshold: float = 0.5
    workers: int = 8
    per_endpoint_in_flight: int = 4
    clip_deadline_s: float = 300.0
    records_per_shard: int = 10_000
    seed: int = 0
    mock_embed_dim: int = 16
    prompt_overrides: dict[str, str] = field(default_factory=dict)

    def prompts(self) -> PromptSet:
        return PromptSet.from_paths(self.prompt_overrides)


_ENDPOINT_FIELDS = {"base_url", "timeout_s", "max_retries", "backoff_base_ms"}
_TOP_FIELDS = {
    "endpoints",
    "similarity_threshold",
    "music_gate_threshold",
    "workers",
    "per_endpoint_in_flight",
    "clip_deadline_s",
    "records_per_shard",
    "seed",
    "mock_embed_dim",
    "prompt_overrides",
}


def _require(cond: bool, fieldname: str, message: str) -> None:
    if not cond:
        raise ConfigError(fieldname, message)


def config_from_dict(data: dict) -> RunConfig:
    _require(isinstance(data, dict), "", "config must be a JSON object")
    for key in data:
        _require(key in _TOP_FIELDS, key, "unknown field")
    raw_endpoints = data.get("endpoints")
    _require(isinstance(raw_endpoints, dict), "endpoints", "must be an object")
    endpoints: dict[str, EndpointConfig] = {}
    for role, spec in raw_endpoints.items():
        prefix = f"endpoints.{role}"
        _require(role in ROLES, prefix, f"unknown role; expected one of {', '.join(ROLES)}")
        _require(isinstance(spec, dict), prefix, "must be an object")
        for key in spec:
            _require(key in _ENDPOINT_FIELDS, f"{prefix}.{key}", "unknown field")
        base_url = spec.get("base_url")
        _require(isinstance(base_url, str) and bool(base_url), f"{prefix}.base_url", "must be a non-empty string")
        timeout_s = spec.get("timeout_s", 30.0)
        _require(isinstance(timeout_s, (int, float)) and timeout_s > 0, f"{prefix}.timeout_s", "must be positive")
        max_retries = spec.get("max_retries", 2)
        _require(isinstance(max_retries, int) and max_retries >= 0, f"{prefix}.max_retries", "must be an int >= 0")
        backoff = spec.get("backoff_base_ms", 250)
        _require(isinstance(backoff, int) and backoff >= 0, f"{prefix}.backoff_base_ms", "must be an int >= 0")
        endpoints[role] = EndpointConfig(
            base_url=base_url, timeout_s=float(timeout_s), max_retries=max_retries, backoff_base_ms=backoff
        )
    missing = [r for r in ROLES if r not in endpoints]
    _require(not missing, "endpoints", f"missing roles: {', '.join(missing)}")

    sim = data.get("similarity_threshold", 0.08)
    _require(isinstance(sim, (int, float)) and -1.0 <= sim <= 1.0, "similarity_threshold", "must lie in [-1, 1]")
    gate = data.get("music_gate_threshold", 0.5)
    _require(isinstance(gate, (int, float)) and 0.0 <= gate <= 1.0, "music_gate_threshold", "must lie in [0, 1]")
    workers = data.get("workers", 8)
    _require(isinstance(workers, int) and workers >= 1, "workers", "must be an int >= 1")
    in_flight = data.get("per_endpoint_in_flight", 4)
    _require(isinstance(in_flight, int) and in_flight >= 1, "per_endpoint_in_flight", "must be an int >= 1")
    deadline = data.get("clip_deadline_s", 300.0)
    _require(isinstance(deadline, (int, float)) and deadline > 0, "clip_deadline_s", "must be positive")
    per_shard = data.get("records_per_shard", 10_000)
    _require(isinstance(per_shard, int) and per_shard >= 1, "records_per_shard", "must be an int >= 1")
    seed = data.get("seed", 0)
    _require(isinstance(seed, int), "seed", "must be an int")
    embed_dim = data.get("mock_embed_dim", 16)
    _require(isinstance(embed_dim, int) and embed_dim >= 2, "mock_embed_dim", "must be an int >= 2")
    overrides = data.get("prompt_overrides", {})
    _require(isinstance(overrides, dict), "prompt_overrides", "must be an object")
    for name, path in overrides.items():
        _require(isinstance(path, str), f"prompt_overrides.{name}", "must be a path string")

    return RunConfig(
        endpoints=endpoints,
        similarity_threshold=float(sim),
        music_gate_threshold=float(gate),
        workers=workers,
        per_endpoint_in_flight=in_flight,
        clip_deadline_s=float(deadline),
        records_per_shard=per_shard,
        seed=seed,
        mock_embed_dim=embed_dim,
        prompt_overrides={str(k): str(v) for k, v in overrides.items()},
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"config is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def mock_config(
    seed: int = 0,
    similarity_threshold: float = 0.08,
    music_gate_threshold: float = 0.5,
    workers: int = 8,
    **kwargs,
) -> RunConfig:
    """All-mock config, the default for desk-scale runs."""
    return RunConfig(
        endpoints={role: EndpointConfig(base_url=f"mock://{role}") for role in ROLES},
        similarity_threshold=similarity_threshold,
        music_gate_threshold=music_gate_threshold,
        workers=workers,
        seed=seed,
        **kwargs,
    )


def build_clients(
    config: RunConfig,
    sleep=time.sleep,
    backends: DeterministicBackends | None = None,
    mock_transport: MockTransport | None = None,
) -> tuple[dict[str, BackendClient], MockTransport | None]:
    """Construct one client per role, sharing transports.

    All mock:// endpoints share a single MockTransport (returned so callers
    can inspect counters); http endpoints share one HttpTransport.
    """
    http_transport: HttpTransport | None = None
    clients: dict[str, BackendClient] = {}
    if any(ep.is_mock for ep in config.endpoints.values()) and mock_transport is None:
        backends = backends or DeterministicBackends(seed=config.seed, embed_dim=config.mock_embed_dim)
        mock_transport = MockTransport(backends)
    for role, ep in config.endpoints.items():
        if ep.is_mock:
            transport = mock_transport
        else:
            if http_transport is None:
                http_transport = HttpTransport()
            transport = http_transport
        clients[role] = BackendClient(
            BackendEndpoint(
                role=role,
                base_url=ep.base_url,
                timeout_s=ep.timeout_s,
                max_retries=ep.max_retries,
                backoff_base_ms=ep.backoff_base_ms,
            ),
            transport,
            sleep=sleep,
            max_in_flight=config.per_endpoint_in_flight,
        )
    return clients, mock_transport
