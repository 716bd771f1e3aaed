from __future__ import annotations

import json
from pathlib import Path

import pytest

from capfuse.backends import DeterministicBackends, MockTransport, make_mock_clients
from capfuse.config import mock_config
from capfuse.corpus import ClipRecord, Tag
from capfuse.pipeline import PipelineRunner

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def make_clip(i: int, video: bool = True, tags: list[Tag] | None = None) -> ClipRecord:
    clip_id = f"clip-{i:04d}"
    return ClipRecord(
        clip_id=clip_id,
        media_audio=f"audio/{clip_id}.wav",
        media_video=f"video/{clip_id}.mp4" if video else None,
        duration_s=10.0,
        tags=tags if tags is not None else [Tag("Speech", 100), Tag("Rain", 87.5)],
    )


def make_records(n: int, all_video: bool = True) -> list[ClipRecord]:
    return [make_clip(i, video=all_video or i % 3 != 2) for i in range(n)]


def make_runner(
    seed: int = 0,
    faults: dict | None = None,
    workers: int = 8,
    backend_kwargs: dict | None = None,
    clock=None,
    **config_kwargs,
) -> tuple[PipelineRunner, MockTransport, DeterministicBackends]:
    config = mock_config(seed=seed, workers=workers, **config_kwargs)
    backends = DeterministicBackends(
        seed=seed, embed_dim=config.mock_embed_dim, **(backend_kwargs or {})
    )
    transport = MockTransport(backends, faults=faults)
    clients, transport = make_mock_clients(backends, transport=transport)
    kwargs = {"clock": clock} if clock is not None else {}
    runner = PipelineRunner(config, clients=clients, transport=transport, **kwargs)
    return runner, transport, backends


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text(encoding="utf-8"))
