"""Append-only dataset shards.

Shards are JSONL files written with a canonical serialization (sorted keys,
compact separators, UTF-8) so that two runs with identical inputs produce
byte-identical files.  A shard set has a single writer; readers may stream
any number of shards concurrently.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

from .records import ShardRecord

SHARD_PATTERN = "shard-{:05d}.jsonl"


def _canonical(record: ShardRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class ShardWriter:
    """Serialized writer for one shard set.

    Records must be appended in a deterministic order (the runner uses
    manifest order); the writer rolls to a new file every
    ``records_per_shard`` records.
    """

    def __init__(self, out_dir: str | Path, records_per_shard: int = 10_000):
        if records_per_shard < 1:
            raise ValueError("records_per_shard must be >= 1")
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.records_per_shard = records_per_shard
        self._count = 0
        self._paths: list[Path] = []
        self._fh = None
        self._seen: set[str] = set()

    def append(self, record: ShardRecord) -> None:
        if record.clip_id in self._seen:
            raise ValueError(f"clip_id {record.clip_id!r} already written to this shard set")
        self._seen.add(record.clip_id)
        if self._count % self.records_per_shard == 0:
            if self._fh is not None:
                self._fh.close()
            path = self.out_dir / SHARD_PATTERN.format(len(self._paths))
            self._fh = path.open("w", encoding="utf-8")
            self._paths.append(path)
        self._fh.write(_canonical(record))
        self._fh.write("\n")
        self._count += 1

    def close(self) -> list[Path]:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        return list(self._paths)

    def __enter__(self) -> "ShardWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def shard_paths(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).glob("shard-*.jsonl"))


def read_shards(directory: str | Path) -> Iterator[ShardRecord]:
    """Stream records from every shard in a directory, in shard order."""
    for path in shard_paths(directory):
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield ShardRecord.from_dict(json.loads(line))
