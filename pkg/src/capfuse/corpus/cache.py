"""Durable per-stage result cache.

Keys are content hashes of (clip_id, stage, config fingerprint), so a resumed
run only re-executes stages whose configuration changed.  Puts are atomic
(write to a temp file, then rename) and idempotent: repeating a put with
identical inputs stores nothing new and returns the same key.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

from ..errors import CacheError


def cache_key(clip_id: str, stage: str, fingerprint: str) -> str:
    h = hashlib.sha256()
    h.update(clip_id.encode("utf-8"))
    h.update(b"\x1f")
    h.update(stage.encode("utf-8"))
    h.update(b"\x1f")
    h.update(fingerprint.encode("utf-8"))
    return h.hexdigest()


class StageCache:
    """Filesystem-backed store of stage payloads, addressed by content key.

    Safe for concurrent readers and for concurrent writers of distinct keys;
    concurrent writers of the same key race benignly (same bytes either way).
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.bin"

    def put(self, clip_id: str, stage: str, payload: bytes, fingerprint: str) -> str:
        """Store payload; return its cache key.

        A key that already exists is left untouched (first write wins; inputs
        being identical, the bytes are identical too).
        """
        key = cache_key(clip_id, stage, fingerprint)
        target = self._path(key)
        if target.exists():
            return key
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(payload)
                os.replace(tmp, target)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
        except OSError as exc:
            raise CacheError(f"cache write failed for {key}: {exc}", retryable=True) from exc
        return key

    def get(self, clip_id: str, stage: str, fingerprint: str) -> bytes | None:
        """Return the cached payload, or None when absent."""
        target = self._path(cache_key(clip_id, stage, fingerprint))
        if not target.exists():
            return None
        try:
            return target.read_bytes()
        except OSError as exc:
            raise CacheError(f"cache read failed: {exc}", retryable=True) from exc

    def get_by_key(self, key: str) -> bytes | None:
        target = self._path(key)
        return target.read_bytes() if target.exists() else None

    def has(self, clip_id: str, stage: str, fingerprint: str) -> bool:
        return self._path(cache_key(clip_id, stage, fingerprint)).exists()
