"""Domain types, manifest ingestion, and durable shard/cache persistence."""

from .cache import StageCache, cache_key
from .manifest import load_manifest, record_to_manifest_dict, write_manifest
from .records import (
    CUE_STAGES,
    STAGES,
    STATUS_DONE,
    STATUS_FAILED,
    STATUS_PENDING,
    STATUS_SKIPPED,
    ClipRecord,
    CueBundle,
    FusedCaption,
    ShardRecord,
    SimilarityScore,
    Tag,
    render_tag_line,
)
from .shards import ShardWriter, read_shards, shard_paths

__all__ = [
    "CUE_STAGES",
    "STAGES",
    "STATUS_DONE",
    "STATUS_FAILED",
    "STATUS_PENDING",
    "STATUS_SKIPPED",
    "ClipRecord",
    "CueBundle",
    "FusedCaption",
    "ShardRecord",
    "SimilarityScore",
    "StageCache",
    "ShardWriter",
    "Tag",
    "cache_key",
    "load_manifest",
    "read_shards",
    "record_to_manifest_dict",
    "render_tag_line",
    "shard_paths",
    "write_manifest",
]
