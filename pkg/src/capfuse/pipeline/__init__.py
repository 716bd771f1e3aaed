from .parse import parse_fusion_output
from .runner import (
    ClipOutcome,
    PipelineRunner,
    RunResult,
    RunSummary,
    STATUS_FAILED,
    STATUS_FUSED,
    STATUS_UNCERTAIN,
    cosine_of,
)
from .stages import STAGE_PARENTS, FingerprintChain, StageIdentity

__all__ = [
    "parse_fusion_output",
    "ClipOutcome",
    "PipelineRunner",
    "RunResult",
    "RunSummary",
    "STATUS_FAILED",
    "STATUS_FUSED",
    "STATUS_UNCERTAIN",
    "cosine_of",
    "STAGE_PARENTS",
    "FingerprintChain",
    "StageIdentity",
]
