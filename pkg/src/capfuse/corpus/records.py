"""Core record types shared by every pipeline stage.

A ClipRecord is one ten-second media item from the source manifest.  The
pipeline turns it into a CueBundle (the per-modality descriptions), then a
FusedCaption (the synthesized caption), then a scored, filter-flagged shard
record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Stage names in topological order.  The DAG over them lives in
# capfuse.pipeline.stages; records only track per-stage status.
STAGES: tuple[str, ...] = (
    "separate",
    "asr",
    "audio_cap",
    "music_gate",
    "music_cap",
    "video_cap",
    "fuse",
    "embed_score",
    "filter",
)

# Cue-extraction stages the fusion step waits on.
CUE_STAGES: tuple[str, ...] = ("asr", "audio_cap", "music_cap", "video_cap")

STATUS_PENDING = "pending"
STATUS_DONE = "done"
STATUS_FAILED = "failed"
STATUS_SKIPPED = "skipped"


@dataclass
class Tag:
    """One weak label with its confidence percentage (0-100)."""

    label: str
    confidence_pct: float


@dataclass
class ClipRecord:
    """One media item: identifiers, media references, tags, stage status."""

    clip_id: str
    media_audio: str
    media_video: str | None
    duration_s: float
    tags: list[Tag] = field(default_factory=list)
    stage_status: dict[str, str] = field(
        default_factory=lambda: {s: STATUS_PENDING for s in STAGES}
    )

    def tag_line(self) -> str:
        return render_tag_line([(t.label, t.confidence_pct) for t in self.tags])


@dataclass
class CueBundle:
    """The extracted modality cues for one clip, input to fusion.

    ``music_caption`` is non-empty only when the music gate passed.
    """

    clip_id: str
    audio_caption: str = ""
    speech_transcript: str = ""
    music_caption: str = ""
    video_caption: str = ""
    tag_line: str = ""

    def has_any_cue(self) -> bool:
        return any(
            (self.audio_caption, self.speech_transcript, self.music_caption, self.video_caption)
        )

    def to_dict(self) -> dict:
        return {
            "audio_caption": self.audio_caption,
            "speech_transcript": self.speech_transcript,
            "music_caption": self.music_caption,
            "video_caption": self.video_caption,
            "tag_line": self.tag_line,
        }


@dataclass
class FusedCaption:
    """Parsed synthesizer output.

    ``uncertain`` is True exactly when the model emitted the uncertainty
    sentinel; then caption and ambiguities are empty.  Otherwise the caption
    is non-empty.
    """

    clip_id: str
    ambiguities: list[str] = field(default_factory=list)
    caption: str = ""
    uncertain: bool = False

    def __post_init__(self) -> None:
        if self.uncertain:
            if self.caption or self.ambiguities:
                raise ValueError("uncertain caption must have empty caption and ambiguities")
        elif not self.caption:
            raise ValueError("non-uncertain caption must be non-empty")


@dataclass
class SimilarityScore:
    """Cosine similarity between a clip's audio embedding and its caption embedding."""

    clip_id: str
    cosine: float

    def __post_init__(self) -> None:
        if not -1.0 - 1e-9 <= self.cosine <= 1.0 + 1e-9:
            raise ValueError(f"cosine out of range for {self.clip_id}: {self.cosine}")


@dataclass
class ShardRecord:
    """One finalized dataset row: caption, score, and the filter verdict."""

    clip_id: str
    caption: str
    ambiguities: list[str]
    cosine: float
    kept: bool
    cue_bundle: dict

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "caption": self.caption,
            "ambiguities": self.ambiguities,
            "cosine": self.cosine,
            "kept": self.kept,
            "cue_bundle": self.cue_bundle,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShardRecord":
        return cls(
            clip_id=d["clip_id"],
            caption=d["caption"],
            ambiguities=list(d["ambiguities"]),
            cosine=float(d["cosine"]),
            kept=bool(d["kept"]),
            cue_bundle=dict(d["cue_bundle"]),
        )


def _format_pct(value: float) -> str:
    """Render a confidence percentage without a spurious trailing ``.0``."""
    if float(value) == int(value):
        return str(int(value))
    return repr(float(value))


def render_tag_line(tags: list[tuple[str, float]]) -> str:
    """Render tags as comma-separated ``Label(P%)`` entries in input order.

    Empty input renders as the empty string; the fusion prompt treats that as
    "no tag information available".
    """
    for label, pct in tags:
        if not 0 <= pct <= 100:
            raise ValueError(f"confidence out of range for tag {label!r}: {pct}")
    return ", ".join(f"{label}({_format_pct(pct)}%)" for label, pct in tags)
