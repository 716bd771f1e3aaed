"""Stage dependency graph and cache fingerprints.

Each stage's fingerprint hashes the things that determine its output: the
backend identity, the prompt template, stage parameters, and the
fingerprints of the stages it consumes.  Changing the integration prompt
therefore invalidates fuse and everything downstream of it while every
cue-stage cache entry stays valid.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..corpus import ClipRecord

# Direct inputs per stage; media references enter at the leaves.
STAGE_PARENTS: dict[str, tuple[str, ...]] = {
    "separate": (),
    "asr": ("separate",),
    "audio_cap": (),
    "music_gate": ("separate",),
    "music_cap": ("music_gate",),
    "video_cap": (),
    "fuse": ("asr", "audio_cap", "music_gate", "music_cap", "video_cap"),
    "embed_score": ("fuse",),
}


def _h(*parts: str | None) -> str:
    joined = "\x1f".join("-" if p is None else p for p in parts)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class StageIdentity:
    """Everything besides the clip that shapes stage outputs."""

    model_ids: dict[str, str]
    prompt_hashes: dict[str, str]
    music_gate_threshold: float
    similarity_threshold: float


class FingerprintChain:
    """Per-clip stage fingerprints, derived lazily and memoized."""

    def __init__(self, identity: StageIdentity, clip: ClipRecord):
        self.identity = identity
        self.clip = clip
        self._memo: dict[str, str] = {}

    def of(self, stage: str) -> str:
        if stage in self._memo:
            return self._memo[stage]
        ident = self.identity
        clip = self.clip
        if stage == "separate":
            fp = _h("separate", ident.model_ids["separator"], clip.media_audio)
        elif stage == "asr":
            fp = _h("asr", ident.model_ids["asr"], ident.prompt_hashes["asr"], self.of("separate"))
        elif stage == "audio_cap":
            fp = _h(
                "audio_cap",
                ident.model_ids["audio_captioner"],
                ident.prompt_hashes["audio_caption"],
                clip.media_audio,
            )
        elif stage == "music_gate":
            fp = _h(
                "music_gate",
                ident.model_ids["music_gate"],
                repr(ident.music_gate_threshold),
                self.of("separate"),
            )
        elif stage == "music_cap":
            fp = _h(
                "music_cap",
                ident.model_ids["music_captioner"],
                ident.prompt_hashes["music_caption"],
                self.of("music_gate"),
            )
        elif stage == "video_cap":
            fp = _h(
                "video_cap",
                ident.model_ids["video_captioner"],
                ident.prompt_hashes["video_caption"],
                clip.media_video,
            )
        elif stage == "fuse":
            fp = _h(
                "fuse",
                ident.model_ids["synthesizer"],
                ident.prompt_hashes["integration"],
                clip.tag_line(),
                self.of("asr"),
                self.of("audio_cap"),
                self.of("music_gate"),
                self.of("music_cap"),
                self.of("video_cap") if clip.media_video else None,
            )
        elif stage == "embed_score":
            fp = _h("embed_score", ident.model_ids["embedder"], self.of("fuse"), clip.media_audio)
        else:
            raise KeyError(f"unknown stage {stage!r}")
        self._memo[stage] = fp
        return fp
