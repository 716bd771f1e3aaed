"""Dataset-level analytics: lengths, modality usage, semantic terms, distances.

Everything here is a pure function over in-memory inputs; the stats and
distances CLI surfaces assemble these over shard and embedding files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from . import kernels
from .errors import ExtractionSchemaError, ModalityParseError
from .pipeline.parse import first_json_object

MODALITY_KEYS: tuple[str, ...] = (
    "audio_caption",
    "speech_caption",
    "music_caption",
    "video_caption",
)

EXTRACTION_KEYS: tuple[str, ...] = ("instrument", "emotion", "music genre", "scene")


# -- caption length ------------------------------------------------------


@dataclass(frozen=True)
class LengthStats:
    count: int
    mean: float | None
    min: int | None
    max: int | None
    bin_edges: tuple[float, ...]
    bin_counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "bin_edges": list(self.bin_edges),
            "bin_counts": list(self.bin_counts),
        }


def token_length(caption: str) -> int:
    """Whitespace-delimited word count."""
    return len(caption.split())


def length_stats(captions: Iterable[str], bins: int = 50) -> LengthStats:
    lengths = np.array([token_length(c) for c in captions], dtype=np.int64)
    if lengths.size == 0:
        return LengthStats(0, None, None, None, (), ())
    counts, edges = np.histogram(lengths, bins=bins)
    return LengthStats(
        count=int(lengths.size),
        mean=float(lengths.mean()),
        min=int(lengths.min()),
        max=int(lengths.max()),
        bin_edges=tuple(float(e) for e in edges),
        bin_counts=tuple(int(c) for c in counts),
    )


# -- similarity score histogram -----------------------------------------


def score_histogram(cosines: Iterable[float], width: float = 0.05) -> dict:
    values = np.array(list(cosines), dtype=np.float64)
    edges = np.round(np.arange(-1.0, 1.0 + width / 2, width), 9)
    counts, _ = np.histogram(values, bins=edges)
    return {"bin_edges": [float(e) for e in edges], "bin_counts": [int(c) for c in counts]}


# -- modality attribution ------------------------------------------------


def parse_modality_reply(reply: str) -> list[str]:
    """Extract which source caption types a reply names.

    Matching is case-insensitive substring search for the four canonical
    type names, returned in canonical order; a reply naming none of them
    is unusable.
    """
    lowered = reply.lower()
    used = [key for key in MODALITY_KEYS if key in lowered]
    if not used:
        raise ModalityParseError(f"no caption types found in reply: {reply[:80]!r}")
    return used


def modalities_from_cues(cue_bundle: dict) -> list[str]:
    """Which source modalities were available, from a shard's cue bundle."""
    slots = (
        ("audio_caption", "audio_caption"),
        ("speech_transcript", "speech_caption"),
        ("music_caption", "music_caption"),
        ("video_caption", "video_caption"),
    )
    return [name for field, name in slots if cue_bundle.get(field)]


def multimodality_fraction(usages: Sequence[Sequence[str]]) -> float:
    """Fraction of captions drawing on at least two source modalities."""
    if not usages:
        raise ValueError("need at least one caption's modality usage")
    multi = sum(1 for used in usages if len(set(used)) >= 2)
    return multi / len(usages)


def modality_usage_counts(usages: Sequence[Sequence[str]]) -> dict[str, int]:
    counts = {key: 0 for key in MODALITY_KEYS}
    for used in usages:
        for key in set(used):
            if key in counts:
                counts[key] += 1
    return counts


# -- semantic term extraction -------------------------------------------


@dataclass(frozen=True)
class SemanticExtraction:
    """Validated object-extraction output: grounded terms only."""

    fields: dict[str, tuple[str, ...]]
    dropped: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "fields": {k: list(v) for k, v in self.fields.items()},
            "dropped": list(self.dropped),
        }


def validate_semantic_extraction(reply: str, caption: str) -> SemanticExtraction:
    """Parse an extraction reply and keep only terms present in the caption.

    The reply must contain a JSON object with all four list-of-string keys.
    Terms are grounded by case-insensitive substring match against the
    caption; ungrounded terms are dropped and reported, not fatal.
    """
    payload = first_json_object(reply)
    if payload is None or not isinstance(payload, dict):
        raise ExtractionSchemaError(f"no JSON object in extraction reply: {reply[:80]!r}")
    missing = [k for k in EXTRACTION_KEYS if k not in payload]
    if missing:
        raise ExtractionSchemaError(f"extraction reply missing keys: {', '.join(missing)}")
    lowered = caption.lower()
    fields: dict[str, tuple[str, ...]] = {}
    dropped: list[str] = []
    for key in EXTRACTION_KEYS:
        value = payload[key]
        if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
            raise ExtractionSchemaError(f"extraction field {key!r} must be a list of strings")
        kept = []
        for term in value:
            if term.lower() in lowered:
                kept.append(term)
            else:
                dropped.append(term)
        fields[key] = tuple(kept)
    return SemanticExtraction(fields=fields, dropped=tuple(dropped))


def extraction_presence_fractions(extractions: Sequence[SemanticExtraction]) -> dict[str, float]:
    """Per category, the fraction of captions with at least one grounded term."""
    if not extractions:
        raise ValueError("need at least one extraction")
    return {
        key: sum(1 for e in extractions if e.fields.get(key)) / len(extractions)
        for key in EXTRACTION_KEYS
    }


# -- embedding cluster distances ----------------------------------------


@dataclass(frozen=True)
class DistanceReport:
    mode: str
    categories: tuple[str, ...]
    sizes: dict[str, int]
    intra: dict[str, float | None]
    inter: dict[str, dict[str, float]]
    singleton_categories: tuple[str, ...]
    subsampled: dict[str, bool]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "categories": list(self.categories),
            "sizes": self.sizes,
            "intra": self.intra,
            "inter": self.inter,
            "singleton_categories": list(self.singleton_categories),
            "subsampled": self.subsampled,
        }


def _normalized_rows(ids: list[str], embeddings: dict[str, Sequence[float]]) -> NDArray[np.float64]:
    rows = np.array([embeddings[i] for i in ids], dtype=np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero-norm embedding for id {ids[int(zero[0])]!r}")
    return rows / norms[:, None]


def cluster_distances(
    embeddings: dict[str, Sequence[float]],
    labels: dict[str, str],
    mode: str = "pairwise",
    cap: int = 5000,
    seed: int = 0,
) -> DistanceReport:
    """Mean cosine distances within and between labeled embedding clusters.

    Pairwise mode averages 1 - cos over member pairs; centroid mode uses
    distances to or between centroids of the unit-normalized members.
    Categories above the cap are subsampled deterministically.
    """
    if mode not in ("pairwise", "centroid"):
        raise ValueError(f"mode must be pairwise or centroid, got {mode!r}")
    if not embeddings:
        raise ValueError("need at least one embedding")
    unlabeled = sorted(set(embeddings) - set(labels))
    if unlabeled:
        raise ValueError(f"ids missing labels: {', '.join(unlabeled[:5])}")
    missing = sorted(set(labels) - set(embeddings))
    if missing:
        raise ValueError(f"labeled ids missing embeddings: {', '.join(missing[:5])}")

    by_cat: dict[str, list[str]] = {}
    for clip_id in sorted(embeddings):
        by_cat.setdefault(labels[clip_id], []).append(clip_id)
    categories = tuple(sorted(by_cat))

    rng = np.random.default_rng(seed)
    subsampled: dict[str, bool] = {}
    members: dict[str, NDArray[np.float64]] = {}
    sizes: dict[str, int] = {}
    for cat in categories:
        ids = by_cat[cat]
        sizes[cat] = len(ids)
        subsampled[cat] = len(ids) > cap
        if subsampled[cat]:
            chosen = rng.choice(len(ids), size=cap, replace=False)
            ids = [ids[i] for i in sorted(chosen)]
        members[cat] = _normalized_rows(ids, embeddings)

    singletons = tuple(cat for cat in categories if members[cat].shape[0] < 2)
    intra: dict[str, float | None] = {}
    centroids: dict[str, NDArray[np.float64]] = {}
    for cat in categories:
        rows = members[cat]
        centroids[cat] = rows.mean(axis=0)
        if rows.shape[0] < 2:
            intra[cat] = None
        elif mode == "pairwise":
            intra[cat] = 1.0 - kernels.mean_pair_cos_within(rows)
        else:
            c = centroids[cat]
            cn = np.linalg.norm(c)
            if cn == 0.0:
                raise ValueError(f"degenerate centroid for category {cat!r}")
            intra[cat] = float(np.mean(1.0 - rows @ (c / cn)))

    inter: dict[str, dict[str, float]] = {cat: {} for cat in categories}
    for i, a in enumerate(categories):
        for b in categories[i + 1 :]:
            if mode == "pairwise":
                d = 1.0 - kernels.mean_cos_between(members[a], members[b])
            else:
                ca, cb = centroids[a], centroids[b]
                na, nb = np.linalg.norm(ca), np.linalg.norm(cb)
                if na == 0.0 or nb == 0.0:
                    raise ValueError(f"degenerate centroid between {a!r} and {b!r}")
                d = float(1.0 - (ca @ cb) / (na * nb))
            inter[a][b] = d
            inter[b][a] = d
    return DistanceReport(
        mode=mode,
        categories=categories,
        sizes=sizes,
        intra=intra,
        inter=inter,
        singleton_categories=singletons,
        subsampled=subsampled,
    )
