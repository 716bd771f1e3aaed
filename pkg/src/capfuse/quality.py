"""Caption quality math: rubric scoring, agreement, calibration.

Rates and F scores are computed with exact rationals internally so bucket
boundaries and threshold ties never hinge on float rounding; floats appear
only at the reporting edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels

DEFAULT_BETA = "1.05"

# Allowed per-unit error marks: clean, partly wrong, wrong.
ERROR_VALUES = (Fraction(0), Fraction(1, 2), Fraction(1))


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def hallucination_rate(errors: Sequence[float | Fraction]) -> Fraction:
    """Percentage of erroneous content in a caption.

    Each entry marks one content unit as 0 (grounded), 0.5 (partly wrong)
    or 1 (wrong); the rate is 100 * sum / count, returned exactly.
    """
    if not errors:
        raise ValueError("need at least one content unit")
    total = Fraction(0)
    for v in errors:
        fr = _as_fraction(v)
        if fr not in ERROR_VALUES:
            raise ValueError(f"error value must be 0, 0.5 or 1, got {v!r}")
        total += fr
    return 100 * total / len(errors)


def bucket_score(rate: float | Fraction) -> int:
    """Map a hallucination percentage onto the 1..5 rubric.

    Bands are half-open at the top: [0, 10] -> 5, (10, 25] -> 4,
    (25, 40] -> 3, (40, 50] -> 2, (50, 100] -> 1.
    """
    r = _as_fraction(rate)
    if r < 0 or r > 100:
        raise ValueError(f"rate must lie in [0, 100], got {rate!r}")
    if r <= 10:
        return 5
    if r <= 25:
        return 4
    if r <= 40:
        return 3
    if r <= 50:
        return 2
    return 1


def binarize_score(score: int) -> int:
    """Collapse the rubric: heavily hallucinated (score <= 2) -> 1, else 0."""
    if score not in (1, 2, 3, 4, 5):
        raise ValueError(f"score must be 1..5, got {score!r}")
    return 1 if score <= 2 else 0


def exact_match_agreement(pairs: Sequence[tuple[object, object]]) -> Fraction:
    """Fraction of paired judgments that agree exactly."""
    if not pairs:
        raise ValueError("need at least one pair")
    equal = sum(1 for a, b in pairs if a == b)
    return Fraction(equal, len(pairs))


def f_beta(tp: int, fp: int, fn: int, beta: float | str | Fraction = DEFAULT_BETA) -> float:
    """F_beta from confusion counts; 0.0 when nothing is flagged or relevant.

    Computed as (1 + b^2) tp / ((1 + b^2) tp + b^2 fn + fp) with b exact,
    so precision == recall collapses to exactly that shared value.
    """
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError("counts must be non-negative")
    b = Fraction(str(beta)) if isinstance(beta, float) else Fraction(beta)
    if b <= 0:
        raise ValueError("beta must be positive")
    b2 = b * b
    denom = (1 + b2) * tp + b2 * fn + fp
    if denom == 0:
        return 0.0
    return float((1 + b2) * tp / denom)


def _f_beta_exact(tp: int, fp: int, fn: int, b2: Fraction) -> Fraction:
    denom = (1 + b2) * tp + b2 * fn + fp
    if denom == 0:
        return Fraction(0)
    return (1 + b2) * tp / denom


def precision(tp: int, fp: int) -> float | None:
    return tp / (tp + fp) if tp + fp else None


def recall(tp: int, fn: int) -> float | None:
    return tp / (tp + fn) if tp + fn else None


def threshold_grid(lo: float = -0.2, hi: float = 1.0, step: float = 0.005) -> list[float]:
    """Inclusive grid lo, lo+step, ..., hi with points snapped to 9 decimals."""
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("hi must be >= lo")
    count = int(round((hi - lo) / step))
    points = [round(lo + i * step, 9) for i in range(count + 1)]
    if points[-1] > hi + 1e-12:
        points.pop()
    return points


@dataclass(frozen=True)
class GridRow:
    threshold: float
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    f: float

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "f": self.f,
        }


@dataclass(frozen=True)
class CalibrationReport:
    beta: float
    step: float
    lo: float
    hi: float
    n_samples: int
    n_positive: int
    degenerate: bool
    chosen_threshold: float
    best_f: float
    exact_match_rate: float
    filter_rate: float
    rows: tuple[GridRow, ...]

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "step": self.step,
            "lo": self.lo,
            "hi": self.hi,
            "n_samples": self.n_samples,
            "n_positive": self.n_positive,
            "degenerate": self.degenerate,
            "chosen_threshold": self.chosen_threshold,
            "best_f": self.best_f,
            "exact_match_rate": self.exact_match_rate,
            "filter_rate": self.filter_rate,
            "grid": [row.to_dict() for row in self.rows],
        }

    def render_table(self, limit: int = 12) -> str:
        """Compact text view: the best rows by F, chosen one starred."""
        ranked = sorted(self.rows, key=lambda r: (-r.f, r.threshold))[:limit]
        lines = [f"{'':2}{'thresh':>8} {'tp':>6} {'fp':>6} {'fn':>6} {'tn':>6} {'F':>8}"]
        for row in sorted(ranked, key=lambda r: r.threshold):
            star = "* " if row.threshold == self.chosen_threshold else "  "
            lines.append(
                f"{star}{row.threshold:>8.3f} {row.tp:>6} {row.fp:>6} {row.fn:>6} {row.tn:>6} {row.f:>8.4f}"
            )
        lines.append(
            f"chosen threshold {self.chosen_threshold:.3f}  F={self.best_f:.4f}  "
            f"exact_match={self.exact_match_rate:.4f}  filter_rate={self.filter_rate:.4f}"
        )
        return "\n".join(lines)


def calibrate(
    samples: Iterable[tuple[float, int]],
    step: float = 0.005,
    lo: float = -0.2,
    hi: float = 1.0,
    beta: float | str | Fraction = DEFAULT_BETA,
) -> CalibrationReport:
    """Sweep discard thresholds over labeled cosines and pick the F-best one.

    Each sample is (cosine, label) with label 1 meaning the caption should
    be discarded.  A threshold t discards exactly the samples with cosine
    strictly below t.  Ties in F resolve to the lowest threshold.
    """
    pairs = list(samples)
    if not pairs:
        raise ValueError("need at least one sample")
    scores = np.array([c for c, _ in pairs], dtype=np.float64)
    labels = np.array([l for _, l in pairs], dtype=np.int64)
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    grid = threshold_grid(lo, hi, step)
    thresholds = np.array(grid, dtype=np.float64)
    tp, fp, fn, tn = kernels.threshold_sweep(scores, labels, thresholds)

    b = Fraction(str(beta)) if isinstance(beta, float) else Fraction(beta)
    b2 = b * b
    rows: list[GridRow] = []
    best_idx = 0
    best_fr = Fraction(-1)
    for i, t in enumerate(grid):
        fr = _f_beta_exact(int(tp[i]), int(fp[i]), int(fn[i]), b2)
        if fr > best_fr:
            best_fr = fr
            best_idx = i
        rows.append(
            GridRow(
                threshold=t,
                tp=int(tp[i]),
                fp=int(fp[i]),
                fn=int(fn[i]),
                tn=int(tn[i]),
                precision=precision(int(tp[i]), int(fp[i])),
                recall=recall(int(tp[i]), int(fn[i])),
                f=float(fr),
            )
        )
    chosen = rows[best_idx]
    n = len(pairs)
    return CalibrationReport(
        beta=float(b),
        step=step,
        lo=lo,
        hi=hi,
        n_samples=n,
        n_positive=int(labels.sum()),
        degenerate=bool(labels.min() == labels.max()),
        chosen_threshold=chosen.threshold,
        best_f=float(best_fr),
        exact_match_rate=(chosen.tp + chosen.tn) / n,
        filter_rate=(chosen.tp + chosen.fp) / n,
        rows=tuple(rows),
    )
