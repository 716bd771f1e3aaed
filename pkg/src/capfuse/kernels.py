"""Numeric kernels with numba and pure-numpy implementations.

The CAPFUSE_KERNELS env var picks the route: "numba" insists on the
compiled kernels, "numpy" forces the vectorized fallbacks, "auto" (or
unset) prefers numba when importable.  The flag is read per call so a
process can switch routes without reimporting.

Both routes are kept deliberately independent: the numpy side uses
closed forms and sorting tricks, the numba side uses explicit loops, so
agreement between them is a meaningful check rather than a tautology.
"""

from __future__ import annotations

import os

import numpy as np
from numpy.typing import NDArray

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


ENV_FLAG = "CAPFUSE_KERNELS"


def use_numba() -> bool:
    mode = os.environ.get(ENV_FLAG, "auto").strip().lower()
    if mode == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError(f"{ENV_FLAG}=numba but numba is not importable")
        return True
    if mode == "numpy":
        return False
    if mode in ("", "auto"):
        return HAVE_NUMBA
    raise ValueError(f"{ENV_FLAG} must be auto, numba, or numpy, got {mode!r}")


# -- mean pairwise cosine ------------------------------------------------
#
# Rows are assumed unit-norm; callers normalize once up front.  For unit
# vectors the mean over unordered pairs has the closed form
# (||sum||^2 - n) / (n(n-1)).


def _mean_pair_cos_within_np(unit_rows: NDArray[np.float64]) -> float:
    n = unit_rows.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows")
    s = unit_rows.sum(axis=0)
    return float((s @ s - n) / (n * (n - 1)))


@njit(cache=True)
def _mean_pair_cos_within_nb(unit_rows):  # pragma: no cover - measured via dispatch
    n, d = unit_rows.shape
    sums = np.zeros(d)
    for i in range(n):
        for k in range(d):
            sums[k] += unit_rows[i, k]
    ssq = 0.0
    for k in range(d):
        ssq += sums[k] * sums[k]
    return (ssq - n) / (n * (n - 1))


def mean_pair_cos_within(unit_rows: NDArray[np.float64]) -> float:
    """Mean cosine over unordered within-group pairs."""
    unit_rows = np.ascontiguousarray(unit_rows, dtype=np.float64)
    if use_numba():
        if unit_rows.shape[0] < 2:
            raise ValueError("need at least 2 rows")
        return float(_mean_pair_cos_within_nb(unit_rows))
    return _mean_pair_cos_within_np(unit_rows)


def _mean_cos_between_np(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("both groups must be non-empty")
    return float((a.sum(axis=0) @ b.sum(axis=0)) / (a.shape[0] * b.shape[0]))


@njit(cache=True)
def _mean_cos_between_nb(a, b):  # pragma: no cover - measured via dispatch
    na, d = a.shape
    nb = b.shape[0]
    sa = np.zeros(d)
    sb = np.zeros(d)
    for i in range(na):
        for k in range(d):
            sa[k] += a[i, k]
    for j in range(nb):
        for k in range(d):
            sb[k] += b[j, k]
    total = 0.0
    for k in range(d):
        total += sa[k] * sb[k]
    return total / (na * nb)


def mean_cos_between(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    """Mean cosine over all cross-group pairs."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if use_numba():
        if a.shape[0] == 0 or b.shape[0] == 0:
            raise ValueError("both groups must be non-empty")
        return float(_mean_cos_between_nb(a, b))
    return _mean_cos_between_np(a, b)


# -- threshold sweep -----------------------------------------------------
#
# Labels mark samples that *should* be discarded; a threshold t discards
# exactly the samples with score strictly below t.


def _threshold_sweep_np(
    scores: NDArray[np.float64], labels: NDArray[np.int64], thresholds: NDArray[np.float64]
) -> tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.int64], NDArray[np.int64]]:
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    pos_prefix = np.concatenate(([0], np.cumsum(labels[order])))
    total_pos = int(pos_prefix[-1])
    n = scores.shape[0]
    below = np.searchsorted(sorted_scores, thresholds, side="left")
    tp = pos_prefix[below]
    fp = below - tp
    fn = total_pos - tp
    tn = (n - total_pos) - fp
    return tp.astype(np.int64), fp.astype(np.int64), fn.astype(np.int64), tn.astype(np.int64)


@njit(cache=True)
def _threshold_sweep_nb(scores, labels, thresholds):  # pragma: no cover
    m = thresholds.shape[0]
    n = scores.shape[0]
    order = np.argsort(scores)
    sorted_scores = np.empty(n)
    pos_prefix = np.zeros(n + 1, dtype=np.int64)
    for idx in range(n):
        src = order[idx]
        sorted_scores[idx] = scores[src]
        pos_prefix[idx + 1] = pos_prefix[idx] + labels[src]
    total_pos = pos_prefix[n]
    tp = np.zeros(m, dtype=np.int64)
    fp = np.zeros(m, dtype=np.int64)
    fn = np.zeros(m, dtype=np.int64)
    tn = np.zeros(m, dtype=np.int64)
    for t in range(m):
        thr = thresholds[t]
        lo, hi = 0, n
        while lo < hi:  # first index with sorted_scores[idx] >= thr
            mid = (lo + hi) // 2
            if sorted_scores[mid] < thr:
                lo = mid + 1
            else:
                hi = mid
        tp[t] = pos_prefix[lo]
        fp[t] = lo - tp[t]
        fn[t] = total_pos - tp[t]
        tn[t] = (n - total_pos) - fp[t]
    return tp, fp, fn, tn


def threshold_sweep(
    scores: NDArray[np.float64], labels: NDArray[np.int64], thresholds: NDArray[np.float64]
) -> tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.int64], NDArray[np.int64]]:
    """Confusion counts (tp, fp, fn, tn) at each threshold."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have matching length")
    if use_numba():
        return _threshold_sweep_nb(scores, labels, thresholds)
    return _threshold_sweep_np(scores, labels, thresholds)


# -- top-k retrieval hits ------------------------------------------------
#
# Candidates are ranked per query by descending similarity; equal scores
# rank the lower candidate index first.  truth is CSR-style: the truth
# candidate indices for query q live in truth_indices[truth_indptr[q] :
# truth_indptr[q + 1]].


def _topk_hits_np(
    sim: NDArray[np.float64],
    k: int,
    truth_indptr: NDArray[np.int64],
    truth_indices: NDArray[np.int64],
) -> NDArray[np.int64]:
    n_q, n_c = sim.shape
    kk = min(k, n_c)
    # Stable sort on negated scores realizes the lower-index tiebreak.
    ranked = np.argsort(-sim, axis=1, kind="stable")[:, :kk]
    hits = np.zeros(n_q, dtype=np.int64)
    for q in range(n_q):
        truth = truth_indices[truth_indptr[q] : truth_indptr[q + 1]]
        if truth.size and np.isin(ranked[q], truth).any():
            hits[q] = 1
    return hits


@njit(cache=True)
def _topk_hits_nb(sim, k, truth_indptr, truth_indices):  # pragma: no cover
    n_q, n_c = sim.shape
    kk = min(k, n_c)
    hits = np.zeros(n_q, dtype=np.int64)
    for q in range(n_q):
        lo, hi = truth_indptr[q], truth_indptr[q + 1]
        found = False
        for t in range(lo, hi):
            c = truth_indices[t]
            # Rank of candidate c = number of candidates strictly better,
            # where better means higher score or equal score at lower index.
            rank = 0
            for j in range(n_c):
                if sim[q, j] > sim[q, c] or (sim[q, j] == sim[q, c] and j < c):
                    rank += 1
            if rank < kk:
                found = True
                break
        if found:
            hits[q] = 1
    return hits


def topk_hits(
    sim: NDArray[np.float64],
    k: int,
    truth_indptr: NDArray[np.int64],
    truth_indices: NDArray[np.int64],
) -> NDArray[np.int64]:
    """Per-query 0/1: does any truth candidate rank in the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sim = np.ascontiguousarray(sim, dtype=np.float64)
    truth_indptr = np.ascontiguousarray(truth_indptr, dtype=np.int64)
    truth_indices = np.ascontiguousarray(truth_indices, dtype=np.int64)
    if truth_indptr.shape[0] != sim.shape[0] + 1:
        raise ValueError("truth_indptr must have one entry per query plus one")
    if use_numba():
        return _topk_hits_nb(sim, k, truth_indptr, truth_indices)
    return _topk_hits_np(sim, k, truth_indptr, truth_indices)
