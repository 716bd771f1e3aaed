"""Cross-modal retrieval scoring: Recall@k over a similarity matrix.

Candidates are ranked per query by descending similarity with ties broken
toward the lower candidate index; a query is a hit at k when any of its
ground-truth candidates ranks in the top k.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from . import kernels

DEFAULT_KS: tuple[int, ...] = (1, 5, 10)


def similarity_matrix(queries: NDArray[np.float64], candidates: NDArray[np.float64]) -> NDArray[np.float64]:
    """Cosine similarity of every query row against every candidate row."""
    q = np.asarray(queries, dtype=np.float64)
    c = np.asarray(candidates, dtype=np.float64)
    qn = np.linalg.norm(q, axis=1, keepdims=True)
    cn = np.linalg.norm(c, axis=1, keepdims=True)
    if (qn == 0).any() or (cn == 0).any():
        raise ValueError("zero-norm embedding")
    return (q / qn) @ (c / cn).T


def _truth_csr(truth: Sequence[Sequence[int]], n_candidates: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    indptr = np.zeros(len(truth) + 1, dtype=np.int64)
    indices: list[int] = []
    for q, ids in enumerate(truth):
        if not ids:
            raise ValueError(f"query {q} has no ground-truth candidates")
        for c in ids:
            if not 0 <= c < n_candidates:
                raise ValueError(f"query {q} references candidate {c} outside 0..{n_candidates - 1}")
            indices.append(c)
        indptr[q + 1] = len(indices)
    return indptr, np.array(indices, dtype=np.int64)


def recall_at_k(
    similarity: NDArray[np.float64],
    truth: Sequence[Sequence[int]],
    ks: Sequence[int] = DEFAULT_KS,
) -> dict[int, float]:
    """Recall@k percentages for each requested k."""
    sim = np.asarray(similarity, dtype=np.float64)
    if sim.ndim != 2:
        raise ValueError("similarity must be a 2-D matrix")
    n_q, n_c = sim.shape
    if len(truth) != n_q:
        raise ValueError(f"truth has {len(truth)} entries for {n_q} queries")
    if not ks:
        raise ValueError("need at least one k")
    indptr, indices = _truth_csr(truth, n_c)
    out: dict[int, float] = {}
    for k in ks:
        hits = kernels.topk_hits(sim, int(k), indptr, indices)
        out[int(k)] = 100.0 * float(hits.sum()) / n_q
    return out


def mean_recall(recalls: dict[int, float]) -> float:
    """Mean of the reported Recall@k values (over the listed ks only)."""
    if not recalls:
        raise ValueError("no recall values")
    return sum(recalls.values()) / len(recalls)
