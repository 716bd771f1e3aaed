from __future__ import annotations

import numpy as np
import pytest

from capfuse import retrieval


def full_sort_recall(sim, truth, k) -> float:
    """Reference: fully sort each row, count queries with a truth hit."""
    hits = 0
    for q in range(sim.shape[0]):
        order = sorted(range(sim.shape[1]), key=lambda j: (-sim[q, j], j))
        if set(order[:k]) & set(truth[q]):
            hits += 1
    return 100.0 * hits / sim.shape[0]


def test_similarity_matrix_cosines():
    q = np.array([[1.0, 0.0], [1.0, 1.0]])
    c = np.array([[2.0, 0.0], [0.0, 3.0]])
    sim = retrieval.similarity_matrix(q, c)
    assert sim[0, 0] == pytest.approx(1.0)
    assert sim[0, 1] == pytest.approx(0.0)
    assert sim[1, 0] == pytest.approx(1 / np.sqrt(2))
    assert sim[1, 1] == pytest.approx(1 / np.sqrt(2))


def test_similarity_matrix_rejects_zero_norm():
    with pytest.raises(ValueError):
        retrieval.similarity_matrix(np.zeros((1, 3)), np.ones((2, 3)))
    with pytest.raises(ValueError):
        retrieval.similarity_matrix(np.ones((1, 3)), np.zeros((2, 3)))


def test_recall_hand_built_case():
    # query 0: truth 0 is ranked first -> hit at every k
    # query 1: truth 2 is ranked third -> hit only at k >= 3
    sim = np.array(
        [
            [0.9, 0.5, 0.1],
            [0.9, 0.5, 0.1],
        ]
    )
    truth = [[0], [2]]
    recalls = retrieval.recall_at_k(sim, truth, ks=(1, 2, 3))
    assert recalls == {1: 50.0, 2: 50.0, 3: 100.0}


def test_recall_tie_breaks_toward_lower_index():
    sim = np.array([[0.5, 0.5]])
    assert retrieval.recall_at_k(sim, [[1]], ks=(1,))[1] == 0.0
    assert retrieval.recall_at_k(sim, [[0]], ks=(1,))[1] == 100.0
    assert retrieval.recall_at_k(sim, [[1]], ks=(2,))[2] == 100.0


def test_recall_monotone_in_k():
    rng = np.random.default_rng(5)
    sim = rng.standard_normal((30, 40))
    truth = [[int(rng.integers(0, 40))] for _ in range(30)]
    values = [retrieval.recall_at_k(sim, truth, ks=(k,))[k] for k in range(1, 41)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert values[-1] == 100.0


def test_recall_at_n_is_total():
    rng = np.random.default_rng(8)
    sim = rng.standard_normal((16, 16))
    truth = [[int(rng.integers(0, 16))] for _ in range(16)]
    assert retrieval.recall_at_k(sim, truth, ks=(16,))[16] == 100.0


def test_recall_matches_full_sort_reference():
    rng = np.random.default_rng(21)
    for trial in range(10):
        nq, nc = int(rng.integers(2, 30)), int(rng.integers(2, 30))
        sim = rng.standard_normal((nq, nc))
        # inject ties so the tiebreak path is exercised
        if nc >= 2:
            sim[:, 1] = sim[:, 0]
        truth = [
            rng.choice(nc, size=int(rng.integers(1, min(4, nc + 1))), replace=False).tolist()
            for _ in range(nq)
        ]
        for k in (1, 3, nc):
            got = retrieval.recall_at_k(sim, truth, ks=(k,))[k]
            assert got == full_sort_reference(sim, truth, k), (trial, k)


def full_sort_reference(sim, truth, k):
    return full_sort_recall(sim, truth, k)


def test_recall_multiple_truths_any_hit_counts():
    sim = np.array([[0.9, 0.8, 0.7, 0.6]])
    assert retrieval.recall_at_k(sim, [[3, 1]], ks=(2,))[2] == 100.0
    assert retrieval.recall_at_k(sim, [[3]], ks=(2,))[2] == 0.0


def test_recall_error_paths():
    sim = np.ones((2, 3))
    with pytest.raises(ValueError, match="no ground-truth"):
        retrieval.recall_at_k(sim, [[0], []])
    with pytest.raises(ValueError, match="outside"):
        retrieval.recall_at_k(sim, [[0], [3]])
    with pytest.raises(ValueError, match="truth has"):
        retrieval.recall_at_k(sim, [[0]])
    with pytest.raises(ValueError, match="at least one k"):
        retrieval.recall_at_k(sim, [[0], [1]], ks=())
    with pytest.raises(ValueError):
        retrieval.recall_at_k(np.ones(3), [[0]])


def test_mean_recall():
    assert retrieval.mean_recall({1: 50.0, 5: 70.0, 10: 90.0}) == pytest.approx(70.0)
    with pytest.raises(ValueError):
        retrieval.mean_recall({})
