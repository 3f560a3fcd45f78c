import itertools
import math

import numpy as np
import pytest

from minsm.engine import TraceRecord
from minsm.evaluation import (
    ConvergenceSummary,
    accuracy,
    convergence_summary,
    enumerate_partitions,
    exact_partition_posterior,
    nmi,
    normalize_counts,
    partition_key,
    total_variation,
)
from minsm.mixture import Hyperparams


def test_partition_key_canonicalizes():
    assert partition_key([5, 5, 2, 9]) == (0, 0, 1, 2)
    assert partition_key([1, 1, 0, 2]) == partition_key([9, 9, 4, 7])


def test_nmi_examples():
    truth = [0, 0, 1, 1, 2, 2]
    assert nmi(truth, truth) == 1.0
    assert nmi([2, 2, 0, 0, 1, 1], truth) == 1.0
    assert nmi([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0
    assert nmi([3, 3, 3], [7, 7, 7]) == 1.0  # both single clusters
    with pytest.raises(ValueError):
        nmi([0, 1], [0, 1, 2])


def test_nmi_invariance_and_range():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.integers(0, 4, 30)
        b = rng.integers(0, 3, 30)
        v = nmi(a, b)
        assert 0.0 <= v <= 1.0
        perm = rng.permutation(10)
        assert nmi(perm[a % 10], b) == pytest.approx(v, abs=1e-12)
        order = rng.permutation(30)
        assert nmi(a[order], b[order]) == pytest.approx(v, abs=1e-12)


def brute_force_accuracy(pred, truth):
    """Best one-to-one matching by enumerating cluster permutations."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    pred_ids = sorted(set(pred.tolist()))
    true_ids = sorted(set(truth.tolist()))
    small, large = sorted((pred_ids, true_ids), key=len)
    best = 0
    for perm in itertools.permutations(large, len(small)):
        pairing = dict(zip(small, perm))
        if small is pred_ids:
            correct = sum(1 for p, t in zip(pred, truth) if pairing.get(p) == t)
        else:
            correct = sum(1 for p, t in zip(pred, truth) if pairing.get(t) == p)
        best = max(best, correct)
    return best / len(pred)


def test_accuracy_examples():
    truth = ["A", "A", "B", "B"]
    assert accuracy(truth, truth) == 1.0
    assert accuracy([1, 1, 0, 0], [0, 0, 1, 1]) == 1.0
    assert accuracy([1, 1, 1, 2], ["A", "A", "B", "B"]) == 0.75
    assert accuracy([1, 1, 1, 2], ["A", "A", "B", "B"]) == brute_force_accuracy(
        [1, 1, 1, 2], [0, 0, 1, 1]
    )


def test_accuracy_matches_brute_force_matching():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(4, 12))
        pred = rng.integers(0, 4, n)
        truth = rng.integers(0, 3, n)
        assert accuracy(pred, truth) == pytest.approx(
            brute_force_accuracy(pred, truth), abs=1e-12
        )


def test_accuracy_symmetric_for_equal_cluster_counts():
    rng = np.random.default_rng(5)
    for _ in range(20):
        pred = rng.integers(0, 3, 20)
        truth = rng.integers(0, 3, 20)
        if len(set(pred.tolist())) == len(set(truth.tolist())):
            assert accuracy(pred, truth) == pytest.approx(
                accuracy(truth, pred), abs=1e-12
            )


def test_enumerate_partitions_bell_numbers():
    bells = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 6: 203, 7: 877}
    for n, bell in bells.items():
        parts = list(enumerate_partitions(n))
        assert len(parts) == bell
        assert len(set(parts)) == bell


def test_exact_partition_posterior_basics():
    hyper = Hyperparams(np.array([0.0]), 1.0, 1.0, np.array([1.0]))
    single = exact_partition_posterior(np.array([0.7]), hyper)
    assert single == {(0,): 1.0}
    three = exact_partition_posterior(np.array([0.0, 0.5, 5.0]), hyper)
    assert len(three) == 5
    assert sum(three.values()) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        exact_partition_posterior(np.zeros(11), hyper)


def test_exact_partition_posterior_mode_on_separated_triples():
    # two triples ten prior widths apart: the mode is the true 2-way split
    pts = np.array([-5.02, -5.0, -4.98, 4.98, 5.0, 5.02])
    hyper = Hyperparams(np.array([0.0]), 0.1, 2.0, np.array([0.25]))
    post = exact_partition_posterior(pts, hyper)
    mode = max(post, key=post.get)
    assert mode == (0, 0, 0, 1, 1, 1)
    assert post[mode] > 0.9


def test_exact_partition_posterior_point_order_invariant():
    hyper = Hyperparams(np.array([0.0]), 0.5, 1.5, np.array([1.0]))
    pts = np.array([0.3, -1.2, 2.0, 0.9])
    post = exact_partition_posterior(pts, hyper)
    perm = [2, 0, 3, 1]
    post_p = exact_partition_posterior(pts[perm], hyper)
    # compare through a fixed labeling: probability of "all apart" and "all together"
    assert post[(0, 1, 2, 3)] == pytest.approx(post_p[(0, 1, 2, 3)], abs=1e-9)
    assert post[(0, 0, 0, 0)] == pytest.approx(post_p[(0, 0, 0, 0)], abs=1e-9)


def test_total_variation():
    p = {"a": 0.5, "b": 0.5}
    assert total_variation(p, dict(p)) == 0.0
    assert total_variation({"a": 1.0}, {"b": 1.0}) == 1.0
    q = {"a": 0.2, "b": 0.3, "c": 0.5}
    assert total_variation(p, q) == pytest.approx(0.5 * (0.3 + 0.2 + 0.5))
    with pytest.raises(ValueError):
        normalize_counts({})


def rec(i, wt, ll, accepted=False, move="split"):
    return TraceRecord(i, wt, ll, 1, move, accepted, 0.0)


def test_convergence_summary_constant_trace():
    trace = [rec(i, 10.0 * i, -5.0) for i in range(20)]
    out = convergence_summary(trace)
    assert out.plateau_log_likelihood == -5.0
    assert out.time_to_plateau_ms == 0.0
    assert out.acceptance_rate == 0.0


def test_convergence_summary_knee():
    # climb for 50 records, flat at -1 afterwards; knee is where 99% of
    # the climb from -101 is first covered
    trace = []
    for i in range(50):
        trace.append(rec(i, float(i), -101.0 + 2.0 * i, accepted=True))
    for i in range(50, 100):
        trace.append(rec(i, float(i), -1.0))
    out = convergence_summary(trace)
    assert out.plateau_log_likelihood == -1.0
    threshold = -101.0 + 0.99 * 100.0
    knee = next(i for i, r in enumerate(trace) if r.log_likelihood >= threshold)
    assert knee == 50  # the climb tops out at -3, the flat part crosses
    assert out.time_to_plateau_ms == float(knee)
    assert out.acceptance_rate == 0.5


def test_convergence_summary_rejects_empty():
    with pytest.raises(ValueError):
        convergence_summary([])
    assert isinstance(convergence_summary([rec(0, 0.0, -1.0, move="init")]), ConvergenceSummary)
