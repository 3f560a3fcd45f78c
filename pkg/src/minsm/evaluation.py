"""Clustering quality metrics, convergence summaries, and the enumeration
oracle used by stationarity tests."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .mixture import GaussianStats, Hyperparams, cluster_log_marginal


def _as_labels(labels, name):
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d label sequence")
    return arr


def _contingency(predicted, truth):
    _, pi = np.unique(predicted, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1))
    np.add.at(table, (pi, ti), 1.0)
    return table


def partition_key(labels) -> tuple:
    """Canonical restricted-growth encoding of a labeling.

    Clusters are renumbered by first appearance, so two labelings that
    induce the same partition share one key.
    """
    arr = _as_labels(labels, "labels")
    mapping: dict = {}
    out = []
    for lab in arr.tolist():
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out.append(mapping[lab])
    return tuple(out)


def nmi(predicted, truth) -> float:
    """Mutual information over the geometric mean of the entropies.

    When either labeling has zero entropy the quotient is undefined;
    returns 1.0 if the two labelings are identical as partitions and 0.0
    otherwise.
    """
    pred = _as_labels(predicted, "predicted")
    true = _as_labels(truth, "truth")
    if pred.shape != true.shape:
        raise ValueError("labelings must have equal length")
    table = _contingency(pred, true)
    n = table.sum()
    pj = table.sum(axis=1) / n
    qj = table.sum(axis=0) / n
    hp = -np.sum(pj * np.log(pj, where=pj > 0, out=np.zeros_like(pj)))
    hq = -np.sum(qj * np.log(qj, where=qj > 0, out=np.zeros_like(qj)))
    if hp <= 0.0 or hq <= 0.0:
        return 1.0 if partition_key(pred) == partition_key(true) else 0.0
    pij = table / n
    mask = pij > 0
    mi = np.sum(pij[mask] * np.log(pij[mask] / np.outer(pj, qj)[mask]))
    return float(max(0.0, min(1.0, mi / math.sqrt(hp * hq))))


def accuracy(predicted, truth) -> float:
    """Fraction of points correct under the best one-to-one cluster match.

    The matching is the assignment-problem optimum on the contingency
    table; unmatched clusters contribute nothing.
    """
    pred = _as_labels(predicted, "predicted")
    true = _as_labels(truth, "truth")
    if pred.shape != true.shape:
        raise ValueError("labelings must have equal length")
    table = _contingency(pred, true)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / pred.size)


def enumerate_partitions(n: int):
    """Yield every set partition of n items as a restricted-growth tuple."""
    if n < 1:
        raise ValueError("need at least one item")
    labels = [0] * n

    def rec(i, used):
        if i == n:
            yield tuple(labels)
            return
        for lab in range(used + 1):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab + 1))

    yield from rec(1, 1)


def exact_partition_posterior(points: np.ndarray, hyper: Hyperparams) -> dict:
    """Exhaustive posterior over set partitions of a tiny dataset.

    Scores every partition by its product of cluster marginals under a
    uniform partition prior and normalizes in log space. Keys are
    canonical restricted-growth tuples.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if n > 10:
        raise ValueError("exhaustive enumeration is limited to n <= 10")
    keys = []
    scores = []
    for key in enumerate_partitions(n):
        total = 0.0
        for cid in range(max(key) + 1):
            rows = points[[i for i, k in enumerate(key) if k == cid]]
            total += cluster_log_marginal(GaussianStats.from_points(rows), hyper)
        keys.append(key)
        scores.append(total)
    scores = np.array(scores)
    probs = np.exp(scores - logsumexp(scores))
    return dict(zip(keys, probs.tolist()))


def total_variation(p: dict, q: dict) -> float:
    """Half the L1 distance between two partition distributions."""
    support = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in support)


def normalize_counts(counts: dict) -> dict:
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("counts must be nonempty")
    return {k: v / total for k, v in counts.items()}


@dataclass(frozen=True)
class ConvergenceSummary:
    plateau_log_likelihood: float
    time_to_plateau_ms: float
    acceptance_rate: float


def convergence_summary(trace) -> ConvergenceSummary:
    """Plateau level, time to 99% of the climb, and acceptance rate.

    The plateau is the mean log likelihood over the final tenth of the
    records; the time is the first wall time at which the log likelihood
    covers 99% of the gap from the initial value to the plateau.
    """
    records = list(trace)
    if not records:
        raise ValueError("trace is empty")
    lls = np.array([r.log_likelihood for r in records])
    tail = max(1, len(records) // 10)
    plateau = float(lls[-tail:].mean())
    threshold = lls[0] + 0.99 * (plateau - lls[0])
    time_to = records[-1].wall_time_ms
    for r, ll in zip(records, lls):
        if ll >= threshold:
            time_to = r.wall_time_ms
            break
    accepted = [r for r in records if r.move_type != "init"]
    rate = (
        sum(1 for r in accepted if r.accepted) / len(accepted) if accepted else 0.0
    )
    return ConvergenceSummary(plateau, time_to, rate)
