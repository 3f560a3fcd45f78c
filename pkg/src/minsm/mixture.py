"""Partition state and collapsed Gaussian likelihood.

Clusters carry additive sufficient statistics (count, per-dimension sum
and sum of squares), so split and merge likelihood ratios touch only the
changed clusters. The per-cluster likelihood is the marginal of a
diagonal normal-inverse-gamma model: variance sigma_j^2 ~ IG(alpha0,
beta0_j) and mean mu_j | sigma_j^2 ~ N(mu0_j, sigma_j^2 / kappa0),
independently per dimension, integrated over both parameters. The
partition prior is uniform, so the chain's target is the product of
cluster marginals.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class SplitMove:
    cluster_id: int
    left: frozenset
    right: frozenset


@dataclass(frozen=True)
class MergeMove:
    cluster_a: int
    cluster_b: int


@dataclass(frozen=True)
class NoOpMove:
    reason: str


Move = SplitMove | MergeMove | NoOpMove


@dataclass
class GaussianStats:
    """Additive sufficient statistics of one cluster."""

    count: int
    s: np.ndarray
    q: np.ndarray

    @classmethod
    def from_points(cls, rows: np.ndarray):
        rows = np.atleast_2d(rows)
        return cls(rows.shape[0], rows.sum(axis=0), (rows * rows).sum(axis=0))

    def merged(self, other: "GaussianStats") -> "GaussianStats":
        return GaussianStats(self.count + other.count, self.s + other.s, self.q + other.q)

    def minus(self, other: "GaussianStats") -> "GaussianStats":
        return GaussianStats(self.count - other.count, self.s - other.s, self.q - other.q)


@dataclass(frozen=True)
class Hyperparams:
    mu0: np.ndarray
    kappa0: float
    alpha0: float
    beta0: np.ndarray

    def __post_init__(self):
        if self.kappa0 <= 0 or self.alpha0 <= 0:
            raise ValueError("kappa0 and alpha0 must be positive")
        if np.any(np.asarray(self.beta0) <= 0):
            raise ValueError("beta0 must be positive in every dimension")

    @classmethod
    def from_data(cls, points: np.ndarray, kappa0: float = 0.01, alpha0: float = 1.0):
        """Weakly informative defaults: data mean and per-dimension variance."""
        points = np.asarray(points, dtype=np.float64)
        var = points.var(axis=0)
        var = np.where(var > 0, var, 1.0)
        return cls(points.mean(axis=0), kappa0, alpha0, var)


def cluster_log_marginal(stats: GaussianStats, hyper: Hyperparams) -> float:
    """Log marginal likelihood of one cluster under the conjugate model."""
    if stats.count < 1:
        raise ValueError("cluster must contain at least one point")
    return kernels.gaussian_log_marginal(
        stats.count, stats.s, stats.q, hyper.mu0, hyper.kappa0, hyper.alpha0, hyper.beta0
    )


@dataclass
class _Cluster:
    members: set
    stats: GaussianStats
    # cached marginal, tagged with the hyperparameter object it was computed under
    log_marginal: float | None = field(default=None)
    hyper_token: object = field(default=None)


class PartitionState:
    """Current clustering: assignments, member sets, sufficient statistics.

    Owned and mutated by exactly one chain. Cluster ids are never reused;
    each split or merge mints fresh ids from ``next_cluster_id``.
    """

    def __init__(self, points: np.ndarray):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, d) array")
        self.assignments: dict[int, int] = {}
        self.clusters: dict[int, _Cluster] = {}
        self.next_cluster_id = 0

    # -- construction -------------------------------------------------

    @classmethod
    def from_labels(cls, points: np.ndarray, labels) -> "PartitionState":
        state = cls(points)
        groups: dict[int, list] = {}
        for i, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(i)
        for lab in sorted(groups):
            state._new_cluster(groups[lab])
        return state

    @classmethod
    def singletons(cls, points: np.ndarray) -> "PartitionState":
        return cls.from_labels(points, range(np.asarray(points).shape[0]))

    @classmethod
    def single_cluster(cls, points: np.ndarray) -> "PartitionState":
        return cls.from_labels(points, [0] * np.asarray(points).shape[0])

    def _new_cluster(self, member_ids) -> int:
        cid = self.next_cluster_id
        self.next_cluster_id += 1
        members = set(int(i) for i in member_ids)
        if not members:
            raise ValueError("clusters cannot be empty")
        rows = self.points[sorted(members)]
        self.clusters[cid] = _Cluster(members, GaussianStats.from_points(rows))
        for i in members:
            self.assignments[i] = cid
        return cid

    # -- queries ------------------------------------------------------

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def members(self, cluster_id: int) -> set:
        return self.clusters[cluster_id].members

    def stats(self, cluster_id: int) -> GaussianStats:
        return self.clusters[cluster_id].stats

    def labels(self) -> np.ndarray:
        return np.array([self.assignments[i] for i in range(self.n_points)])

    def cluster_ids(self) -> list:
        return list(self.clusters.keys())

    def log_marginal(self, cluster_id: int, hyper: Hyperparams) -> float:
        entry = self.clusters[cluster_id]
        if entry.log_marginal is None or entry.hyper_token is not hyper:
            entry.log_marginal = cluster_log_marginal(entry.stats, hyper)
            entry.hyper_token = hyper
        return entry.log_marginal

    def side_stats(self, member_ids) -> GaussianStats:
        rows = self.points[sorted(member_ids)]
        return GaussianStats.from_points(rows)

    def audit(self, atol: float = 1e-6) -> bool:
        """Check membership and incremental statistics against recomputation."""
        seen = set()
        for cid, entry in self.clusters.items():
            if not entry.members:
                raise AssertionError(f"cluster {cid} is empty")
            if entry.members & seen:
                raise AssertionError("overlapping clusters")
            seen |= entry.members
            for i in entry.members:
                if self.assignments[i] != cid:
                    raise AssertionError(f"point {i} assignment out of sync")
            fresh = self.side_stats(entry.members)
            if fresh.count != entry.stats.count:
                raise AssertionError(f"cluster {cid} count drifted")
            scale = 1.0 + np.abs(fresh.s) + np.abs(fresh.q)
            if np.any(np.abs(fresh.s - entry.stats.s) > atol * scale) or np.any(
                np.abs(fresh.q - entry.stats.q) > atol * scale
            ):
                raise AssertionError(f"cluster {cid} statistics drifted")
        if seen != set(range(self.n_points)):
            raise AssertionError("assignments do not cover all points")
        return True


def centroid(state: PartitionState, cluster_id: int) -> np.ndarray:
    """Per-dimension mean of a cluster's members."""
    if cluster_id not in state.clusters:
        raise KeyError(f"no cluster {cluster_id}")
    st = state.stats(cluster_id)
    return st.s / st.count


def state_log_likelihood(state: PartitionState, hyper: Hyperparams) -> float:
    """Sum of cluster log marginals over the whole partition."""
    return sum(state.log_marginal(cid, hyper) for cid in state.clusters)


def _check_split(state: PartitionState, move: SplitMove):
    entry = state.clusters.get(move.cluster_id)
    if entry is None:
        raise ValueError(f"no cluster {move.cluster_id}")
    if not move.left or not move.right:
        raise ValueError("split sides must both be nonempty")
    if move.left & move.right or (move.left | move.right) != entry.members:
        raise ValueError("split sides must partition the cluster")


def _check_merge(state: PartitionState, move: MergeMove):
    if move.cluster_a == move.cluster_b:
        raise ValueError("cannot merge a cluster with itself")
    if move.cluster_a not in state.clusters or move.cluster_b not in state.clusters:
        raise ValueError("merge operands must be live clusters")


def crp_log_prior_ratio(state: PartitionState, move: Move, alpha: float = 1.0) -> float:
    """Partition-prior ratio under a Chinese-restaurant prior.

    The prior weights a partition by alpha^M * prod_c (|c| - 1)!, whose
    per-cluster form cancels across unchanged clusters just like the
    likelihood. The factorial terms offset the 2^cluster_size entropy of
    coin splits, which is what keeps large clusters from dissolving into
    the combinatorially dominant shattered partitions. The default
    uniform prior contributes zero.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if isinstance(move, SplitMove):
        _check_split(state, move)
        return (
            math.log(alpha)
            + math.lgamma(len(move.left))
            + math.lgamma(len(move.right))
            - math.lgamma(len(state.members(move.cluster_id)))
        )
    if isinstance(move, MergeMove):
        _check_merge(state, move)
        a = len(state.members(move.cluster_a))
        b = len(state.members(move.cluster_b))
        return math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) - math.log(alpha)
    raise ValueError("no prior ratio for a no-op move")


def log_likelihood_ratio(state: PartitionState, move: Move, hyper: Hyperparams) -> float:
    """log L(after move) - log L(before), touching only changed clusters."""
    if isinstance(move, SplitMove):
        _check_split(state, move)
        parent = state.log_marginal(move.cluster_id, hyper)
        left_stats = state.side_stats(move.left)
        right_stats = state.stats(move.cluster_id).minus(left_stats)
        return (
            cluster_log_marginal(left_stats, hyper)
            + cluster_log_marginal(right_stats, hyper)
            - parent
        )
    if isinstance(move, MergeMove):
        _check_merge(state, move)
        merged = state.stats(move.cluster_a).merged(state.stats(move.cluster_b))
        return (
            cluster_log_marginal(merged, hyper)
            - state.log_marginal(move.cluster_a, hyper)
            - state.log_marginal(move.cluster_b, hyper)
        )
    raise ValueError("no likelihood ratio for a no-op move")


def apply_move(state: PartitionState, move: Move) -> PartitionState:
    """Mutate the state by one split or merge; returns the same state.

    Statistics are updated by addition and subtraction of the moved
    members, never recomputed across unchanged clusters.
    """
    if isinstance(move, SplitMove):
        _check_split(state, move)
        parent = state.clusters.pop(move.cluster_id)
        left_stats = state.side_stats(move.left)
        right_stats = parent.stats.minus(left_stats)
        for side, stats in ((move.left, left_stats), (move.right, right_stats)):
            cid = state.next_cluster_id
            state.next_cluster_id += 1
            state.clusters[cid] = _Cluster(set(side), stats)
            for i in side:
                state.assignments[i] = cid
        return state
    if isinstance(move, MergeMove):
        _check_merge(state, move)
        a = state.clusters.pop(move.cluster_a)
        b = state.clusters.pop(move.cluster_b)
        cid = state.next_cluster_id
        state.next_cluster_id += 1
        state.clusters[cid] = _Cluster(a.members | b.members, a.stats.merged(b.stats))
        for i in state.clusters[cid].members:
            state.assignments[i] = cid
        return state
    raise ValueError("cannot apply a no-op move")
