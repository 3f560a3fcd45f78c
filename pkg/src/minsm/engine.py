"""Metropolis-Hastings chain: kernel selection, acceptance, telemetry.

Each iteration flips the move-family coin and invokes one proposal
kernel. The random algorithm pairs the uniform split with the uniform
merge. The sign-projection algorithm pairs the anchored smart split
(falling back to a uniform merge on a cross-cluster draw) with the
anchored smart merge (falling back to a uniform split). The minhash
algorithm pairs each smart kernel with its inverse dumb kernel behind a
second fair coin, so the selection probabilities cancel in the
acceptance ratio.

Acceptance uses min{1, L(x') q(x|x') / (L(x) q(x'|x))} in log space, with
no annealing or bias terms. L is the product of cluster marginals under
a uniform partition prior by default; an optional Chinese-restaurant
prior multiplies in per-cluster occupancy terms, which matters once
clusters grow large enough that the uniform prior's combinatorics favor
shattered partitions. Point hash tables are built once per run; only the
centroid table mutates, kept in lockstep with the state.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import proposals
from .hashing import HashFamily, HashSpec, transform_nonneg
from .lss import LssTable
from .mixture import (
    Hyperparams,
    MergeMove,
    NoOpMove,
    PartitionState,
    SplitMove,
    apply_move,
    centroid,
    crp_log_prior_ratio,
    log_likelihood_ratio,
    state_log_likelihood,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ("random", "lshsm", "minsm")
INIT_MODES = ("singletons", "single", "kmeans")

_AUDIT_STRIDE = 10_000


class ChainError(RuntimeError):
    """Internal consistency failure; the chain aborts rather than corrupt."""


@dataclass(frozen=True)
class ChainConfig:
    algorithm: str
    iterations: int
    seed: int = 0
    k_hashes: int | None = None
    n_tables: int | None = None
    hyper: Hyperparams | None = None
    move_mix: float = 0.5
    trace_stride: int = 1
    init: str = "singletons"
    init_k: int = 10
    partition_prior: str = "uniform"
    crp_alpha: float = 1.0
    virtual_clock: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.move_mix < 1.0:
            raise ValueError("move_mix must lie strictly between 0 and 1")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be >= 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}")
        if self.partition_prior not in ("uniform", "crp"):
            raise ValueError(f"unknown partition prior {self.partition_prior!r}")
        if self.crp_alpha <= 0:
            raise ValueError("crp_alpha must be positive")
        if self.algorithm == "minsm":
            for name, value in (("k_hashes", self.k_hashes), ("n_tables", self.n_tables)):
                if value is not None and value != 1:
                    raise ValueError(f"minsm requires {name} = 1, got {value}")

    def resolved_kl(self) -> tuple[int, int]:
        if self.algorithm == "minsm":
            return 1, 1
        return self.k_hashes or 10, self.n_tables or 10


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    wall_time_ms: float
    log_likelihood: float
    n_clusters: int
    move_type: str
    accepted: bool
    acceptance_log_ratio: float


def acceptance_log_ratio(log_l_ratio: float, log_q_rev: float, log_q_fwd: float) -> float:
    """min(0, log likelihood ratio + log q reverse - log q forward)."""
    return min(0.0, log_l_ratio + log_q_rev - log_q_fwd)


def refresh_centroids(state: PartitionState, centroid_table: LssTable, changed) -> LssTable:
    """Re-sync centroid table entries for the given cluster ids.

    Dead ids are removed, live ones (re)inserted with the transformed
    centroid. Aborts if the table ends up out of step with the state.
    """
    for cid in changed:
        if cid in centroid_table.ids():
            centroid_table.remove(cid)
        if cid in state.clusters:
            vec = transform_nonneg(centroid(state, cid))
            if not np.any(vec > 0.0):
                raise ChainError(f"cluster {cid} centroid is exactly zero")
            centroid_table.insert(cid, vec)
    if len(centroid_table) != state.n_clusters:
        raise ChainError("centroid table count diverged from the state")
    return centroid_table


def _initial_state(points: np.ndarray, config: ChainConfig, rng) -> PartitionState:
    if config.init == "singletons":
        return PartitionState.singletons(points)
    if config.init == "single":
        return PartitionState.single_cluster(points)
    from scipy.cluster.vq import kmeans2

    k = min(config.init_k, points.shape[0])
    _, labels = kmeans2(points, k, minit="++", seed=rng, missing="warn")
    return PartitionState.from_labels(points, labels)


class Chain:
    """One logical thread of execution owning its state and tables."""

    def __init__(self, points: np.ndarray, config: ChainConfig, clock=None):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        self.config = config
        self.hyper = config.hyper or Hyperparams.from_data(self.points)
        streams = np.random.SeedSequence(config.seed).generate_state(3, np.uint64)
        self.rng = np.random.default_rng(int(streams[0]))
        self.state = _initial_state(self.points, config, self.rng)

        k, l = config.resolved_kl()
        self.point_table = None
        self.centroid_table = None
        self.transformed = None
        if config.algorithm == "lshsm":
            spec = HashSpec(HashFamily.SIGN_RANDOM_PROJECTION, int(streams[1]), k, l)
            self.point_table = LssTable.build(
                dict(enumerate(self.points)), spec, "data_point"
            )
        elif config.algorithm == "minsm":
            self.transformed = np.stack([transform_nonneg(p) for p in self.points])
            point_spec = HashSpec(HashFamily.WEIGHTED_MINHASH, int(streams[1]), 1, 1)
            self.point_table = LssTable.build(
                dict(enumerate(self.transformed)), point_spec, "data_point"
            )
            centroid_spec = HashSpec(HashFamily.WEIGHTED_MINHASH, int(streams[2]), 1, 1)
            self.centroid_table = LssTable(centroid_spec, "cluster_centroid")
            refresh_centroids(self.state, self.centroid_table, self.state.cluster_ids())

        if config.virtual_clock:
            self.clock = lambda: float(self.iteration)
        else:
            self.clock = clock or time.perf_counter
        self.iteration = 0
        self._t0 = self.clock()
        self.log_likelihood = state_log_likelihood(self.state, self.hyper)

    # -- proposal dispatch ---------------------------------------------

    def _propose(self) -> proposals.ProposalOutcome:
        split_family = self.rng.random() < self.config.move_mix
        algo = self.config.algorithm
        if algo == "random":
            if split_family:
                return proposals.dumb_split(self.state, self.rng)
            return proposals.dumb_merge(self.state, self.rng)
        if algo == "lshsm":
            if split_family:
                return proposals.naive_smart_split(self.state, self.point_table, self.rng)
            return proposals.naive_smart_merge(self.state, self.point_table, self.rng)
        smart = self.rng.random() < 0.5
        if split_family:
            if smart:
                return proposals.minsm_smart_split(
                    self.state, self.point_table, self.rng, self.transformed
                )
            return proposals.dumb_merge(self.state, self.rng)
        if smart:
            return proposals.minsm_smart_merge(self.state, self.centroid_table, self.rng)
        return proposals.dumb_split(self.state, self.rng)

    # -- stepping --------------------------------------------------------

    def step(self) -> TraceRecord:
        """Advance one iteration and return its telemetry record."""
        self.iteration += 1
        outcome = self._propose()
        move = outcome.move
        accepted = False
        ratio = -math.inf
        move_type = "noop"
        if not isinstance(move, NoOpMove):
            move_type = "split" if isinstance(move, SplitMove) else "merge"
            llr = log_likelihood_ratio(self.state, move, self.hyper)
            target_ratio = llr
            if self.config.partition_prior == "crp":
                target_ratio += crp_log_prior_ratio(self.state, move, self.config.crp_alpha)
            ratio = acceptance_log_ratio(target_ratio, outcome.log_q_rev, outcome.log_q_fwd)
            draw = self.rng.random()
            accepted = (math.log(draw) if draw > 0.0 else -math.inf) < ratio
            if accepted:
                changed = self._apply(move)
                self.log_likelihood += llr
                if self.centroid_table is not None:
                    refresh_centroids(self.state, self.centroid_table, changed)
        if self.iteration % _AUDIT_STRIDE == 0:
            self._audit()
        return TraceRecord(
            self.iteration,
            (self.clock() - self._t0) * 1e3,
            self.log_likelihood,
            self.state.n_clusters,
            move_type,
            accepted,
            ratio,
        )

    def _apply(self, move):
        before = self.state.next_cluster_id
        apply_move(self.state, move)
        created = list(range(before, self.state.next_cluster_id))
        if isinstance(move, SplitMove):
            return [move.cluster_id, *created]
        return [move.cluster_a, move.cluster_b, *created]

    def _audit(self):
        try:
            self.state.audit()
            fresh = state_log_likelihood(self.state, self.hyper)
            if abs(fresh - self.log_likelihood) > 1e-6 * (1.0 + abs(fresh)):
                raise AssertionError("running log likelihood drifted")
            if self.centroid_table is not None:
                self.centroid_table.audit()
                for cid in self.state.clusters:
                    want = transform_nonneg(centroid(self.state, cid))
                    if not np.allclose(self.centroid_table.vector(cid), want, atol=1e-9):
                        raise AssertionError(f"centroid entry {cid} is stale")
        except AssertionError as exc:
            raise ChainError(str(exc)) from exc
        self.log_likelihood = state_log_likelihood(self.state, self.hyper)

    def initial_record(self) -> TraceRecord:
        return TraceRecord(
            0,
            (self.clock() - self._t0) * 1e3,
            self.log_likelihood,
            self.state.n_clusters,
            "init",
            False,
            0.0,
        )


def run_chain(dataset, config: ChainConfig, observer=None):
    """Run a full chain and return (final state, trace records).

    ``dataset`` is either a (n, d) array or an object with a ``points``
    attribute. The optional observer is called with the state after every
    iteration (accepted or not).
    """
    points = getattr(dataset, "points", dataset)
    chain = Chain(points, config)
    trace = [chain.initial_record()]
    logger.info(
        "chain start: algo=%s n=%d iterations=%d seed=%d",
        config.algorithm,
        chain.state.n_points,
        config.iterations,
        config.seed,
    )
    for _ in range(config.iterations):
        record = chain.step()
        if chain.iteration % config.trace_stride == 0:
            trace.append(record)
        if observer is not None:
            observer(chain.state)
    logger.info(
        "chain end: M=%d log_likelihood=%.3f", chain.state.n_clusters, chain.log_likelihood
    )
    return chain.state, trace
