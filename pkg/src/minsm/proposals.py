"""Proposal kernels returning moves with exact log transition probabilities.

Four kernels are provided:

* ``dumb_split`` / ``dumb_merge``: uniform random moves.
* ``naive_smart_split`` / ``naive_smart_merge``: sign-projection sampling
  of an anchor pair; the forward probability accumulates, over every
  anchor pair consistent with the realized move, the chance of drawing
  that pair (quadratic in the affected cluster sizes).
* ``minsm_smart_split`` / ``minsm_smart_merge``: K=1, L=1 weighted-minhash
  kernels. The split reports a whole bucket and its forward probability
  is a single collide-with-set/avoid-set evaluation, linear in the size
  of the cluster being split.

Every kernel returns a ``ProposalOutcome``; degenerate draws (empty
bucket, one-sided split, too few clusters, self-sample) come back as a
``NoOpMove`` that the chain counts as a rejected iteration.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .lss import LssTable
from .mixture import MergeMove, Move, NoOpMove, PartitionState, SplitMove

_LN2 = math.log(2.0)


class ConsistencyError(RuntimeError):
    """A table disagrees with the partition state it must mirror."""


@dataclass(frozen=True)
class ProposalOutcome:
    move: Move
    log_q_fwd: float
    log_q_rev: float


def _noop(reason: str) -> ProposalOutcome:
    return ProposalOutcome(NoOpMove(reason), math.nan, math.nan)


# ---------------------------------------------------------------------------
# uniform random kernels
# ---------------------------------------------------------------------------


def dumb_split(state: PartitionState, rng) -> ProposalOutcome:
    """Split a uniformly chosen cluster by fair coins on each member.

    The forward probability of a realized split is
    (1/M) * (1/2)^cluster_size. To make that the exact proposal
    probability, only the coin pattern whose heads side contains the
    smallest member id is kept; the mirrored pattern (and any one-sided
    pattern) is a no-op. The reverse move is the uniform merge of the two
    new clusters, probability 2 / (M' (M' - 1)).
    """
    ids = list(state.clusters)
    cid = ids[int(rng.integers(len(ids)))]
    members = sorted(state.members(cid))
    if len(members) < 2:
        return _noop("singleton-cluster")
    bits = rng.integers(0, 2, size=len(members))
    if bits[0] == 0:
        return _noop("mirrored-pattern")
    if np.all(bits == 1):
        return _noop("one-sided-pattern")
    left = frozenset(m for m, b in zip(members, bits) if b == 1)
    right = frozenset(m for m, b in zip(members, bits) if b == 0)
    m_after = state.n_clusters + 1
    return ProposalOutcome(
        SplitMove(cid, left, right),
        -math.log(state.n_clusters) - len(members) * _LN2,
        _LN2 - math.log(m_after) - math.log(m_after - 1),
    )


def dumb_merge(state: PartitionState, rng) -> ProposalOutcome:
    """Merge a uniformly random unordered pair of clusters.

    Forward probability 2 / (M (M - 1)); the reverse move is the dumb
    split of the merged cluster back into exactly the two operands,
    probability (1/M') (1/2)^(merged size).
    """
    m = state.n_clusters
    if m < 2:
        return _noop("too-few-clusters")
    ids = list(state.clusters)
    i = int(rng.integers(m))
    j = int(rng.integers(m - 1))
    if j >= i:
        j += 1
    a, b = ids[i], ids[j]
    size = len(state.members(a)) + len(state.members(b))
    return ProposalOutcome(
        MergeMove(a, b),
        _LN2 - math.log(m) - math.log(m - 1),
        -math.log(m - 1) - size * _LN2,
    )


# ---------------------------------------------------------------------------
# sign-projection kernels (anchor-pair sampling)
# ---------------------------------------------------------------------------


def anchored_pair_sum(Q, V, frac, k_hashes: int, n_tables: int) -> float:
    """sum_a frac_a * sum_b (1 - (1 - p(Q_a, V_b)^K)^L).

    p is the single-bit sign-projection collision probability. This is
    the quadratic-cost accumulation behind both anchor-pair transition
    probabilities; exposed for tests and benchmarks.
    """
    return kernels.anchored_pair_total(
        np.ascontiguousarray(Q),
        np.ascontiguousarray(V),
        np.ascontiguousarray(frac, dtype=np.float64),
        k_hashes,
        n_tables,
    )


def _inverse_bucket_sizes(table: LssTable, queries: np.ndarray, table_index: int):
    """Per-query 1/|bucket|, zero when the query's bucket is empty."""
    frac = np.zeros(queries.shape[0])
    for idx in range(queries.shape[0]):
        bucket = table.bucket_of(queries[idx], table_index)
        if len(bucket) > 0:
            frac[idx] = 1.0 / len(bucket)
    return frac


def _oriented_pair_sum(
    table: LssTable, anchor_ids, target_ids, negate_anchor: bool, table_index: int
) -> float:
    anchors = np.stack([table.vector(i) for i in anchor_ids])
    targets = np.stack([table.vector(i) for i in target_ids])
    queries = -anchors if negate_anchor else anchors
    frac = _inverse_bucket_sizes(table, queries, table_index)
    return anchored_pair_sum(
        queries, targets, frac, table.spec.k_hashes, table.spec.n_tables
    )


def _anchor_transition_sum(
    table: LssTable, side_a, side_b, negate_anchor: bool, table_index: int
) -> float:
    """Total probability of drawing an anchor pair across the two sides.

    Each pair (a, b) contributes (1/n omitted here) the chance of picking
    the anchor uniformly, colliding with the mate in at least one table,
    and then picking that mate from the probed bucket. Both draw
    orientations lead to the same move, so both are accumulated.
    """
    return _oriented_pair_sum(
        table, side_a, side_b, negate_anchor, table_index
    ) + _oriented_pair_sum(table, side_b, side_a, negate_anchor, table_index)


def naive_smart_split(state: PartitionState, table: LssTable, rng) -> ProposalOutcome:
    """Split anchored on a uniform point and a dissimilarity-sampled mate.

    Draw u uniformly, sample v by querying the tables with -u. If u and v
    share a cluster, split it with u and v forced apart and every other
    member assigned by a fair coin. The forward probability sums, over
    every anchor pair across the realized sides (in both draw orders),
    the chance of drawing that pair and then flipping the remaining coins
    this way; bucket sizes come from the table actually probed. If u and
    v already sit in different clusters the kernel falls back to a
    uniform merge.
    """
    n = state.n_points
    u = int(rng.integers(n))
    result = table.sample_item(table.dissimilar_query(table.vector(u)), rng)
    if result is None:
        return _noop("empty-sample")
    v = result.item_id
    cu = state.assignments[u]
    if cu != state.assignments[v]:
        return dumb_merge(state, rng)
    members = state.members(cu)
    others = sorted(members - {u, v})
    side_u = {u}
    side_v = {v}
    if others:
        bits = rng.integers(0, 2, size=len(others))
        for m, b in zip(others, bits):
            (side_u if b == 1 else side_v).add(m)
    total = _anchor_transition_sum(
        table, sorted(side_u), sorted(side_v), True, result.table_index
    )
    if total <= 0.0:
        return _noop("zero-transition-mass")
    size = len(members)
    m_after = state.n_clusters + 1
    return ProposalOutcome(
        SplitMove(cu, frozenset(side_u), frozenset(side_v)),
        math.log(total) - math.log(n) - (size - 2) * _LN2,
        _LN2 - math.log(m_after) - math.log(m_after - 1),
    )


def naive_smart_merge(state: PartitionState, table: LssTable, rng) -> ProposalOutcome:
    """Merge the clusters of a uniform point and a similarity-sampled mate.

    Draw u uniformly, sample v by querying the tables with u itself. If
    the two points live in different clusters, merge those clusters; the
    forward probability accumulates every anchor pair across the two
    operands (in both draw orders), with bucket sizes from the table
    actually probed. A same-cluster draw falls back to a uniform random
    split.
    """
    n = state.n_points
    u = int(rng.integers(n))
    result = table.sample_item(table.vector(u), rng)
    if result is None:
        return _noop("empty-sample")
    v = result.item_id
    if v == u:
        return _noop("self-sample")
    cu, cv = state.assignments[u], state.assignments[v]
    if cu == cv:
        return dumb_split(state, rng)
    members_u = sorted(state.members(cu))
    members_v = sorted(state.members(cv))
    total = _anchor_transition_sum(table, members_u, members_v, False, result.table_index)
    if total <= 0.0:
        return _noop("zero-transition-mass")
    m_after = state.n_clusters - 1
    return ProposalOutcome(
        MergeMove(cu, cv),
        math.log(total) - math.log(n),
        -math.log(m_after) - (len(members_u) + len(members_v)) * _LN2,
    )


# ---------------------------------------------------------------------------
# weighted-minhash kernels
# ---------------------------------------------------------------------------


def minsm_smart_split(
    state: PartitionState, table: LssTable, rng, transformed_points: np.ndarray
) -> ProposalOutcome:
    """Split a cluster along the whole bucket of a uniform point.

    Draw u uniformly and take the full K=1, L=1 minhash bucket S of u.
    The cluster of u splits into (members in S, members outside S). The
    forward probability is (|S| / n) times the probability that a fresh
    minhash draw makes u agree with every in-bucket member and none of
    the rest, which costs one linear pass over the cluster.
    """
    table._require_whole_bucket()
    n = state.n_points
    u = int(rng.integers(n))
    bucket = table._bucket_view(table.vector(u), 0)
    cu = state.assignments[u]
    members = state.members(cu)
    in_bucket = members.intersection(bucket)
    out_bucket = members - in_bucket
    if not out_bucket:
        return _noop("bucket-covers-cluster")
    colliders = transformed_points[sorted(in_bucket)]
    avoiders = transformed_points[sorted(out_bucket)]
    prob = kernels.collide_avoid_ratio(colliders, avoiders)
    if not prob > 0.0:
        return _noop("zero-agreement-probability")
    m_after = state.n_clusters + 1
    return ProposalOutcome(
        SplitMove(cu, frozenset(in_bucket), frozenset(out_bucket)),
        math.log(len(bucket)) - math.log(n) + math.log(prob),
        _LN2 - math.log(m_after) - math.log(m_after - 1),
    )


def minsm_smart_merge(state: PartitionState, centroid_table: LssTable, rng) -> ProposalOutcome:
    """Merge a uniform cluster with a bucket-mate of its centroid.

    Draw a centroid u uniformly among the M live clusters, take its K=1,
    L=1 bucket S in the centroid table, and pick the merge partner v
    uniformly from S excluding u itself. The forward probability is
    (1/M) * jaccard(u, v) * (1/|S|), with |S| counting u; the reverse is
    the dumb split of the merged cluster back into the operands.
    """
    m = state.n_clusters
    if m < 2:
        return _noop("too-few-clusters")
    if len(centroid_table) != m or set(centroid_table.ids()) != set(state.clusters):
        raise ConsistencyError("centroid table is stale with respect to the state")
    ids = list(state.clusters)
    u_cid = ids[int(rng.integers(m))]
    bucket = centroid_table.query_bucket(centroid_table.vector(u_cid))
    candidates = [c for c in bucket.members if c != u_cid]
    if not candidates:
        return _noop("lone-bucket")
    v_cid = candidates[int(rng.integers(len(candidates)))]
    j = kernels.weighted_jaccard(
        centroid_table.vector(u_cid), centroid_table.vector(v_cid)
    )
    if not j > 0.0:
        return _noop("zero-similarity")
    size = len(state.members(u_cid)) + len(state.members(v_cid))
    return ProposalOutcome(
        MergeMove(u_cid, v_cid),
        -math.log(m) + math.log(j) - math.log(len(bucket)),
        -math.log(m - 1) - size * _LN2,
    )
