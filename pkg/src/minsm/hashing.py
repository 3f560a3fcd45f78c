"""Hash families and closed-form collision probabilities.

Two families are provided:

* Sign random projection (SRP): K sign bits of seeded Gaussian projections.
  A single bit collides for a pair of vectors with probability
  ``1 - angle(x, y) / pi``.
* Weighted MinHash via improved consistent weighted sampling (ICWS), whose
  collision probability for non-negative vectors equals the weighted
  Jaccard similarity ``sum_j min(x_j, y_j) / sum_j max(x_j, y_j)``. The
  scheme is a consistent sampler, so the law extends to simultaneous
  collisions of whole sets and to the collide-with-set / avoid-set
  probability used by the whole-bucket split kernel.

Arbitrary-sign vectors enter MinHash through ``transform_nonneg``, which
splits every coordinate into a positive and a negative part (doubling the
dimension) so the Jaccard similarity stays meaningful.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels


class HashFamily(enum.Enum):
    SIGN_RANDOM_PROJECTION = "srp"
    WEIGHTED_MINHASH = "wmh"


@dataclass(frozen=True)
class HashSpec:
    """Parameters of a (K, L) hash table family.

    K hash functions are concatenated per table, L tables total. All
    randomness derives from ``seed`` and the table index, so hashing is a
    pure function of its inputs.
    """

    family: HashFamily
    seed: int
    k_hashes: int = 1
    n_tables: int = 1

    def __post_init__(self):
        if self.k_hashes < 1 or self.n_tables < 1:
            raise ValueError("k_hashes and n_tables must be >= 1")
        if self.family is HashFamily.SIGN_RANDOM_PROJECTION and self.k_hashes > 62:
            raise ValueError("sign-projection codes are packed into int64, K <= 62")


def _as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _as_nonneg(v, name="vector"):
    arr = _as_vector(v, name)
    if np.any(arr < 0.0):
        raise ValueError(f"{name} must be non-negative")
    return arr


def transform_nonneg(v) -> np.ndarray:
    """Map a length-D vector to its non-negative length-2D image.

    Coordinate j of the input becomes (max(v_j, 0), max(-v_j, 0)) at
    positions (j, j + D), so at most one of the pair is nonzero.
    """
    arr = _as_vector(v)
    return np.concatenate([np.maximum(arr, 0.0), np.maximum(-arr, 0.0)])


def weighted_jaccard(x, y) -> float:
    """sum_j min(x_j, y_j) / sum_j max(x_j, y_j) for non-negative x, y."""
    xa = _as_nonneg(x, "x")
    ya = _as_nonneg(y, "y")
    if xa.shape != ya.shape:
        raise ValueError("inputs must have equal length")
    out = kernels.weighted_jaccard(xa, ya)
    if math.isnan(out):
        raise ValueError("similarity undefined: both inputs are all-zero")
    return out


def _stack_nonneg(vs, name):
    if len(vs) == 0:
        raise ValueError(f"{name} must be nonempty")
    rows = [_as_nonneg(v, name) for v in vs]
    dims = rows[0].shape[0]
    if any(r.shape[0] != dims for r in rows):
        raise ValueError(f"{name} vectors must share one length")
    return np.stack(rows)


def kway_collision_prob(vs) -> float:
    """Probability a single weighted MinHash draw agrees across all of vs.

    Equals sum_j min over the set / sum_j max over the set.
    """
    stacked = _stack_nonneg(list(vs), "vectors")
    empty = np.empty((0, stacked.shape[1]))
    out = kernels.collide_avoid_ratio(stacked, empty)
    if math.isnan(out):
        raise ValueError("collision probability undefined: all-zero union")
    return out


def split_collision_prob(colliders, avoiders) -> float:
    """Probability a fresh MinHash makes every collider agree and no avoider.

    With x_min the coordinatewise min over colliders, x_max the max over
    avoiders (zero when there are none) and x_all the max over the union::

        sum_j max(0, x_min_j - x_max_j) / sum_j x_all_j

    Cost is linear in the number of vectors. An empty avoider set reduces
    this exactly to ``kway_collision_prob`` (same code path, same
    summation order).
    """
    coll = _stack_nonneg(list(colliders), "colliders")
    avoid_list = list(avoiders)
    if avoid_list:
        avoid = _stack_nonneg(avoid_list, "avoiders")
        if avoid.shape[1] != coll.shape[1]:
            raise ValueError("collider and avoider vectors must share one length")
    else:
        avoid = np.empty((0, coll.shape[1]))
    out = kernels.collide_avoid_ratio(coll, avoid)
    if math.isnan(out):
        raise ValueError("collision probability undefined: all-zero union")
    return out


# ---------------------------------------------------------------------------
# Sign random projection
# ---------------------------------------------------------------------------

_SRP_TAG = 0x53525000  # namespaces srp streams away from minhash streams


def srp_planes(spec: HashSpec, table_index: int, dim: int) -> np.ndarray:
    """The K x dim Gaussian projection matrix of one table."""
    rng = np.random.default_rng([spec.seed & 0xFFFFFFFFFFFFFFFF, table_index, _SRP_TAG])
    return rng.standard_normal((spec.k_hashes, dim))


def srp_hash(v, spec: HashSpec, table_index: int = 0) -> int:
    """K sign bits of seeded random projections, packed into an int.

    Bit i is 1 when the i-th projection is >= 0 (a zero projection counts
    as positive). Deterministic in (v, spec.seed, table_index).
    """
    if spec.family is not HashFamily.SIGN_RANDOM_PROJECTION:
        raise ValueError("srp_hash requires a sign-random-projection spec")
    arr = _as_vector(v)
    planes = srp_planes(spec, table_index, arr.shape[0])
    return int(kernels.srp_code(arr, planes))


def srp_collision_prob(x, y) -> float:
    """Single-bit collision probability 1 - angle(x, y) / pi."""
    xa = _as_vector(x, "x")
    ya = _as_vector(y, "y")
    nx = float(np.linalg.norm(xa))
    ny = float(np.linalg.norm(ya))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("collision probability undefined for zero vectors")
    cos = float(np.clip(xa @ ya / (nx * ny), -1.0, 1.0))
    return 1.0 - math.acos(cos) / math.pi


# ---------------------------------------------------------------------------
# Weighted MinHash (improved consistent weighted sampling)
# ---------------------------------------------------------------------------

_WMH_TAG = 0x574D4800


def icws_params(spec: HashSpec, table_index: int, dims: int):
    """Per-coordinate ICWS randomness (r, ln c, beta) for one hash function.

    r and c are Gamma(2, 1) draws, beta is Uniform(0, 1); all three depend
    only on (spec.seed, table_index).
    """
    rng = np.random.default_rng([spec.seed & 0xFFFFFFFFFFFFFFFF, table_index, _WMH_TAG])
    r = rng.gamma(2.0, 1.0, dims)
    lnc = np.log(rng.gamma(2.0, 1.0, dims))
    beta = rng.uniform(0.0, 1.0, dims)
    return r, lnc, beta


def wmh_hash(v, spec: HashSpec, table_index: int = 0) -> int:
    """One consistent weighted sample of v, as a packed integer identifier.

    The identifier encodes the sampled coordinate and its discrete level;
    two vectors receive equal identifiers with probability exactly their
    weighted Jaccard similarity, and the agreement law extends to sets.
    """
    if spec.family is not HashFamily.WEIGHTED_MINHASH:
        raise ValueError("wmh_hash requires a weighted-minhash spec")
    arr = _as_nonneg(v)
    if not np.any(arr > 0.0):
        raise ValueError("weighted minhash undefined for an all-zero vector")
    r, lnc, beta = icws_params(spec, table_index, arr.shape[0])
    return int(kernels.icws_code(arr, r, lnc, beta))


def wmh_codes(vectors: np.ndarray, spec: HashSpec, table_index: int = 0) -> np.ndarray:
    """Vectorized ``wmh_hash`` over the rows of a (m, dims) array."""
    arr = np.ascontiguousarray(vectors, dtype=np.float64)
    r, lnc, beta = icws_params(spec, table_index, arr.shape[1])
    return kernels.icws_codes(arr, r, lnc, beta)


def wmh_codes_over_seeds(vectors, n_seeds: int, seed: int) -> np.ndarray:
    """Codes of each vector under n_seeds independent hash functions.

    Returns an (n_vectors, n_seeds) int64 array; column s holds the codes
    of one shared hash function. Used to estimate collision frequencies.
    """
    rows = [_as_nonneg(v) for v in vectors]
    dims = rows[0].shape[0]
    rng = np.random.default_rng(seed)
    out = np.empty((len(rows), n_seeds), dtype=np.int64)
    block = 1 << 14
    start = 0
    while start < n_seeds:
        stop = min(start + block, n_seeds)
        m = stop - start
        r = rng.gamma(2.0, 1.0, (m, dims))
        lnc = np.log(rng.gamma(2.0, 1.0, (m, dims)))
        beta = rng.uniform(0.0, 1.0, (m, dims))
        for i, v in enumerate(rows):
            out[i, start:stop] = kernels.icws_codes_over_seeds(v, r, lnc, beta)
        start = stop
    return out


def srp_codes_over_seeds(vectors, n_seeds: int, seed: int, k_hashes: int = 1) -> np.ndarray:
    """K-bit sign-projection codes of each vector under fresh hyperplanes."""
    rows = np.stack([_as_vector(v) for v in vectors])
    dim = rows.shape[1]
    rng = np.random.default_rng(seed)
    out = np.empty((rows.shape[0], n_seeds), dtype=np.int64)
    block = 1 << 14
    start = 0
    while start < n_seeds:
        stop = min(start + block, n_seeds)
        planes = rng.standard_normal((stop - start, k_hashes, dim))
        for s in range(stop - start):
            out[:, start + s] = kernels.srp_codes(rows, planes[s])
        start = stop
    return out
