"""(K, L) locality-sensitive hash tables with adaptive sampling.

The table stores item ids only; vectors live in one shared read-only dict.
Sampling follows the two-phase scheme: pick hash tables in random order
until a nonempty bucket for the query is found, then return a uniform
member of that bucket. An item with single-table collision probability p
is returned with probability (1 - (1 - p^K)^L) / bucket_size.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .hashing import HashFamily, HashSpec, icws_params, srp_planes


@dataclass(frozen=True)
class Bucket:
    """Ids sharing one hash code, in insertion order."""

    members: tuple

    def __len__(self):
        return len(self.members)

    def __contains__(self, item):
        return item in self.members


@dataclass(frozen=True)
class SampleResult:
    item_id: int
    bucket: Bucket
    tables_probed: int
    table_index: int


def inclusion_prob(p: float, k_hashes: int, n_tables: int, bucket_size: int) -> float:
    """(1 - (1 - p^K)^L) / bucket_size."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if bucket_size < 1:
        raise ValueError("bucket_size must be >= 1")
    return (1.0 - (1.0 - p**k_hashes) ** n_tables) / bucket_size


class LssTable:
    """L hash tables over points or cluster centroids.

    Each indexed item appears in exactly one bucket per table, reproducible
    from (vector, spec, table index). Point tables are immutable after
    build in normal use; centroid tables are mutated via insert/remove by
    the owning chain.
    """

    def __init__(self, spec: HashSpec, item_kind: str = "data_point"):
        self.spec = spec
        self.item_kind = item_kind
        # bucket = member list plus id->slot map, so removal swaps with the
        # tail and stays O(1) even when centroid buckets churn
        self._tables = [dict() for _ in range(spec.n_tables)]
        self._positions = [dict() for _ in range(spec.n_tables)]
        self._items: dict[int, np.ndarray] = {}
        self._params = None
        self._dims = None

    @classmethod
    def build(cls, items: dict, spec: HashSpec, item_kind: str = "data_point"):
        if not items:
            raise ValueError("cannot build a table over zero items")
        table = cls(spec, item_kind)
        for item_id, vec in items.items():
            table.insert(item_id, vec)
        return table

    def __len__(self):
        return len(self._items)

    def ids(self):
        return self._items.keys()

    def vector(self, item_id: int) -> np.ndarray:
        return self._items[item_id]

    def _validate(self, vec) -> np.ndarray:
        arr = np.ascontiguousarray(vec, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("items must be 1-d vectors")
        if not np.all(np.isfinite(arr)):
            raise ValueError("items must be finite")
        if self.spec.family is HashFamily.WEIGHTED_MINHASH:
            if np.any(arr < 0.0) or not np.any(arr > 0.0):
                raise ValueError(
                    "weighted-minhash items must be non-negative with a nonzero entry"
                )
        elif not np.any(arr != 0.0):
            raise ValueError("sign-projection items must be nonzero")
        if self._dims is None:
            self._dims = arr.shape[0]
            self._init_params()
        elif arr.shape[0] != self._dims:
            raise ValueError("items must share one dimensionality")
        return arr

    def _init_params(self):
        if self.spec.family is HashFamily.SIGN_RANDOM_PROJECTION:
            self._params = [
                srp_planes(self.spec, l, self._dims)
                for l in range(self.spec.n_tables)
            ]
        else:
            self._params = [
                icws_params(self.spec, l, self._dims)
                for l in range(self.spec.n_tables)
            ]

    def code(self, vec: np.ndarray, table_index: int) -> int:
        """Hash code of a (validated) vector in one table."""
        if self.spec.family is HashFamily.SIGN_RANDOM_PROJECTION:
            return int(kernels.srp_code(vec, self._params[table_index]))
        r, lnc, beta = self._params[table_index]
        return int(kernels.icws_code(vec, r, lnc, beta))

    def insert(self, item_id: int, vec):
        if item_id in self._items:
            raise KeyError(f"item {item_id} already indexed")
        arr = self._validate(vec)
        self._items[item_id] = arr
        for l in range(self.spec.n_tables):
            members = self._tables[l].setdefault(self.code(arr, l), [])
            self._positions[l][item_id] = len(members)
            members.append(item_id)
        return self

    def remove(self, item_id: int):
        if item_id not in self._items:
            raise KeyError(f"item {item_id} not indexed")
        arr = self._items.pop(item_id)
        for l in range(self.spec.n_tables):
            c = self.code(arr, l)
            members = self._tables[l][c]
            slot = self._positions[l].pop(item_id)
            tail = members.pop()
            if tail != item_id:
                members[slot] = tail
                self._positions[l][tail] = slot
            if not members:
                del self._tables[l][c]
        return self

    def _bucket_view(self, query, table_index: int) -> list:
        """Member list of the query's bucket, shared, not to be mutated."""
        arr = np.ascontiguousarray(query, dtype=np.float64)
        return self._tables[table_index].get(self.code(arr, table_index), [])

    def bucket_of(self, query, table_index: int) -> Bucket:
        """Full bucket matching the query's code in one table (may be empty)."""
        return Bucket(tuple(self._bucket_view(query, table_index)))

    def sample_item(self, query, rng) -> SampleResult | None:
        """Two-phase adaptive sample for a query vector.

        Probes the L tables in uniformly random order without replacement
        until a nonempty bucket is found, then returns a uniform member of
        that bucket. Returns None when every bucket for the query is empty.
        """
        if not self._items:
            raise ValueError("cannot sample from an empty table")
        n_tables = self.spec.n_tables
        order = rng.permutation(n_tables) if n_tables > 1 else (0,)
        for probed, table_index in enumerate(order, start=1):
            members = self._bucket_view(query, int(table_index))
            if members:
                pick = members[int(rng.integers(len(members)))]
                return SampleResult(pick, Bucket(tuple(members)), probed, int(table_index))
        return None

    def _require_whole_bucket(self):
        if self.spec.k_hashes != 1 or self.spec.n_tables != 1:
            raise ValueError("whole-bucket queries require a K=1, L=1 table")

    def query_bucket(self, query) -> Bucket:
        """Whole bucket of the query under the single K=1, L=1 hash."""
        self._require_whole_bucket()
        return self.bucket_of(query, 0)

    def dissimilar_query(self, query) -> np.ndarray:
        """Negated query, which biases sampling toward far vectors.

        Only meaningful for sign projections; negation has no counterpart
        in the non-negative minhash domain.
        """
        if self.spec.family is not HashFamily.SIGN_RANDOM_PROJECTION:
            raise ValueError("dissimilar queries require a sign-projection table")
        arr = np.asarray(query, dtype=np.float64)
        return -arr

    def audit(self):
        """Verify every stored bucket entry against recomputed codes."""
        for l in range(self.spec.n_tables):
            seen = {}
            for code, members in self._tables[l].items():
                for item_id in members:
                    if item_id in seen:
                        raise AssertionError(f"item {item_id} in two buckets")
                    seen[item_id] = code
                    actual = self.code(self._items[item_id], l)
                    if actual != code:
                        raise AssertionError(
                            f"item {item_id} stored under stale code in table {l}"
                        )
            if seen.keys() != self._items.keys():
                raise AssertionError(f"table {l} does not cover all items")
        return True
