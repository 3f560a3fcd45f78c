import math

import mpmath
import numpy as np
import pytest

from minsm.hashing import HashFamily, HashSpec, srp_collision_prob, weighted_jaccard
from minsm.lss import LssTable, inclusion_prob

WMH11 = HashSpec(HashFamily.WEIGHTED_MINHASH, seed=5)
SRP = HashSpec(HashFamily.SIGN_RANDOM_PROJECTION, seed=5, k_hashes=10, n_tables=10)


def test_build_single_item():
    table = LssTable.build({0: np.array([1.0, 0.5])}, WMH11)
    bucket = table.query_bucket(np.array([1.0, 0.5]))
    assert bucket.members == (0,)
    assert table.audit()


def test_build_duplicate_items_share_buckets():
    v = np.array([0.7, 1.3, 0.1])
    table = LssTable.build({0: v, 1: v.copy(), 2: v.copy()}, WMH11)
    bucket = table.query_bucket(v)
    assert set(bucket.members) == {0, 1, 2}


def test_build_rejects_invalid_vectors():
    with pytest.raises(ValueError):
        LssTable.build({}, WMH11)
    with pytest.raises(ValueError):
        LssTable.build({0: np.array([0.0, 0.0])}, WMH11)
    with pytest.raises(ValueError):
        LssTable.build({0: np.array([1.0, -1.0])}, WMH11)
    with pytest.raises(ValueError):
        LssTable.build({0: np.array([0.0, 0.0])}, SRP)


def test_build_membership_audit_1000_points():
    rng = np.random.default_rng(2)
    items = {i: rng.standard_normal(8) for i in range(1000)}
    table = LssTable.build(items, SRP)
    assert table.audit()
    # every point findable in exactly L buckets, in the bucket of its own code
    for i in (0, 1, 17, 500, 999):
        for l in range(SRP.n_tables):
            assert i in table.bucket_of(items[i], l)


def test_insert_remove_roundtrip():
    rng = np.random.default_rng(3)
    items = {i: np.abs(rng.standard_normal(4)) + 0.1 for i in range(5)}
    table = LssTable.build(items, WMH11)
    baseline = {l: {c: tuple(m) for c, m in table._tables[l].items()} for l in range(1)}
    extra = np.array([0.2, 0.4, 0.6, 0.8])
    table.insert(99, extra)
    table.remove(99)
    assert {l: {c: tuple(m) for c, m in table._tables[l].items()} for l in range(1)} == baseline
    with pytest.raises(KeyError):
        table.insert(0, extra)
    with pytest.raises(KeyError):
        table.remove(1234)


def test_remove_last_member_elides_bucket():
    table = LssTable.build({0: np.array([1.0, 0.0])}, WMH11)
    table.remove(0)
    assert len(table) == 0
    assert all(not t for t in table._tables)


def test_random_insert_remove_equals_fresh_build():
    rng = np.random.default_rng(7)
    spec = HashSpec(HashFamily.SIGN_RANDOM_PROJECTION, seed=99, k_hashes=3, n_tables=4)
    pool = {i: rng.standard_normal(5) for i in range(40)}
    table = LssTable.build({i: pool[i] for i in range(10)}, spec)
    live = set(range(10))
    for _ in range(100):
        if live and rng.random() < 0.5:
            victim = sorted(live)[int(rng.integers(len(live)))]
            table.remove(victim)
            live.discard(victim)
        else:
            free = sorted(set(pool) - live)
            if not free:
                continue
            new = free[int(rng.integers(len(free)))]
            table.insert(new, pool[new])
            live.add(new)
    fresh = LssTable.build({i: pool[i] for i in sorted(live)}, spec)
    for l in range(spec.n_tables):
        got = {c: set(m) for c, m in table._tables[l].items()}
        want = {c: set(m) for c, m in fresh._tables[l].items()}
        assert got == want


def test_sample_item_single_item_table():
    rng = np.random.default_rng(0)
    table = LssTable.build({7: np.array([1.0, 1.0])}, WMH11)
    res = table.sample_item(np.array([1.0, 1.0]), rng)
    assert res.item_id == 7 and len(res.bucket) == 1 and res.tables_probed == 1


def test_sample_item_no_collision_returns_none():
    rng = np.random.default_rng(0)
    table = LssTable.build({0: np.array([1.0, 0.0, 0.0, 0.0])}, WMH11)
    assert table.sample_item(np.array([0.0, 0.0, 1.0, 0.0]), rng) is None


def test_sample_item_marginals_match_inclusion_prob():
    # three disjoint-support items: bucket size is 1 whenever a collision
    # happens, so the sampling law reduces to the pairwise collision law
    items = {
        0: np.array([1.0, 0.0, 0.0]),
        1: np.array([0.0, 1.5, 0.0]),
        2: np.array([0.0, 0.0, 0.8]),
    }
    query = np.array([0.6, 0.9, 0.4])
    expected = {
        i: inclusion_prob(weighted_jaccard(items[i], query), 1, 1, 1) for i in items
    }
    rng = np.random.default_rng(13)
    n = 100_000
    hits = {i: 0 for i in items}
    for draw in range(n):
        spec = HashSpec(HashFamily.WEIGHTED_MINHASH, seed=draw)
        table = LssTable.build(items, spec)
        res = table.sample_item(query, rng)
        if res is not None:
            assert len(res.bucket) == 1
            hits[res.item_id] += 1
    for i in items:
        freq = hits[i] / n
        se = math.sqrt(expected[i] * (1 - expected[i]) / n)
        assert abs(freq - expected[i]) < 3 * se


def test_query_bucket_contains_indexed_query():
    rng = np.random.default_rng(19)
    items = {i: np.abs(rng.standard_normal(6)) + 0.05 for i in range(20)}
    table = LssTable.build(items, WMH11)
    for i in items:
        assert i in table.query_bucket(items[i])


def test_query_bucket_matches_recomputed_codes():
    rng = np.random.default_rng(23)
    items = {i: np.abs(rng.standard_normal(4)) + 0.05 for i in range(50)}
    spec = HashSpec(HashFamily.WEIGHTED_MINHASH, seed=77)
    table = LssTable.build(items, spec)
    for probe in (0, 13, 42):
        bucket = set(table.query_bucket(items[probe]).members)
        want = {
            i for i in items if table.code(items[i], 0) == table.code(items[probe], 0)
        }
        assert bucket == want


def test_query_bucket_rejects_wide_tables():
    rng = np.random.default_rng(29)
    items = {i: rng.standard_normal(4) for i in range(5)}
    table = LssTable.build(items, SRP)
    with pytest.raises(ValueError):
        table.query_bucket(items[0])


def test_inclusion_prob_examples():
    assert inclusion_prob(1.0, 3, 7, 4) == 0.25
    assert inclusion_prob(0.5, 1, 1, 1) == 0.5
    with pytest.raises(ValueError):
        inclusion_prob(0.5, 1, 1, 0)
    with pytest.raises(ValueError):
        inclusion_prob(1.5, 1, 1, 1)


def test_inclusion_prob_against_high_precision_oracle():
    with mpmath.workdps(60):
        want = (1 - (1 - mpmath.mpf("0.3") ** 2) ** 4) / 3
        got = inclusion_prob(0.3, 2, 4, 3)
        assert abs(got - float(want)) < 1e-15


def test_dissimilar_query():
    rng = np.random.default_rng(31)
    table = LssTable.build({i: rng.standard_normal(3) for i in range(4)}, SRP)
    np.testing.assert_array_equal(
        table.dissimilar_query(np.array([1.0, -2.0, 0.0])), [-1.0, 2.0, 0.0]
    )
    wmh_table = LssTable.build({0: np.array([1.0, 0.0])}, WMH11)
    with pytest.raises(ValueError):
        wmh_table.dissimilar_query(np.array([1.0, 0.0]))


def test_dissimilar_query_angle_identity():
    rng = np.random.default_rng(37)
    for _ in range(20):
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        assert abs(
            srp_collision_prob(-u, v) - (1.0 - srp_collision_prob(u, v))
        ) < 1e-12
