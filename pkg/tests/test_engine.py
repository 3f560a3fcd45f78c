import math
from collections import Counter

import numpy as np
import pytest

from minsm.data import SyntheticSpec, generate_synthetic
from minsm.engine import (
    Chain,
    ChainConfig,
    ChainError,
    acceptance_log_ratio,
    refresh_centroids,
    run_chain,
)
from minsm.evaluation import (
    exact_partition_posterior,
    normalize_counts,
    partition_key,
    total_variation,
)
from minsm.hashing import HashFamily, HashSpec, transform_nonneg
from minsm.lss import LssTable
from minsm.mixture import Hyperparams, PartitionState, centroid


def test_acceptance_log_ratio_examples():
    assert acceptance_log_ratio(0.0, 0.0, 0.0) == 0.0
    assert acceptance_log_ratio(1e9, -3.0, -1.0) == 0.0
    rng = np.random.default_rng(1)
    for _ in range(100):
        llr, lqr, lqf = rng.standard_normal(3) * 5
        want = math.log(min(1.0, math.exp(min(llr + lqr - lqf, 0.0))))
        assert abs(acceptance_log_ratio(llr, lqr, lqf) - want) < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig("sdds", 10)
    with pytest.raises(ValueError):
        ChainConfig("minsm", 10, k_hashes=10)
    with pytest.raises(ValueError):
        ChainConfig("minsm", 10, n_tables=4)
    with pytest.raises(ValueError):
        ChainConfig("random", -1)
    with pytest.raises(ValueError):
        ChainConfig("random", 10, move_mix=0.0)
    assert ChainConfig("lshsm", 10).resolved_kl() == (10, 10)
    assert ChainConfig("minsm", 10).resolved_kl() == (1, 1)
    assert ChainConfig("lshsm", 10, k_hashes=3, n_tables=2).resolved_kl() == (3, 2)


def test_step_noop_leaves_state_unchanged():
    chain = Chain(np.array([[1.0]]), ChainConfig("random", 10, seed=3))
    before = chain.state.labels().tolist()
    record = chain.step()
    assert record.move_type == "noop" and not record.accepted
    assert chain.state.labels().tolist() == before


def test_accepted_merge_keeps_centroid_table_in_step():
    pts = generate_synthetic(SyntheticSpec(k=3, n=18, dim=4, seed=5)).points
    hyper = Hyperparams(pts.mean(axis=0), 0.01, 2.0, np.ones(4))
    chain = Chain(pts, ChainConfig("minsm", 100, seed=7, hyper=hyper))
    merged = 0
    for _ in range(400):
        record = chain.step()
        if record.accepted and record.move_type == "merge":
            merged += 1
            assert record.n_clusters == chain.state.n_clusters
            assert len(chain.centroid_table) == chain.state.n_clusters
    assert merged > 0


def test_fixed_seed_replays_bit_identically():
    pts = generate_synthetic(SyntheticSpec(k=2, n=12, dim=3, seed=9)).points
    config = ChainConfig("minsm", 300, seed=11, virtual_clock=True)
    _, trace_a = run_chain(pts, config)
    _, trace_b = run_chain(pts, config)
    assert trace_a == trace_b

    config_wall = ChainConfig("lshsm", 200, seed=11, k_hashes=2, n_tables=2)
    _, wall_a = run_chain(pts, config_wall)
    _, wall_b = run_chain(pts, config_wall)
    strip = lambda rs: [
        (r.iteration, r.log_likelihood, r.n_clusters, r.move_type, r.accepted) for r in rs
    ]
    assert strip(wall_a) == strip(wall_b)


def test_run_chain_zero_iterations():
    pts = np.array([[0.0], [1.0]])
    state, trace = run_chain(pts, ChainConfig("random", 0, seed=1))
    assert len(trace) == 1
    assert trace[0].iteration == 0 and trace[0].move_type == "init"
    assert state.n_clusters == 2  # singleton initialization


def test_init_modes():
    pts = generate_synthetic(SyntheticSpec(k=3, n=15, dim=2, seed=2)).points
    single, _ = run_chain(pts, ChainConfig("random", 0, seed=1, init="single"))
    assert single.n_clusters == 1
    km, _ = run_chain(pts, ChainConfig("random", 0, seed=1, init="kmeans", init_k=3))
    assert 1 <= km.n_clusters <= 3


def test_refresh_centroids_tracks_changes_and_rebuild():
    pts = generate_synthetic(SyntheticSpec(k=3, n=15, dim=3, seed=13)).points
    hyper = Hyperparams(pts.mean(axis=0), 0.01, 2.0, np.ones(3))
    chain = Chain(pts, ChainConfig("minsm", 1000, seed=17, hyper=hyper))
    for _ in range(1000):
        chain.step()
    fresh = LssTable(chain.centroid_table.spec, "cluster_centroid")
    for cid in chain.state.cluster_ids():
        fresh.insert(cid, transform_nonneg(centroid(chain.state, cid)))
    assert set(fresh.ids()) == set(chain.centroid_table.ids())
    for cid in fresh.ids():
        np.testing.assert_array_equal(
            fresh.vector(cid), chain.centroid_table.vector(cid)
        )
        assert fresh.code(fresh.vector(cid), 0) == chain.centroid_table.code(
            chain.centroid_table.vector(cid), 0
        )


def test_refresh_centroids_detects_divergence():
    pts = np.array([[1.0, 0.5], [2.0, 0.1], [0.5, 3.0]])
    state = PartitionState.singletons(pts)
    table = LssTable(HashSpec(HashFamily.WEIGHTED_MINHASH, seed=1), "cluster_centroid")
    refresh_centroids(state, table, state.cluster_ids())
    table.remove(0)
    with pytest.raises(ChainError):
        refresh_centroids(state, table, [])


def test_chain_audit_catches_corruption():
    pts = np.array([[0.0], [1.0], [2.0]])
    chain = Chain(pts, ChainConfig("random", 10, seed=23))
    chain.state.clusters[0].stats.s += 5.0
    with pytest.raises(ChainError):
        chain._audit()


def test_trace_wall_time_and_iteration_monotone():
    pts = generate_synthetic(SyntheticSpec(k=2, n=10, dim=2, seed=29)).points
    _, trace = run_chain(pts, ChainConfig("random", 500, seed=31, trace_stride=7))
    iters = [r.iteration for r in trace]
    times = [r.wall_time_ms for r in trace]
    assert iters == sorted(iters) and len(set(iters)) == len(iters)
    assert all(b >= a for a, b in zip(times, times[1:]))
    assert all(math.isfinite(r.log_likelihood) for r in trace)
    assert iters[0] == 0 and all(i % 7 == 0 for i in iters)


def test_random_chain_matches_enumerated_posterior_smoke():
    # five points, exhaustive 52-partition posterior, short run
    pts = np.array([-2.1, -1.9, 2.0, 2.2, 2.4])
    hyper = Hyperparams(np.array([0.0]), 0.3, 2.0, np.array([0.4]))
    post = exact_partition_posterior(pts, hyper)
    chain = Chain(pts[:, None], ChainConfig("random", 0, seed=37, hyper=hyper))
    counts = Counter()
    for _ in range(200_000):
        chain.step()
        asg = chain.state.assignments
        counts[partition_key([asg[i] for i in range(5)])] += 1
    tv = total_variation(normalize_counts(counts), post)
    assert tv < 0.08, tv
