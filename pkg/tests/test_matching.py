"""Maximum-matching kernel against brute force and an independent
augmenting-path implementation, plus the canonical tie-breaking contract.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochmatch.instance import arrival_indices, generate_random_instance, sample_arrivals
from stochmatch.matching import max_matching, opt_value

from conftest import brute_force_matching, kuhn_matching, random_ball_adj


def test_empty_and_trivial():
    assert max_matching([], 3).size == 0
    assert max_matching([()], 3).size == 0
    r = max_matching([(0,)], 1)
    assert r.size == 1 and r.ball_to_bin == (0,)


def test_perfect_chain():
    adj = [(0, 1), (1, 2), (2, 3), (3,)]
    r = max_matching(adj, 4)
    assert r.size == 4


def test_star_contention():
    # three balls all adjacent only to one bin
    r = max_matching([(0,), (0,), (0,)], 2)
    assert r.size == 1
    # canonical rule: earliest ball wins the contested bin
    assert r.ball_to_bin == (0, -1, -1)


def test_augmenting_needed():
    # greedy order would trap bin 0; an augmenting path frees it
    adj = [(0, 1), (0,)]
    r = max_matching(adj, 2)
    assert r.size == 2
    assert sorted(r.pairs()) == [(0, 1), (1, 0)]


def test_matching_validity_random():
    rng = np.random.default_rng(5)
    for _ in range(300):
        n_balls = int(rng.integers(0, 9))
        n_bins = int(rng.integers(1, 7))
        adj = random_ball_adj(rng, n_balls, n_bins, 0.4)
        r = max_matching(adj, n_bins)
        used = [z for z in r.ball_to_bin if z >= 0]
        assert len(used) == len(set(used)) == r.size
        for i, z in enumerate(r.ball_to_bin):
            assert z == -1 or z in adj[i]


def test_against_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(250):
        n_balls = int(rng.integers(0, 7))
        n_bins = int(rng.integers(1, 6))
        adj = random_ball_adj(rng, n_balls, n_bins, 0.45)
        assert max_matching(adj, n_bins).size == brute_force_matching(adj, n_bins)


def test_against_independent_kuhn_larger():
    rng = np.random.default_rng(23)
    for _ in range(120):
        n_balls = int(rng.integers(0, 40))
        n_bins = int(rng.integers(1, 25))
        p = float(rng.uniform(0.03, 0.4))
        adj = random_ball_adj(rng, n_balls, n_bins, p)
        assert max_matching(adj, n_bins).size == kuhn_matching(adj, n_bins)


@given(st.integers(0, 2 ** 24 - 1))
def test_property_sizes_agree(seed):
    rng = np.random.default_rng(seed)
    n_balls = int(rng.integers(0, 10))
    n_bins = int(rng.integers(1, 8))
    adj = random_ball_adj(rng, n_balls, n_bins, 0.35)
    assert max_matching(adj, n_bins).size == kuhn_matching(adj, n_bins)


def test_monotone_in_edges():
    # adding an edge never decreases the matching size
    rng = np.random.default_rng(3)
    for _ in range(60):
        n_balls = int(rng.integers(1, 10))
        n_bins = int(rng.integers(1, 8))
        adj = random_ball_adj(rng, n_balls, n_bins, 0.25)
        base = max_matching(adj, n_bins).size
        i = int(rng.integers(n_balls))
        missing = [z for z in range(n_bins) if z not in adj[i]]
        if not missing:
            continue
        adj2 = list(adj)
        adj2[i] = tuple(sorted(adj[i] + (missing[0],)))
        assert max_matching(adj2, n_bins).size >= base


def test_opt_value_counts():
    inst = generate_random_instance(5, 4, 3, rate_mode="fractional", seed=2)
    rng = np.random.default_rng(7)
    for _ in range(50):
        seq = sample_arrivals(inst, rng)
        size, usage = opt_value(inst, seq)
        assert size == sum(usage.values())
        adj = [inst.ball_types[t].neighbors for t in arrival_indices(inst, seq)]
        adj_idx = [tuple(inst.bin_index[z] for z in nb) for nb in adj]
        assert size == kuhn_matching(adj_idx, inst.n_bins)
        for (tid, zid), c in usage.items():
            assert c >= 1
            assert zid in inst.ball_types[inst.type_index[tid]].neighbors


def test_bad_bin_index_rejected():
    with pytest.raises(ValueError):
        max_matching([(2,)], 2)
