from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from baryloc.generators import gen_lattice
from baryloc.network import (
    SensorNetwork,
    brute_force_cliques,
    build_edges,
    clique_array,
    enumerate_simplex_sets,
    enumerate_simplex_sets_capped,
    full_subset_count,
    iter_cliques,
    neighbors,
    prune_unlocalizable,
)
from helpers import net_from_edges, prune_brute, random_net


# build_edges / neighbors

def test_edge_boundary_inclusive():
    net = build_edges([[0.0, 0.0], [2.0, 0.0]], [2.0, 2.0])
    assert (1, 2) in net.edges and net.edges[(1, 2)] == 2.0


def test_edge_min_rule():
    net = build_edges([[0.0, 0.0], [2.1, 0.0]], [3.0, 2.0])
    assert net.edges == {}


def test_lattice_degrees_match_brute_force():
    net = gen_lattice(4, 1.0, 2.0)
    assert net.m == 64
    pts = {i: net.coords[i] for i in net.ids}
    for i in net.ids:
        expected = {j for j in net.ids if j != i and np.sum((pts[i] - pts[j]) ** 2) <= 4.0}
        assert set(neighbors(net, i)) == expected
    degrees = sorted(len(neighbors(net, i)) for i in net.ids)
    # corner (0,0,0): 3 axis + 3 face-diagonal + 1 body-diagonal + 3 at distance 2
    corner = net.ids[0]
    assert len(neighbors(net, corner)) == 10
    # (1,1,1) reaches 26 unit-box offsets plus +2 along each axis; no +-2 pair fits in 4
    assert degrees[-1] == 29


def test_neighbors_symmetric_and_isolated():
    net = build_edges([[0, 0], [1, 0], [10, 10]], 1.5)
    assert neighbors(net, 3) == frozenset()
    for i in net.ids:
        for j in neighbors(net, i):
            assert i in neighbors(net, j)
    with pytest.raises(KeyError):
        neighbors(net, 99)


def test_network_validation():
    with pytest.raises(ValueError):
        SensorNetwork(2, (1, 2), {1: 1, 2: 1}, frozenset(), {(2, 1): 1.0})
    with pytest.raises(ValueError):
        SensorNetwork(2, (1, 2), {1: 1, 2: 1}, frozenset({1}), {})  # anchor without coords
    with pytest.raises(ValueError):
        SensorNetwork(2, (2, 1), {1: 1, 2: 1}, frozenset(), {})


# enumeration

def _complete(k, dim):
    rng = np.random.default_rng(k)
    pts = rng.normal(size=(k, dim))
    return build_edges(pts, 100.0)


def test_too_few_neighbors():
    net = _complete(3, 3)  # every node has 2 neighbors, n = 3
    assert enumerate_simplex_sets(net, 1) == []
    assert enumerate_simplex_sets_capped(net, 1, 5) == []


def test_exactly_n_plus_one_neighbors():
    net = _complete(4, 2)  # 3 neighbors each in 2D
    sets = enumerate_simplex_sets(net, 1)
    assert [s.members for s in sets] == [(2, 3, 4)]


@pytest.mark.parametrize("dim", [2, 3])
def test_n_plus_two_neighbors(dim):
    net = _complete(dim + 3, dim)
    sets = enumerate_simplex_sets(net, 1)
    assert len(sets) == dim + 2
    assert [s.members for s in sets] == brute_force_cliques(net, 1)
    assert len(sets) <= full_subset_count(net, 1)


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_enumeration_matches_brute_force(seed, dim):
    net = random_net(seed, m=18, dim=dim, spread=1.0, range_=1.5)
    for l in net.ids:
        expected = brute_force_cliques(net, l)
        assert [tuple(r) for r in clique_array(net, l).tolist()] == expected
        assert list(iter_cliques(net, l)) == expected
        for s in enumerate_simplex_sets(net, l):
            assert s.owner == l and l not in s.members
            assert all(j in net.adjacency[l] for j in s.members)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_capped_subset_and_coverage(seed, cap):
    net = random_net(seed, m=16, dim=2, spread=1.0, range_=1.4)
    for l in net.ids:
        full = {s.members for s in enumerate_simplex_sets(net, l)}
        capped = [s.members for s in enumerate_simplex_sets_capped(net, l, cap)]
        assert capped == sorted(set(capped))  # deduplicated, lexicographic
        assert set(capped) <= full
        covered = {j for t in capped for j in t}
        for j in {j for t in full for j in t}:
            assert j in covered


def test_capped_large_cap_equals_full():
    net = random_net(3, m=20, dim=2, spread=1.0, range_=1.6)
    for l in net.ids:
        full = [s.members for s in enumerate_simplex_sets(net, l)]
        assert [s.members for s in enumerate_simplex_sets_capped(net, l, 10**6)] == full


def test_capped_one_on_big_clique():
    net = _complete(9, 2)
    sets = enumerate_simplex_sets_capped(net, 1, 1)
    nbrs = neighbors(net, 1)
    assert len(sets) <= len(nbrs)
    assert {j for s in sets for j in s.members} == set(nbrs)


def test_capped_deterministic_and_monotone():
    net = random_net(5, m=30, dim=3, spread=1.0, range_=1.8)
    for l in net.ids[:10]:
        a = enumerate_simplex_sets_capped(net, l, 2)
        assert a == enumerate_simplex_sets_capped(net, l, 2)
        sizes = [len(enumerate_simplex_sets_capped(net, l, c)) for c in (1, 2, 5, 50)]
        assert sizes == sorted(sizes)


def test_capped_rejects_bad_cap():
    with pytest.raises(ValueError):
        enumerate_simplex_sets_capped(_complete(5, 2), 1, 0)


# pruning

def test_prune_complete_network_keeps_all():
    net = _complete(8, 3).with_anchors([1, 2, 3, 4])
    pruned, removed = prune_unlocalizable(net)
    assert removed == [] and pruned.ids == net.ids


def test_prune_chain_removes_all_unknowns():
    coords = {i: (float(i), 0.0) for i in range(1, 8)}
    net = net_from_edges(coords, [(i, i + 1) for i in range(1, 7)], anchors=[1, 2, 3])
    pruned, removed = prune_unlocalizable(net)
    assert removed == [4, 5, 6, 7]
    assert set(pruned.ids) == {1, 2, 3}


def test_prune_cascade():
    # 7 only sees the collinear triple 1, 2, 6; once 7 goes, 6 drops to two neighbors
    coords = {1: (0, 0), 2: (2, 0), 3: (0, 10), 4: (0.5, 1), 6: (1, 0), 7: (1, 1)}
    pairs = [(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4),
             (1, 6), (2, 6), (1, 7), (2, 7), (6, 7)]
    net = net_from_edges(coords, pairs, anchors=[1, 2, 3])
    pruned, removed = prune_unlocalizable(net)
    assert removed == [6, 7] == prune_brute(net)
    assert pruned.ids == (1, 2, 3, 4)


def test_prune_gaussian_zero_scale():
    pts = np.zeros((8, 3))
    net = build_edges(pts, 1.0).with_anchors([1, 2, 3, 4])
    pruned, removed = prune_unlocalizable(net)
    assert removed == [5, 6, 7, 8]


@given(st.integers(0, 10_000))
def test_prune_matches_brute_force_and_is_idempotent(seed):
    net = random_net(seed, m=20, dim=2, spread=1.2, range_=1.5)
    anchors = [1, 2, 3]
    net = net.with_anchors(anchors)
    pruned, removed = prune_unlocalizable(net)
    assert removed == prune_brute(net)
    again, removed2 = prune_unlocalizable(pruned)
    assert removed2 == [] and again.ids == pruned.ids
    assert set(anchors) <= set(pruned.ids)
    for l in pruned.unknowns:
        assert enumerate_simplex_sets(pruned, l)
