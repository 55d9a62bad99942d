"""Small network builders and brute-force oracles shared by the tests."""

from itertools import combinations

import numpy as np

from baryloc.geometry import cayley_menger_det_from_table, is_degenerate
from baryloc.network import SensorNetwork, build_edges


def net_from_edges(coords, pairs, anchors=(), dim=None):
    """Network with explicit edges; distances taken from ``coords`` (id -> point)."""
    coords = {i: np.asarray(x, float) for i, x in coords.items()}
    dim = dim or len(next(iter(coords.values())))
    edges = {}
    for a, b in pairs:
        i, j = min(a, b), max(a, b)
        edges[(i, j)] = float(np.linalg.norm(coords[i] - coords[j]))
    ids = tuple(sorted(coords))
    return SensorNetwork(dim, ids, {i: 1.0 for i in ids}, frozenset(anchors), edges, coords)


def random_net(seed, m=25, dim=2, spread=2.0, range_=1.6):
    rng = np.random.default_rng(seed)
    return build_edges(rng.normal(scale=spread, size=(m, dim)), range_)


def usable_brute(net, l, alive):
    """Oracle: some (n+1)-combination of live neighbors is a clique of non-zero volume."""
    n = net.dimension
    nbrs = sorted(j for j in net.adjacency[l] if j in alive)
    for combo in combinations(nbrs, n + 1):
        if not all((a, b) in net.edges for a, b in combinations(combo, 2)):
            continue
        table = np.array([[net.distance(a, b) ** 2 for b in combo] for a in combo])
        if not is_degenerate(cayley_menger_det_from_table(table), table):
            return True
    return False


def prune_brute(net):
    """Oracle: sweep every node until a full pass removes nothing."""
    alive = set(net.ids)
    changed = True
    while changed:
        changed = False
        for l in sorted(alive):
            if l in net.anchors:
                continue
            live = [j for j in net.adjacency[l] if j in alive]
            if len(live) < net.dimension + 1 or not usable_brute(net, l, alive):
                alive.discard(l)
                changed = True
    return sorted(set(net.ids) - alive)


def diloc_system(seed, q=12, dim=2):
    """System whose rows are positive barycentric rows (interior frames).

    Unknowns lie inside a big anchor simplex; each takes the first simplex of
    nearby nodes that strictly contains it, so every row is positive and
    ``D`` is substochastic.
    """
    from itertools import combinations as comb
    from baryloc.barycentric import barycentric_from_coordinates
    from baryloc.solver import system_from_blocks

    rng = np.random.default_rng(seed)
    anchors = np.vstack([np.zeros(dim), 10.0 * np.eye(dim)])
    p = dim + 1
    w = rng.dirichlet(np.ones(p), size=q) * 0.9 + 0.1 / p
    unknowns = w @ anchors
    pts = np.vstack([anchors, unknowns])
    C = np.zeros((q, p))
    D = np.zeros((q, q))
    for u in range(q):
        me = p + u
        others = [k for k in np.argsort(np.linalg.norm(pts - pts[me], axis=1)) if k != me]
        for frame in comb(others, dim + 1):
            try:
                lam = barycentric_from_coordinates(pts[list(frame)], pts[me])
            except ValueError:
                continue
            if np.all(lam > 1e-3):
                break
        else:
            raise AssertionError("no containing simplex")
        for k, v in zip(frame, lam):
            if k < p:
                C[u, k] += v
            else:
                D[u, k - p] += v
    return system_from_blocks(C, D, anchors), unknowns
