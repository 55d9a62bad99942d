"""Range-graph model, neighbor subsets and pruning.

A :class:`SensorNetwork` is immutable once built. Node ids are positive
integers kept in ascending order; all tie-breaking in this module is by id.
"""

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import NamedTuple

import numpy as np

from .geometry import DEGENERACY_EPS, batch_cm_det, degeneracy_scale

__all__ = [
    "SensorNetwork",
    "SimplexIndexSet",
    "build_edges",
    "neighbors",
    "enumerate_simplex_sets",
    "enumerate_simplex_sets_capped",
    "iter_cliques",
    "clique_array",
    "simplex_tables",
    "feasible_mask",
    "has_usable_subset",
    "prune_unlocalizable",
]


class SimplexIndexSet(NamedTuple):
    """An ordered ``(n + 1)``-clique of neighbors of ``owner``."""

    owner: int
    members: tuple


@dataclass(frozen=True)
class SensorNetwork:
    dimension: int
    ids: tuple
    ranges: dict
    anchors: frozenset
    edges: dict  # (i, j) with i < j -> distance
    coords: dict = field(default_factory=dict)  # id -> true coordinates, may be partial
    adjacency: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        ids = tuple(self.ids)
        if list(ids) != sorted(set(ids)):
            raise ValueError("node ids must be unique and ascending")
        if any(i < 1 for i in ids):
            raise ValueError("node ids must be positive integers")
        idset = set(ids)
        adj = {i: set() for i in ids}
        for (i, j), d in self.edges.items():
            if not i < j:
                raise ValueError(f"edge key ({i}, {j}) must satisfy i < j")
            if i not in idset or j not in idset:
                raise ValueError(f"edge ({i}, {j}) references an unknown node")
            if not d >= 0:
                raise ValueError(f"edge ({i}, {j}) has invalid distance {d}")
            adj[i].add(j)
            adj[j].add(i)
        for a in self.anchors:
            if a not in idset:
                raise ValueError(f"anchor {a} is not a node")
            if a not in self.coords:
                raise ValueError(f"anchor {a} has no coordinates")
        for i, x in self.coords.items():
            if i not in idset:
                raise ValueError(f"coordinates given for unknown node {i}")
            if len(x) != self.dimension:
                raise ValueError(f"node {i} coordinates have length {len(x)}, expected {self.dimension}")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "adjacency", {i: frozenset(s) for i, s in adj.items()})

    @property
    def m(self):
        return len(self.ids)

    @property
    def p(self):
        return len(self.anchors)

    @property
    def q(self):
        return self.m - self.p

    @property
    def unknowns(self):
        return tuple(i for i in self.ids if i not in self.anchors)

    def distance(self, i, j):
        if i == j:
            return 0.0
        key = (i, j) if i < j else (j, i)
        try:
            return self.edges[key]
        except KeyError:
            raise KeyError(f"no range measurement between {i} and {j}") from None

    def with_anchors(self, anchors):
        return SensorNetwork(self.dimension, self.ids, self.ranges, frozenset(anchors),
                             self.edges, self.coords)

    def subnetwork(self, keep):
        """The induced subnetwork on the node ids in ``keep``."""
        keep = set(keep)
        ids = tuple(i for i in self.ids if i in keep)
        edges = {k: d for k, d in self.edges.items() if k[0] in keep and k[1] in keep}
        return SensorNetwork(
            self.dimension,
            ids,
            {i: self.ranges[i] for i in ids},
            frozenset(a for a in self.anchors if a in keep),
            edges,
            {i: x for i, x in self.coords.items() if i in keep},
        )

    def coordinate_scale(self):
        """Largest absolute true coordinate, floored at 1."""
        if not self.coords:
            return 1.0
        return max(1.0, float(np.max(np.abs(np.array(list(self.coords.values()))))))


def build_edges(coords, ranges, anchors=(), ids=None):
    """Build the range graph: an edge wherever ``d(i, j) <= min(r_i, r_j)``.

    ``coords`` is an ``(m, n)`` array; ids default to ``1..m``.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2:
        raise ValueError("coords must be an (m, n) array")
    m, n = coords.shape
    ranges = np.broadcast_to(np.asarray(ranges, dtype=float), (m,))
    if np.any(ranges <= 0):
        raise ValueError("ranges must be positive")
    ids = tuple(range(1, m + 1)) if ids is None else tuple(ids)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    limit = np.minimum(ranges[:, None], ranges[None, :])
    ii, jj = np.nonzero(np.triu(dist <= limit, k=1))
    edges = {(ids[a], ids[b]): float(dist[a, b]) for a, b in zip(ii, jj)}
    return SensorNetwork(
        n,
        ids,
        {i: float(r) for i, r in zip(ids, ranges)},
        frozenset(anchors),
        edges,
        {i: coords[k].copy() for k, i in enumerate(ids)},
    )


def neighbors(net, l):
    """Ids sharing an edge with ``l``."""
    try:
        return net.adjacency[l]
    except KeyError:
        raise KeyError(f"unknown node id {l}") from None


def _local_masks(net, candidates):
    """Bitmask adjacency among ``candidates`` (sorted ids), by local index."""
    index = {c: k for k, c in enumerate(candidates)}
    masks = []
    for c in candidates:
        mask = 0
        for nb in net.adjacency[c]:
            k = index.get(nb)
            if k is not None:
                mask |= 1 << k
        masks.append(mask)
    return masks


def _cliques_in(masks, size, start_mask):
    """Lexicographic DFS over ``size``-cliques drawn from ``start_mask``.

    Yields tuples of local indices in increasing order.
    """
    stack = []

    def extend(cand):
        if len(stack) == size:
            yield tuple(stack)
            return
        need = size - len(stack)
        while cand:
            if cand.bit_count() < need:
                return
            low = cand & -cand
            k = low.bit_length() - 1
            cand ^= low
            stack.append(k)
            # only higher indices stay candidates, so output is lexicographic
            yield from extend(cand & masks[k])
            stack.pop()

    yield from extend(start_mask)


def iter_cliques(net, l, alive=None):
    """Yield every ``(n+1)``-clique of neighbors of ``l`` as a sorted id tuple."""
    nbrs = neighbors(net, l)
    if alive is not None:
        nbrs = nbrs & alive
    size = net.dimension + 1
    cands = sorted(nbrs)
    if len(cands) < size:
        return
    masks = _local_masks(net, cands)
    for local in _cliques_in(masks, size, (1 << len(cands)) - 1):
        yield tuple(cands[k] for k in local)


def clique_array(net, l, alive=None):
    """Every ``(n+1)``-clique of neighbors of ``l`` as rows of an int array.

    Level-wise vectorized extension: each ``s``-clique grows by every
    candidate above its last member that is adjacent to all members. Rows
    come out in lexicographic order, the same order as :func:`iter_cliques`.
    """
    nbrs = neighbors(net, l)
    if alive is not None:
        nbrs = nbrs & alive
    size = net.dimension + 1
    cands = np.array(sorted(nbrs), dtype=int)
    k = len(cands)
    if k < size:
        return np.zeros((0, size), dtype=int)
    index = {int(c): a for a, c in enumerate(cands)}
    adj = np.zeros((k, k), dtype=bool)
    for a, c in enumerate(cands):
        for nb in net.adjacency[int(c)]:
            b = index.get(nb)
            if b is not None:
                adj[a, b] = True
    above = np.triu(np.ones((k, k), dtype=bool), 1)
    cliques = np.arange(k)[:, None]
    common = adj & above
    for _ in range(size - 1):
        rows, nxt = np.nonzero(common)
        cliques = np.column_stack([cliques[rows], nxt])
        common = common[rows] & adj[nxt] & above[nxt]
    return cands[cliques]


def enumerate_simplex_sets(net, l):
    """All ``(n+1)``-cliques within the neighborhood of ``l``, lexicographic."""
    return [SimplexIndexSet(l, tuple(row)) for row in clique_array(net, l).tolist()]


def simplex_tables(net, l, members):
    """Squared-distance tables for a batch of member tuples.

    Returns ``(S, o)``: ``S[k]`` is the member-member table of subset ``k`` and
    ``o[k, a]`` the squared distance from member ``a`` to the owner ``l``.
    """
    members = np.asarray(members, dtype=int)
    K, size = members.shape if members.size else (0, net.dimension + 1)
    S = np.zeros((K, size, size))
    o = np.zeros((K, size))
    if K == 0:
        return S, o
    uniq = np.unique(members)
    local = np.zeros((len(uniq), len(uniq)))
    for a, u in enumerate(uniq):
        for b in range(a + 1, len(uniq)):
            v = int(uniq[b])
            key = (int(u), v)
            d = net.edges.get(key)
            local[a, b] = local[b, a] = np.nan if d is None else d * d
    owner = np.array([net.distance(l, int(u)) ** 2 for u in uniq])
    idx = np.searchsorted(uniq, members)
    S = local[idx[:, :, None], idx[:, None, :]]
    o = owner[idx]
    return S, o


def feasible_mask(S, eps=DEGENERACY_EPS):
    """Boolean mask of tables whose Cayley-Menger determinant is not ~0."""
    if len(S) == 0:
        return np.zeros(0, dtype=bool)
    dets = batch_cm_det(S)
    return np.abs(dets) > eps * degeneracy_scale(S)


def _chunks(it, size):
    buf = []
    for x in it:
        buf.append(x)
        if len(buf) == size:
            yield buf
            buf = []
    if buf:
        yield buf


def _neighborhood_table(net, nbrs):
    """Squared distances among ``nbrs`` (NaN where there is no edge)."""
    k = len(nbrs)
    local = np.full((k, k), np.nan)
    np.fill_diagonal(local, 0.0)
    for a in range(k):
        for b in range(a + 1, k):
            d = net.edges.get((nbrs[a], nbrs[b]))
            if d is not None:
                local[a, b] = local[b, a] = d * d
    return local


def has_usable_subset(net, l, alive=None, eps=DEGENERACY_EPS):
    """True if some neighbor clique of ``l`` spans a non-degenerate simplex."""
    for chunk in _chunks(iter_cliques(net, l, alive), 64):
        S, _ = simplex_tables(net, l, chunk)
        if feasible_mask(S, eps).any():
            return True
    return False


def enumerate_simplex_sets_capped(net, l, cap, eps=DEGENERACY_EPS):
    """Capped neighbor-subset search.

    One breadth-first round over the neighbors of ``l`` opens one branch per
    neighbor ``j``; each branch then runs a depth-first search for cliques
    containing ``j`` and stops after ``cap`` non-degenerate ones (or when the
    branch is exhausted). Degenerate cliques are skipped and do not count.
    The union of all branches is returned in lexicographic order.
    """
    if cap < 1:
        raise ValueError("cap must be a positive integer")
    nbrs = sorted(neighbors(net, l))
    size = net.dimension + 1
    if len(nbrs) < size:
        return []
    masks = _local_masks(net, nbrs)
    local = _neighborhood_table(net, nbrs)
    found = set()
    for k, _ in enumerate(nbrs):
        # other members must be neighbors of both l and j
        start = masks[k] & ~(1 << k)
        rest = (tup + (k,) for tup in _cliques_in(masks, size - 1, start))
        taken = 0
        for chunk in _chunks(rest, max(8, min(cap, 256))):
            idx = np.sort(np.array(chunk, dtype=int), axis=1)
            S = local[idx[:, :, None], idx[:, None, :]]
            for row, ok in zip(idx.tolist(), feasible_mask(S, eps)):
                if ok:
                    found.add(tuple(nbrs[i] for i in row))
                    taken += 1
                    if taken >= cap:
                        break
            if taken >= cap:
                break
    return [SimplexIndexSet(l, t) for t in sorted(found)]


def full_subset_count(net, l):
    """Upper bound ``C(|N_l|, n+1)`` on the number of neighbor subsets."""
    return comb(len(neighbors(net, l)), net.dimension + 1)


def prune_unlocalizable(net, eps=DEGENERACY_EPS):
    """Remove non-anchor nodes that cannot be localized, to a fixed point.

    A node goes when it has fewer than ``n + 1`` surviving neighbors or no
    surviving neighbor clique with non-zero volume. Removal can only make
    other nodes worse, so the result does not depend on visiting order.
    Returns ``(pruned_network, removed_ids)`` with ``removed_ids`` sorted.
    """
    alive = set(net.ids)
    size = net.dimension + 1
    queue = deque(i for i in net.ids if i not in net.anchors)
    queued = set(queue)
    removed = []
    while queue:
        l = queue.popleft()
        queued.discard(l)
        if l not in alive:
            continue
        live_nbrs = net.adjacency[l] & alive
        if len(live_nbrs) >= size and has_usable_subset(net, l, frozenset(alive), eps):
            continue
        alive.discard(l)
        removed.append(l)
        for nb in sorted(live_nbrs):
            if nb not in net.anchors and nb not in queued:
                queue.append(nb)
                queued.add(nb)
    return net.subnetwork(alive), sorted(removed)


def brute_force_cliques(net, l):
    """Reference enumeration over all ``(n+1)``-combinations (testing aid)."""
    nbrs = sorted(neighbors(net, l))
    out = []
    for combo in combinations(nbrs, net.dimension + 1):
        if all((a, b) in net.edges for a, b in combinations(combo, 2)):
            out.append(combo)
    return out
