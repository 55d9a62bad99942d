"""Barycentric coordinates from range measurements.

A per-subset row expresses the owner node as an affine combination of the
``n + 1`` members of one neighbor clique. The weight at member ``j`` is the
ratio ``D(X; Y_j) / D(X)`` where ``Y_j`` is ``X`` with its ``j``-th point
replaced by the owner, position preserved. Generalized rows are the uniform
average of the per-subset rows of a node.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import (
    DEGENERACY_EPS,
    batch_cm_det,
    bordered_matrix,
    cayley_menger_bidet_from_table,
    degeneracy_scale,
)
from .network import simplex_tables

__all__ = [
    "CoordinateRow",
    "DegenerateSubsetError",
    "barycentric_from_distances",
    "barycentric_from_coordinates",
    "barycentric_cramer",
    "generalized_coordinates",
    "batch_barycentric",
    "node_coordinates",
    "reconstruct",
    "all_generalized_rows",
]


class DegenerateSubsetError(ValueError):
    """The subset spans a (numerically) zero-volume simplex."""


@dataclass(frozen=True)
class CoordinateRow:
    owner: int
    weights: dict  # node id -> weight; absent ids are zero

    def total(self):
        return float(sum(self.weights.values()))

    def dense(self, order):
        return np.array([self.weights.get(i, 0.0) for i in order])

    def support(self):
        return frozenset(self.weights)


def _sq(distances, i, j):
    if i == j:
        return 0.0
    d = distances(i, j)
    if d is None or not np.isfinite(d):
        raise KeyError(f"missing distance between {i} and {j}")
    return float(d) ** 2


def barycentric_from_distances(subset, distances, eps=DEGENERACY_EPS):
    """Per-subset barycentric row of ``subset.owner`` from ranges alone.

    ``distances(i, j)`` returns the (unsquared) measured distance between two
    node ids; a ``SensorNetwork.distance`` bound method fits. Raises
    :class:`DegenerateSubsetError` when the members span zero volume and
    ``KeyError`` when a needed measurement is missing.
    """
    owner, members = subset
    members = tuple(members)
    k = len(members)
    table = np.array([[_sq(distances, a, b) for b in members] for a in members])
    det_x = cayley_menger_bidet_from_table(table)
    if abs(det_x) <= eps * degeneracy_scale(table):
        raise DegenerateSubsetError(f"subset {members} of node {owner} is degenerate")
    to_owner = np.array([_sq(distances, a, owner) for a in members])
    weights = {}
    for j in range(k):
        # Y_j keeps every position and puts the owner in slot j
        cross = table.copy()
        cross[:, j] = to_owner
        weights[members[j]] = cayley_menger_bidet_from_table(cross) / det_x
    return CoordinateRow(owner, weights)


def barycentric_from_coordinates(frame, x):
    """Solve ``[X; 1^T] lam = [x; 1]`` directly for a frame of row points."""
    frame = np.asarray(frame, dtype=float)
    x = np.asarray(x, dtype=float)
    count, n = frame.shape
    if count != n + 1 or x.shape != (n,):
        raise ValueError(f"need {n + 1} frame points and a length-{n} point")
    system = np.vstack([frame.T, np.ones(count)])
    if abs(np.linalg.det(system)) <= 1e-12 * max(1.0, np.max(np.abs(frame))) ** n:
        raise DegenerateSubsetError("frame points are affinely dependent")
    return np.linalg.solve(system, np.append(x, 1.0))


def barycentric_cramer(frame, x):
    """Cramer's rule form: ``lam_i = det([X_i; 1]) / det([X; 1])``."""
    frame = np.asarray(frame, dtype=float)
    count, n = frame.shape
    system = np.vstack([frame.T, np.ones(count)])
    base = np.linalg.det(system)
    out = np.empty(count)
    for i in range(count):
        swapped = system.copy()
        swapped[:n, i] = x
        out[i] = np.linalg.det(swapped) / base
    return out


def generalized_coordinates(rows):
    """Uniform average of per-subset rows of one node; absent entries are 0."""
    rows = list(rows)
    if not rows:
        raise ValueError("need at least one coordinate row")
    owner = rows[0].owner
    if any(r.owner != owner for r in rows):
        raise ValueError("rows belong to different owners")
    acc = {}
    for r in rows:
        for i, w in r.weights.items():
            acc[i] = acc.get(i, 0.0) + w
    count = len(rows)
    return CoordinateRow(owner, {i: w / count for i, w in sorted(acc.items())})


def batch_barycentric(S, o, eps=DEGENERACY_EPS):
    """Per-subset weights for a stack of subsets.

    ``S`` is ``(K, n+1, n+1)`` member tables and ``o`` is ``(K, n+1)`` squared
    member-owner distances. Returns ``(weights, ok)`` where ``ok`` flags the
    non-degenerate subsets and ``weights`` holds rows only for those.

    Replacing column ``j`` of the bordered member matrix by the owner column
    gives the bordered ``D(X; Y_j)`` matrix, so by Cramer's rule the ratios
    ``D(X; Y_j) / D(X)`` are the trailing entries of one bordered solve.
    """
    S = np.asarray(S, dtype=float)
    o = np.asarray(o, dtype=float)
    if len(S) == 0:
        return np.zeros((0, S.shape[-1])), np.zeros(0, dtype=bool)
    ok = np.abs(batch_cm_det(S)) > eps * degeneracy_scale(S)
    M = bordered_matrix(S[ok])
    rhs = np.ones((len(M), S.shape[-1] + 1))
    rhs[:, 1:] = o[ok]
    z = np.linalg.solve(M, rhs[..., None])[..., 0]
    return z[:, 1:], ok


def node_coordinates(net, l, subsets, eps=DEGENERACY_EPS, chunk=50_000):
    """Generalized barycentric row for node ``l`` over the given subsets.

    Degenerate subsets are dropped before averaging. Returns ``(row, used)``
    where ``used`` counts the subsets that entered the average; ``row`` is
    None when no subset is usable.
    """
    if not isinstance(subsets, np.ndarray):
        subsets = [s.members if hasattr(s, "members") else tuple(s) for s in subsets]
    members = np.asarray(subsets, dtype=int).reshape(-1, net.dimension + 1)
    total = {}
    used = 0
    for start in range(0, len(members), chunk):
        block = members[start:start + chunk]
        S, o = simplex_tables(net, l, block)
        w, ok = batch_barycentric(S, o, eps)
        if not ok.any():
            continue
        used += int(ok.sum())
        ids = block[ok].ravel()
        uniq, inv = np.unique(ids, return_inverse=True)
        sums = np.bincount(inv, weights=w.ravel(), minlength=len(uniq))
        for i, v in zip(uniq.tolist(), sums.tolist()):
            total[i] = total.get(i, 0.0) + v
    if used == 0:
        return None, 0
    return CoordinateRow(l, {i: v / used for i, v in sorted(total.items())}), used


def reconstruct(row, coords):
    """``sum_j lam_j x_j`` for a row and a mapping id -> coordinates."""
    return sum(w * np.asarray(coords[i], dtype=float) for i, w in row.weights.items())


def all_generalized_rows(net, eps=DEGENERACY_EPS):
    """Generalized rows of every node over all of its neighbor subsets.

    Same result as :func:`node_coordinates` with the full enumeration, but
    computed in one compiled pass over the ``(n+2)``-cliques of the graph.
    Returns ``(rows, counts)``; nodes without a usable subset get no row.
    """
    from ._kernels import accumulate_all_rows, adjacency_bitsets

    ids = net.ids
    index = {i: k for k, i in enumerate(ids)}
    m = len(ids)
    sq = np.full((m, m), np.nan)
    np.fill_diagonal(sq, 0.0)
    pairs = []
    for (i, j), d in net.edges.items():
        a, b = index[i], index[j]
        sq[a, b] = sq[b, a] = d * d
        pairs.append((a, b))
    bits = adjacency_bitsets(m, pairs)
    acc, counts = accumulate_all_rows(bits, sq, net.dimension, eps)
    rows, used = {}, {}
    for a, l in enumerate(ids):
        c = int(counts[a])
        used[l] = c
        if c == 0:
            continue
        nz = np.nonzero(acc[a])[0]
        rows[l] = CoordinateRow(l, {ids[b]: float(acc[a, b]) / c for b in nz})
    return rows, used
