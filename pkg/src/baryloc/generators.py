"""Synthetic networks and anchor selection.

Randomness comes from ``numpy.random.Generator`` (PCG64). Functions take
either an integer seed or a ``SeedSequence``/``Generator``; the batch runner
derives per-trial streams with ``SeedSequence(seed).spawn``.
"""

from itertools import product

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .network import build_edges

__all__ = [
    "gen_lattice",
    "gen_perturbed_lattice",
    "gen_gaussian",
    "select_anchors",
    "AnchorSelectionError",
    "lattice_points",
    "hull_split",
    "PAPER_SCALE_STD",
]

HULL_RETRIES = 1000
# N(0, 5 I) coordinates of the random-network experiment: variance 5 per axis
PAPER_SCALE_STD = 5.0 ** 0.5


class AnchorSelectionError(RuntimeError):
    pass


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def lattice_points(side, dim=3, spacing=1.0):
    """All points of a ``side^dim`` grid, last axis varying fastest."""
    if side < 2:
        raise ValueError("lattice side must be at least 2")
    return np.array(list(product(range(side), repeat=dim)), dtype=float) * spacing


def gen_lattice(side, spacing=1.0, range_=2.0, dim=3):
    """Regular cubic lattice with a uniform range."""
    return build_edges(lattice_points(side, dim, spacing), range_)


def gen_perturbed_lattice(side, noise_std, range_=3.0, seed=None, dim=3, spacing=1.0):
    """Lattice with i.i.d. Gaussian noise added to every coordinate."""
    pts = lattice_points(side, dim, spacing)
    if noise_std > 0:
        pts = pts + _rng(seed).normal(0.0, noise_std, size=pts.shape)
    return build_edges(pts, range_)


def gen_gaussian(count, scale_std, range_=5.0, seed=None, dim=3):
    """``count`` nodes with i.i.d. ``N(0, scale_std^2)`` coordinates."""
    if count < dim + 2:
        raise ValueError(f"need at least {dim + 2} nodes in R^{dim}")
    pts = _rng(seed).normal(0.0, 1.0, size=(count, dim)) * scale_std
    return build_edges(pts, range_)


def hull_split(anchor_pts, other_pts, margin=1e-9):
    """Masks of ``other_pts`` strictly inside / strictly outside the hull."""
    try:
        hull = ConvexHull(anchor_pts)
    except (QhullError, ValueError):
        return np.zeros(len(other_pts), bool), np.ones(len(other_pts), bool)
    scale = max(1.0, float(np.max(np.abs(anchor_pts))))
    # facet equations: normal . x + offset <= 0 inside
    vals = other_pts @ hull.equations[:, :-1].T + hull.equations[:, -1]
    inside = np.all(vals < -margin * scale, axis=1)
    outside = np.any(vals > margin * scale, axis=1)
    return inside, outside


def select_anchors(net, p, policy="uniform_random", seed=None, retries=HULL_RETRIES):
    """Return a copy of ``net`` with ``p`` nodes marked as anchors.

    ``hull_mixed`` redraws until the anchors' convex hull strictly contains at
    least one other node and strictly excludes at least one.
    """
    n = net.dimension
    if p < n + 1:
        raise ValueError(f"need at least {n + 1} anchors in R^{n}, got {p}")
    if p >= net.m:
        raise ValueError(f"anchor count {p} must be below node count {net.m}")
    missing = [i for i in net.ids if i not in net.coords]
    if missing:
        raise ValueError(f"nodes {missing[:5]} have no coordinates to anchor with")
    rng = _rng(seed)
    ids = np.array(net.ids)
    if policy == "uniform_random":
        chosen = rng.choice(ids, size=p, replace=False)
        return net.with_anchors(int(i) for i in chosen)
    if policy != "hull_mixed":
        raise ValueError(f"unknown anchor policy {policy!r}")
    pts = np.array([net.coords[i] for i in net.ids])
    for _ in range(retries):
        pick = rng.choice(net.m, size=p, replace=False)
        rest = np.setdiff1d(np.arange(net.m), pick)
        inside, outside = hull_split(pts[pick], pts[rest])
        if inside.any() and outside.any():
            return net.with_anchors(int(i) for i in ids[pick])
    raise AnchorSelectionError(f"no hull_mixed anchor set of size {p} in {retries} draws")
