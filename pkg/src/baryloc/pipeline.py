"""End-to-end localization from ranges and anchor positions."""

import time
from dataclasses import dataclass, field

import numpy as np

from .barycentric import all_generalized_rows, node_coordinates
from .network import enumerate_simplex_sets_capped, clique_array, prune_unlocalizable
from .solver import (
    DEFAULT_MAX_ITERS,
    LocalizationResult,
    assemble,
    disjoint_paths_diagnostic,
    solve_direct,
    solve_iterative,
)

__all__ = ["LocalizationOutcome", "coordinate_rows", "full_rows", "localize", "subsets_for"]


@dataclass
class LocalizationOutcome:
    result: LocalizationResult
    network: object  # pruned SensorNetwork
    pruned: list
    system: object = None
    subset_counts: dict = field(default_factory=dict)
    diagnostics: dict = None
    timings: dict = field(default_factory=dict)

    @property
    def status(self):
        return self.result.status


def subsets_for(net, l, cap=None):
    """Member tuples of the neighbor subsets of ``l``, full or capped."""
    if cap is None:
        return clique_array(net, l)
    return np.array([s.members for s in enumerate_simplex_sets_capped(net, l, cap)], dtype=int).reshape(-1, net.dimension + 1)


def full_rows(net):
    """Generalized rows of every node of ``net`` over all neighbor subsets."""
    return all_generalized_rows(net)


def coordinate_rows(net, cap=None, nodes=None):
    """``(rows, counts, timings)`` for ``nodes`` (default: every node).

    Rows depend on the range graph only, not on which nodes are anchors, so
    one result can be passed to :func:`localize` for several anchor sets.
    Nodes without a usable subset get no row.
    """
    nodes = net.ids if nodes is None else nodes
    if cap is None:
        # compiled single pass over all (n+2)-cliques; enumeration and
        # coordinates are fused, so the whole cost is booked as enumeration
        t0 = time.perf_counter()
        rows, counts = full_rows(net)
        return rows, counts, {"enumeration": time.perf_counter() - t0, "coordinates": 0.0}
    rows, counts = {}, {}
    enum_time = coord_time = 0.0
    for l in nodes:
        t0 = time.perf_counter()
        subs = subsets_for(net, l, cap)
        t1 = time.perf_counter()
        row, used = node_coordinates(net, l, subs)
        coord_time += time.perf_counter() - t1
        enum_time += t1 - t0
        counts[l] = used
        if row is not None:
            rows[l] = row
    return rows, counts, {"enumeration": enum_time, "coordinates": coord_time}


def localize(net, cap=None, solver="direct", tol=1e-10, max_iters=DEFAULT_MAX_ITERS,
             diagnostics=False, rows=None):
    """Localize every unknown of ``net`` from its edge distances.

    Only anchor coordinates and measured distances are read; any true
    coordinates stored for unknowns are ignored. ``cap=None`` uses every
    neighbor subset. ``rows`` may carry a :func:`coordinate_rows` result
    for the same graph and cap to skip enumeration.
    """
    timings = {}
    t0 = time.perf_counter()
    work, removed = prune_unlocalizable(net)
    timings["prune"] = time.perf_counter() - t0

    if rows is None:
        rows = coordinate_rows(work, cap, work.unknowns)
    all_rows, all_counts, stage = rows
    missing = [l for l in work.unknowns if l not in all_rows]
    if missing:
        raise RuntimeError(f"nodes {missing[:5]} survived pruning without a usable subset")
    rows = {l: all_rows[l] for l in work.unknowns}
    counts = {l: all_counts[l] for l in work.unknowns}
    timings["enumeration"] = stage["enumeration"]
    coord_time = stage["coordinates"]
    t0 = time.perf_counter()
    system = assemble(work, rows)
    timings["assembly"] = coord_time + time.perf_counter() - t0

    t0 = time.perf_counter()
    if solver == "direct":
        result = solve_direct(system)
    elif solver == "iterative":
        result = solve_iterative(system, tol=tol, max_iters=max_iters)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    timings["solve"] = time.perf_counter() - t0

    diag = disjoint_paths_diagnostic(system) if diagnostics else None
    return LocalizationOutcome(result, work, removed, system, counts, diag, timings)
