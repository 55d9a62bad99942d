"""Batch experiments over random networks and evaluation metrics.

Seeding rule: the network for ``(size_index, network_index)`` draws from
``SeedSequence(seed, spawn_key=(size_index, network_index))`` and anchor set
``a`` of that network from ``spawn_key=(size_index, network_index, a)``.
Every cap is run on the same network and anchor set, so cells that differ
only in cap are paired. Results do not depend on worker scheduling.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .generators import PAPER_SCALE_STD, gen_gaussian, gen_lattice, gen_perturbed_lattice, select_anchors
from .network import prune_unlocalizable
from .pipeline import coordinate_rows, localize

__all__ = [
    "ExperimentConfig",
    "TrialReport",
    "localization_error",
    "make_network",
    "network_for",
    "anchors_for",
    "run_trial",
    "run_batch",
    "aggregate",
    "worker_count",
    "SUCCESS_TOL",
]

SUCCESS_TOL = 1e-6
KINDS = ("lattice", "perturbed_lattice", "gaussian")


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int = 3
    kind: str = "gaussian"
    size: int = 50  # node count (gaussian) or lattice side
    scale_std: float = PAPER_SCALE_STD  # coordinate std dev (gaussian) or lattice noise
    range_: float = 5.0
    anchors: int = 4
    anchor_policy: str = "uniform_random"
    cap: int = None  # None means every subset
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.dimension < 1 or self.size < 1:
            raise ValueError("dimension and size must be positive")
        if self.anchors < self.dimension + 1:
            raise ValueError(f"need at least {self.dimension + 1} anchors, got {self.anchors}")
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be positive or None")
        if self.range_ <= 0 or self.scale_std < 0:
            raise ValueError("range must be positive and scale non-negative")


@dataclass
class TrialReport:
    trial_id: str
    size: int
    cap: object
    network_index: int
    anchor_set: int
    nodes: int
    retained: int
    unknowns: int
    status: str
    localized: bool
    max_err: float
    rms_err: float
    rcond: float
    subsets_total: int
    subsets_mean: float
    time_prune: float = 0.0
    time_enumeration: float = 0.0
    time_assembly: float = 0.0
    time_solve: float = 0.0
    error: str = ""
    subset_counts: dict = field(default_factory=dict, repr=False)

    def as_row(self):
        row = asdict(self)
        row.pop("subset_counts")
        return row


def localization_error(solved, truth):
    """Max and RMS per-node Euclidean error between two id -> coords maps."""
    if set(solved) != set(truth):
        raise ValueError(
            f"id mismatch: {sorted(set(solved) ^ set(truth))[:10]}"
        )
    if not solved:
        return 0.0, 0.0
    errs = np.array([
        np.linalg.norm(np.asarray(solved[i], float) - np.asarray(truth[i], float))
        for i in sorted(solved)
    ])
    return float(errs.max()), float(np.sqrt(np.mean(errs**2)))


def make_network(cfg, rng):
    if cfg.kind == "gaussian":
        return gen_gaussian(cfg.size, cfg.scale_std, cfg.range_, rng, cfg.dimension)
    if cfg.kind == "lattice":
        return gen_lattice(cfg.size, 1.0, cfg.range_, cfg.dimension)
    return gen_perturbed_lattice(cfg.size, cfg.scale_std, cfg.range_, rng, cfg.dimension)


def _seq(seed, *key):
    return np.random.SeedSequence(seed, spawn_key=tuple(key))


def network_for(cfg, size_index=0, network_index=0):
    """The pruned network of one grid cell (anchors not yet chosen)."""
    net = make_network(cfg, np.random.default_rng(_seq(cfg.seed, size_index, network_index)))
    return prune_unlocalizable(net)[0]


def anchors_for(cfg, net, size_index=0, network_index=0, anchor_set=0):
    """``net`` with anchor set ``anchor_set`` of its grid cell marked."""
    if cfg.anchors >= net.m:
        return net.with_anchors(net.ids)
    rng = np.random.default_rng(_seq(cfg.seed, size_index, network_index, anchor_set))
    return select_anchors(net, cfg.anchors, cfg.anchor_policy, rng)


def run_trial(cfg, size_index=0, network_index=0, anchor_set=0, net=None, tol=SUCCESS_TOL,
              rows=None):
    """Generate, anchor, localize and score one network.

    Failures are captured in the report instead of raised. ``net`` may be
    an already pruned network and ``rows`` its
    :func:`~baryloc.pipeline.coordinate_rows` result for ``cfg.cap``.
    """
    trial_id = f"n{cfg.size}-net{network_index}-a{anchor_set}-cap{cap_label(cfg.cap)}"
    base = dict(trial_id=trial_id, size=cfg.size, cap=cap_label(cfg.cap),
                network_index=network_index, anchor_set=anchor_set)
    try:
        if net is None:
            net = network_for(cfg, size_index, network_index)
        net = anchors_for(cfg, net, size_index, network_index, anchor_set)
        out = localize(net, cap=cfg.cap, rows=rows)
    except Exception as exc:  # recorded, never fatal for the batch
        return TrialReport(**base, nodes=0 if net is None else net.m, retained=0, unknowns=0,
                           status="error", localized=False, max_err=math.nan, rms_err=math.nan,
                           rcond=math.nan, subsets_total=0, subsets_mean=math.nan,
                           error=f"{type(exc).__name__}: {exc}")
    res = out.result
    if res.ok:
        truth = {i: net.coords[i] for i in res.solved_coords}
        max_err, rms_err = localization_error(res.solved_coords, truth)
        localized = max_err <= tol * net.coordinate_scale()
    else:
        max_err = rms_err = math.nan
        localized = False
    counts = out.subset_counts
    return TrialReport(
        **base,
        nodes=net.m,
        retained=out.network.m,
        unknowns=out.network.q,
        status=res.status,
        localized=bool(localized),
        max_err=max_err,
        rms_err=rms_err,
        rcond=res.rcond,
        subsets_total=int(sum(counts.values())),
        subsets_mean=float(np.mean(list(counts.values()))) if counts else 0.0,
        time_prune=out.timings["prune"],
        time_enumeration=out.timings["enumeration"],
        time_assembly=out.timings["assembly"],
        time_solve=out.timings["solve"],
        subset_counts=counts,
    )


def cap_label(cap):
    return "unlimited" if cap is None else str(cap)


def worker_count():
    """Worker processes allowed by ``BARYLOC_THREADS`` (default 1)."""
    raw = os.environ.get("BARYLOC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"BARYLOC_THREADS must be an integer, got {raw!r}") from None


def _network_job(args):
    base, size_index, size, network_index, anchor_sets, caps = args
    cfg = ExperimentConfig(**{**base, "size": size})
    net = network_for(cfg, size_index, network_index)
    # rows do not depend on the anchor set: compute once per cap
    reports = []
    for cap in caps:
        c = ExperimentConfig(**{**base, "size": size, "cap": cap})
        rows = coordinate_rows(net, cap) if net.m > 0 else None
        for a in range(anchor_sets):
            reports.append(run_trial(c, size_index, network_index, a, net=net, rows=rows))
    return reports


def run_batch(base, sizes, caps, networks, anchor_sets=1, workers=None):
    """Run every ``(size, network, anchor set, cap)`` trial.

    ``base`` is an :class:`ExperimentConfig` whose size and cap are replaced
    per cell. Returns the flat list of reports in deterministic order.
    """
    fields = {k: v for k, v in asdict(base).items() if k not in ("size", "cap")}
    jobs = [
        (fields, si, size, ni, anchor_sets, tuple(caps))
        for si, size in enumerate(sizes)
        for ni in range(networks)
    ]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        chunks = [_network_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_network_job, jobs))
    return [r for chunk in chunks for r in chunk]


def aggregate(reports):
    """One summary dict per ``(size, cap)`` cell, in first-seen order."""
    cells = {}
    for r in reports:
        cells.setdefault((r.size, r.cap), []).append(r)
    rows = []
    for (size, cap), rs in cells.items():
        rc = np.array([r.rcond for r in rs], dtype=float)
        rc = rc[np.isfinite(rc)]
        rows.append({
            "size": size,
            "cap": cap,
            "trials": len(rs),
            "proportion_localized": float(np.mean([r.localized for r in rs])),
            "rcond_mean": float(rc.mean()) if len(rc) else math.nan,
            "rcond_std": float(rc.std()) if len(rc) else math.nan,
            "time_enumeration_mean": float(np.mean([r.time_enumeration for r in rs])),
            "time_assembly_mean": float(np.mean([r.time_assembly for r in rs])),
            "time_solve_mean": float(np.mean([r.time_solve for r in rs])),
            "time_total_mean": float(np.mean([
                r.time_prune + r.time_enumeration + r.time_assembly + r.time_solve for r in rs
            ])),
            "subsets_mean": float(np.mean([r.subsets_mean for r in rs if np.isfinite(r.subsets_mean)] or [0.0])),
            "retained_mean": float(np.mean([r.retained for r in rs])),
        })
    return rows
