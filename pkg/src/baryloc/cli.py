"""Command-line driver: ``baryloc generate | localize | benchmark``.

Exit codes: 0 success, 1 input error, 2 numerical failure (singular or
diverged system), 3 nothing localizable (every unknown pruned).
"""

import argparse
import csv
import io as _io
import json
import math
import sys

import numpy as np

from .experiment import ExperimentConfig, aggregate, localization_error, run_batch
from .generators import (
    PAPER_SCALE_STD,
    AnchorSelectionError,
    gen_gaussian,
    gen_lattice,
    gen_perturbed_lattice,
    select_anchors,
)
from .io import NetworkFormatError, atomic_write_text, read_network, write_network
from .network import prune_unlocalizable
from .pipeline import localize

__all__ = ["main", "EXIT_OK", "EXIT_INPUT", "EXIT_NUMERIC", "EXIT_EMPTY"]

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_EMPTY = 0, 1, 2, 3

CELL_FIELDS = [
    "size", "cap", "trials", "proportion_localized", "rcond_mean", "rcond_std",
    "time_enumeration_mean", "time_assembly_mean", "time_solve_mean", "time_total_mean",
    "subsets_mean", "retained_mean",
]
TRIAL_FIELDS = [
    "trial_id", "size", "cap", "network_index", "anchor_set", "nodes", "retained", "unknowns",
    "status", "localized", "max_err", "rms_err", "rcond", "subsets_total", "subsets_mean",
    "time_prune", "time_enumeration", "time_assembly", "time_solve", "error",
]


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _cap(text):
    if text.strip().lower() in ("unlimited", "all", "none"):
        return None
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cap must be a positive integer or 'unlimited', got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("cap must be positive")
    return v


def _cap_list(text):
    return [_cap(t) for t in text.split(",") if t.strip()]


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return vals


def _policy(text):
    p = text.replace("-", "_")
    if p not in ("uniform_random", "hull_mixed"):
        raise argparse.ArgumentTypeError(f"unknown anchor policy {text!r}")
    return p


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.9g}"
    return str(v)


def _csv(rows, fields):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def build_parser():
    ap = _Parser(prog="baryloc", description="Range-only localization with barycentric coordinates.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic network file")
    g.add_argument("--kind", required=True, choices=["lattice", "perturbed-lattice", "gaussian"])
    g.add_argument("--dim", type=int, default=3)
    g.add_argument("--side", type=int, help="lattice side (lattice kinds)")
    g.add_argument("--count", type=int, help="node count (gaussian)")
    g.add_argument("--spacing", type=float, default=1.0)
    g.add_argument("--noise-std", type=float, default=1.0, help="perturbation std dev")
    g.add_argument("--scale-std", type=float, default=PAPER_SCALE_STD,
                   help="gaussian coordinate std dev per axis (default sqrt(5))")
    g.add_argument("--range", type=float, required=True, dest="range_")
    g.add_argument("--anchors", type=int, required=True)
    g.add_argument("--anchor-policy", type=_policy, default="uniform_random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    lo = sub.add_parser("localize", help="localize the unknowns of a network file")
    lo.add_argument("--in", dest="inp", required=True)
    lo.add_argument("--cap", type=_cap, default=None, help="subsets per neighbor branch, or 'unlimited'")
    lo.add_argument("--solver", choices=["direct", "iterative"], default="direct")
    lo.add_argument("--tol", type=float, default=1e-10, help="iterative stopping tolerance")
    lo.add_argument("--max-iters", type=int, default=10_000)
    lo.add_argument("--out", default="-")
    lo.add_argument("--diagnostics", action="store_true")

    b = sub.add_parser("benchmark", help="random-network grid, one CSV row per (size, cap)")
    b.add_argument("--dim", type=int, default=3)
    b.add_argument("--sizes", type=_int_list, default=[50])
    b.add_argument("--trials", type=int, default=1, help="networks per size")
    b.add_argument("--anchor-sets", type=int, default=1)
    b.add_argument("--anchors", type=int, help="anchors per set (default dim + 1)")
    b.add_argument("--anchor-policy", type=_policy, default="uniform_random")
    b.add_argument("--caps", type=_cap_list, default=[1])
    b.add_argument("--range", type=float, default=5.0, dest="range_")
    b.add_argument("--scale-std", type=float, default=PAPER_SCALE_STD)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="-")
    b.add_argument("--trials-out", help="also write one CSV row per trial here")
    return ap


def cmd_generate(a):
    if a.dim < 1:
        raise InputError("--dim must be positive")
    if a.range_ <= 0:
        raise InputError("--range must be positive")
    if a.anchors < a.dim + 1:
        raise InputError(f"--anchors must be at least dim + 1 = {a.dim + 1}")
    rng = np.random.default_rng(np.random.SeedSequence(a.seed))
    if a.kind == "gaussian":
        if a.count is None or a.side is not None:
            raise InputError("--kind gaussian takes --count, not --side")
        if a.scale_std < 0:
            raise InputError("--scale-std must be non-negative")
        net = gen_gaussian(a.count, a.scale_std, a.range_, rng, a.dim)
    else:
        if a.side is None or a.count is not None:
            raise InputError(f"--kind {a.kind} takes --side, not --count")
        if a.kind == "lattice":
            net = gen_lattice(a.side, a.spacing, a.range_, a.dim)
        else:
            if a.noise_std < 0:
                raise InputError("--noise-std must be non-negative")
            net = gen_perturbed_lattice(a.side, a.noise_std, a.range_, rng, a.dim, a.spacing)
    if a.anchors >= net.m:
        raise InputError(f"--anchors {a.anchors} must be below the node count {net.m}")
    # prefer anchors among nodes that survive pruning, so none is isolated
    kept, _ = prune_unlocalizable(net)
    pool = kept if kept.m > a.anchors else net
    chosen = select_anchors(pool, a.anchors, a.anchor_policy, rng)
    write_network(net.with_anchors(chosen.anchors), a.out)
    return EXIT_OK


def cmd_localize(a):
    net = read_network(a.inp)
    n = net.dimension
    if net.p < n + 1:
        raise InputError(f"{a.inp}: need at least {n + 1} anchors, found {net.p}")
    if a.max_iters < 1 or a.tol <= 0:
        raise InputError("--max-iters and --tol must be positive")
    out = localize(net, cap=a.cap, solver=a.solver, tol=a.tol, max_iters=a.max_iters,
                   diagnostics=a.diagnostics)
    res = out.result
    doc = {
        "status": res.status,
        "rcond": res.rcond,
        "residual": res.residual,
        "iterations": res.iterations,
        "pruned": [int(i) for i in out.pruned],
        "nodes": [
            {"id": int(i), "anchor": True, "coords": [float(v) for v in out.network.coords[i]]}
            for i in sorted(out.network.anchors)
        ] + [
            {"id": int(i), "anchor": False, "coords": [float(v) for v in x]}
            for i, x in sorted(res.solved_coords.items())
        ],
        "subset_counts": {str(i): int(c) for i, c in sorted(out.subset_counts.items())},
    }
    if res.ok and res.solved_coords and all(i in net.coords for i in res.solved_coords):
        truth = {i: net.coords[i] for i in res.solved_coords}
        max_err, rms_err = localization_error(res.solved_coords, truth)
        doc["metrics"] = {"max_err": max_err, "rms_err": rms_err}
    if out.diagnostics is not None:
        doc["diagnostics"] = {str(i): bool(v) for i, v in sorted(out.diagnostics.items())}
    _emit(json.dumps(doc, indent=1, allow_nan=True) + "\n", a.out)
    if net.q > 0 and out.network.q == 0:
        return EXIT_EMPTY
    return EXIT_OK if res.ok else EXIT_NUMERIC


def cmd_benchmark(a):
    anchors = a.dim + 1 if a.anchors is None else a.anchors
    if a.trials < 1 or a.anchor_sets < 1:
        raise InputError("--trials and --anchor-sets must be positive")
    if not a.caps:
        raise InputError("--caps is empty")
    try:
        base = ExperimentConfig(dimension=a.dim, kind="gaussian", size=a.sizes[0],
                                scale_std=a.scale_std, range_=a.range_, anchors=anchors,
                                anchor_policy=a.anchor_policy, seed=a.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    reports = run_batch(base, a.sizes, a.caps, a.trials, a.anchor_sets)
    _emit(_csv(aggregate(reports), CELL_FIELDS), a.out)
    if a.trials_out:
        atomic_write_text(a.trials_out, _csv([r.as_row() for r in reports], TRIAL_FIELDS))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "localize": cmd_localize, "benchmark": cmd_benchmark}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, NetworkFormatError, AnchorSelectionError, OSError) as exc:
        print(f"baryloc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"baryloc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
