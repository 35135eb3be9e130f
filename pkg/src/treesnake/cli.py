"""Batch command-line front end.

Three commands: ``sample`` prints one serialized sample, ``estimate`` runs a
named experiment suite and writes a CSV/JSONL report, ``plot`` renders a
report as a self-contained SVG.  Seeds are always explicit (no environment
fallback); a flat key=value config file can supply defaults and flags
override it.  Exit codes: 0 ok, 2 usage, 3 resource budget, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, estimators, svgplot
from .errors import BudgetExceededError, InvariantViolation, UsageError
from .kesten import (
    DEFAULT_VERTEX_BUDGET,
    sample_augmented,
    sample_gw_truncated,
    sample_kesten_ball,
)
from .offspring import law_by_name
from .planetree import sample_uniform_plane_tree
from .reporting import write_csv, write_jsonl
from .rng import derive_stream
from .snake import assign_and_embed

STATISTICS = (
    "volume",
    "boundary",
    "returns",
    "range",
    "tightness",
    "mtp",
    "reversibility",
    "intersection",
    "phase",
)


def parse_grid(text, kind=int):
    """Grid syntax: "16" | "16,32,64" | "a:b:step" (inclusive)."""
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad grid {text!r}; want a:b:step")
        a, b, step = (kind(p) for p in parts)
        if step <= 0:
            raise UsageError("grid step must be positive")
        out = []
        v = a
        while v <= b + (1e-9 if kind is float else 0):
            out.append(kind(v))
            v += step
        return out
    return [kind(p) for p in text.split(",") if p != ""]


def _read_config(path):
    out = {}
    with open(path) as f:
        for ln in f:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            k, _, v = ln.partition("=")
            out[k.strip()] = v.strip()
    return out


def _build_parser():
    p = argparse.ArgumentParser(prog="treesnake", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sample", help="print one serialized sample")
    ps.add_argument("kind", choices=["tree", "kesten", "augmented", "snake"])
    ps.add_argument("--edges", type=int, help="edge count for uniform trees")
    ps.add_argument("--radius", help="truncation radius")
    ps.add_argument("--law", default="geometric")
    ps.add_argument("--dim", type=int, default=1)
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--construction", default="auto")
    ps.add_argument("--budget", type=int, default=DEFAULT_VERTEX_BUDGET)

    pe = sub.add_parser("estimate", help="run an experiment suite, write a report")
    pe.add_argument("statistic", choices=STATISTICS)
    pe.add_argument("--config", help="flat key=value defaults file")
    pe.add_argument("--dim", default="4", help="dimension (grid allowed for phase)")
    pe.add_argument("--law", default="geometric")
    pe.add_argument("--radius", default="16", help="radius grid: n | a,b,c | a:b:step")
    pe.add_argument("--trials", type=int, default=10000)
    pe.add_argument("--seed", type=int, required=True)
    pe.add_argument("--workers", type=int, default=1)
    pe.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    pe.add_argument("--out", help="output path (default: treesnake_<stat>.<fmt>)")
    pe.add_argument("--budget", type=int, default=DEFAULT_VERTEX_BUDGET)
    pe.add_argument("--lambdas", default="1,2,5,10,20", help="tightness window grid")
    pe.add_argument("--cgrid", default="0,0.05,0.1,0.2,0.5,1", help="range thresholds")
    pe.add_argument("--eta", type=float, default=0.5, help="spine prefix fraction")
    pe.add_argument("--gens", default="0,4,16,64", help="generation grid for returns")
    pe.add_argument("--nmax", type=int, default=5, help="max edges for reversibility")
    pe.add_argument("--transport", default="all", help="transport function or 'all'")

    pp = sub.add_parser("plot", help="render a report as SVG")
    pp.add_argument("report")
    pp.add_argument("--kind", choices=sorted(svgplot.PLOT_KINDS), required=True)
    pp.add_argument("--out", required=True)
    return p


def _cmd_sample(args):
    rng = derive_stream(args.seed, [estimators.TAG_SAMPLE])
    law = law_by_name(args.law)
    if args.kind == "tree":
        if not args.edges:
            raise UsageError("sample tree needs --edges")
        t = sample_uniform_plane_tree(args.edges, rng)
        print(t.serialize())
        return
    r = int(args.radius) if args.radius is not None else None
    if args.kind == "kesten":
        if r is None:
            raise UsageError("sample kesten needs --radius")
        t = sample_kesten_ball(law, r, rng, construction=args.construction,
                               max_vertices=args.budget)
        print(json.dumps({
            "kind": "kesten",
            "r": r,
            "law": law.name,
            "dyck": t.tree.to_dyck(),
            "spine": [int(v) for v in t.spine],
        }))
        return
    if args.kind == "augmented":
        if r is None:
            raise UsageError("sample augmented needs --radius")
        t = sample_augmented(law, r, rng, max_vertices=args.budget)
        print(json.dumps({
            "kind": "augmented",
            "r": r,
            "law": law.name,
            "dyck": t.tree.to_dyck(),
            "root_is_conditioned": t.root_is_conditioned,
        }))
        return
    if args.kind == "snake":
        if args.edges:
            base = sample_uniform_plane_tree(args.edges, rng)
            dyck = base.to_dyck()
        elif r is not None:
            base = sample_kesten_ball(law, r, rng, max_vertices=args.budget)
            dyck = base.tree.to_dyck()
        else:
            raise UsageError("sample snake needs --edges or --radius")
        emb = assign_and_embed(base, args.dim, rng)
        print(json.dumps({
            "kind": "snake",
            "d": args.dim,
            "dyck": dyck,
            "positions": emb.positions.tolist(),
        }))
        return
    raise UsageError(f"unknown sample kind {args.kind!r}")


def _estimate_rows(args):
    law = law_by_name(args.law)
    seed, trials, workers, budget = args.seed, args.trials, args.workers, args.budget
    r_grid = parse_grid(args.radius, int)
    if args.statistic == "volume":
        return estimators.volume_scaling(r_grid, trials, seed, law=law,
                                         workers=workers, budget=budget)
    if args.statistic == "boundary":
        return estimators.boundary_profile(r_grid, trials, seed, law=law,
                                           workers=workers, budget=budget)
    if args.statistic == "returns":
        d = parse_grid(args.dim, int)
        if len(d) != 1:
            raise UsageError("returns wants a single --dim; use phase for a grid")
        rows, _ = estimators.recurrence_profile(d, r_grid, trials, seed, law=law,
                                                g_grid=parse_grid(args.gens, int),
                                                workers=workers, budget=budget)
        return rows
    if args.statistic == "phase":
        d_grid = parse_grid(args.dim, int)
        rows, _ = estimators.recurrence_profile(d_grid, r_grid, trials, seed, law=law,
                                                g_grid=parse_grid(args.gens, int),
                                                workers=workers, budget=budget)
        return rows
    if args.statistic == "tightness":
        return estimators.tightness_curve(parse_grid(args.lambdas, float), r_grid,
                                          trials, seed, law=law, workers=workers,
                                          budget=budget)
    if args.statistic == "range":
        d = parse_grid(args.dim, int)
        if len(d) != 1:
            raise UsageError("range wants a single --dim")
        return estimators.range_linearity(d[0], r_grid, parse_grid(args.cgrid, float),
                                          trials, seed, eta=args.eta, law=law,
                                          workers=workers, budget=budget)
    if args.statistic == "mtp":
        if args.transport == "all":
            return estimators.mtp_check_all(trials, seed, law=law, workers=workers,
                                            budget=budget)
        return [estimators.mtp_check(args.transport, trials, seed, law=law,
                                     workers=workers, budget=budget)]
    if args.statistic == "reversibility":
        rows = []
        for n in range(1, args.nmax + 1):
            tv = estimators.reversibility_exact(n)
            rows.append({
                "statistic": "reversibility",
                "n": n,
                "tv_distance": tv,
                "tv_float": float(tv),
                "seed": seed,
                "wall_time_s": 0.0,
            })
        return rows
    if args.statistic == "intersection":
        d = parse_grid(args.dim, int)
        if len(d) != 1:
            raise UsageError("intersection wants a single --dim")
        return estimators.intersection_profile(r_grid, trials, seed, d=d[0], law=law,
                                               workers=workers, budget=budget)
    raise UsageError(f"unknown statistic {args.statistic!r}")


def _cmd_estimate(args):
    rows = _estimate_rows(args)
    if not rows:
        raise UsageError("experiment produced no rows")
    out = args.out or f"treesnake_{args.statistic}.{args.format}"
    config = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("command", "config") and v is not None
    }
    meta = {"seed": args.seed, "statistic": args.statistic, "config": config}
    if args.format == "csv":
        write_csv(out, rows, meta)
    else:
        write_jsonl(out, rows, meta)
    first = rows[0]
    summary_keys = [k for k in first if k not in ("statistic", "seed", "wall_time_s")][:6]
    summary = " ".join(f"{k}={first[k]}" for k in summary_keys)
    print(f"{args.statistic}: {len(rows)} rows -> {out} ({summary} ...)")


def _cmd_plot(args):
    from .reporting import read_report

    rows, _meta = read_report(args.report)
    fn = svgplot.PLOT_KINDS[args.kind]
    fn(rows, args.out)
    print(f"wrote {args.out}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        if args.command == "sample":
            _cmd_sample(args)
        elif args.command == "estimate":
            if args.config:
                defaults = _read_config(args.config)
                ns = argparse.Namespace(**vars(args))
                explicit = {a for a in (argv or sys.argv[1:]) if a.startswith("--")}
                for k, v in defaults.items():
                    flag = f"--{k}"
                    if flag not in explicit and hasattr(ns, k):
                        cur_type = type(getattr(ns, k))
                        setattr(ns, k, cur_type(v) if cur_type is not type(None) else v)
                args = ns
            _cmd_estimate(args)
        elif args.command == "plot":
            _cmd_plot(args)
        else:
            raise UsageError(f"unknown command {args.command!r}")
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except BudgetExceededError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return 3
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
