"""Batch command-line front end.

Every command writes a pretty-printed, key-sorted JSON report (deterministic
for a fixed configuration and seed) plus a separate metadata file carrying the
timestamp, and prints the report to stdout.  Exit codes: 0 success, 1 usage
error, 2 numerical failure; failures emit a machine-parsable error object on
stderr.

Configuration precedence: command-line flags, then `key = value` lines from
--config, then the SPHEREPART_OUTDIR environment variable (output directory
only), then built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import analysis, bounds, exact, fem, geom
from .errors import ConvergenceError, DegeneratePartitionError, DomainTooThinError

ENV_OUTDIR = "SPHEREPART_OUTDIR"

_DEFAULTS = {
    "spectrum": {"mode": "sphere", "count": 9, "level": None, "tol": 1e-8},
    "evaluate": {"level": None, "grid": None, "p": "1,2", "tol": 1e-8},
    "bounds": {"k": "2..5"},
    "cap": {},
    "optimize": {"k": 3, "seeds": 10, "level": 4, "p_schedule": "1,2,4,8",
                 "max_iters": 30, "refine": 1},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_k_range(text):
    if ".." in text:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise UsageError(f"empty k range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _parse_float_list(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _parse_grid(text):
    try:
        a, b = str(text).lower().split("x")
        return int(a), int(b)
    except ValueError as exc:
        raise UsageError(f"grid must look like 96x192, got {text!r}") from exc


def _load_config(path):
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line without '=': {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _resolve(args, command):
    """Fill unset options from the config file, then from built-in defaults."""
    config = _load_config(args.config) if args.config else {}
    for key, default in _DEFAULTS[command].items():
        if getattr(args, key, None) is None:
            if key in config:
                setattr(args, key, config[key])
            else:
                setattr(args, key, default)
    if args.outdir is None:
        args.outdir = config.get("outdir") or os.environ.get(ENV_OUTDIR) or "."
    return args


def _write_report(args, name, report):
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    (outdir / f"{name}_report.json").write_text(text)
    meta = {
        "written_at": datetime.now(timezone.utc).isoformat(),
        "report": f"{name}_report.json",
    }
    (outdir / f"{name}_report.meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    sys.stdout.write(text)


def _cluster(values, rel_gap=1e-3, abs_gap=1e-6):
    """Group sorted eigenvalues whose gaps are below the tolerance."""
    clusters = []
    for v in values:
        if clusters and v - clusters[-1][-1] <= max(abs_gap, rel_gap * max(abs(v), 1.0)):
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return clusters


def _mesh_for_level(mode, level):
    if mode == "sphere":
        return geom.build_icosphere(level)
    return geom.build_seamed_mesh(level)


def cmd_spectrum(args):
    args.count = int(args.count)
    args.tol = float(args.tol)
    if args.mode not in ("sphere", "covering", "antisymmetric"):
        raise UsageError(f"unknown mode {args.mode!r}")
    if args.count < 1:
        raise UsageError("count must be positive")
    level = int(args.level) if args.level is not None else (5 if args.mode == "sphere" else 3)

    if args.mode == "sphere":
        exact_flat = exact.flat_spectrum(exact.sphere_spectrum(args.count), args.count)
        mesh = geom.build_icosphere(level)
        ops = fem.assemble(mesh, antiperiodic=False)
        pairs = fem.solve_smallest(*ops, args.count, tol=args.tol, sigma=-1.0)
        fem_vals = [p.eigenvalue for p in pairs]
        residuals = [p.residual for p in pairs]
    elif args.mode == "antisymmetric":
        anti = [e for e in exact.covering_spectrum(2 * args.count + 2) if e[2] == "A"]
        exact_flat = exact.flat_spectrum(anti, args.count)
        mesh = geom.build_seamed_mesh(level)
        ops = fem.assemble(mesh, antiperiodic=True)
        pairs = fem.solve_smallest(*ops, args.count, tol=args.tol, sigma=-1.0)
        fem_vals = [p.eigenvalue for p in pairs]
        residuals = [p.residual for p in pairs]
    else:  # covering: symmetric and antisymmetric problems on the same grid
        exact_flat = exact.flat_spectrum(exact.covering_spectrum(2 * args.count), args.count)
        mesh = geom.build_seamed_mesh(level)
        sym = fem.solve_smallest(*fem.assemble(mesh, antiperiodic=False),
                                 args.count, tol=args.tol, sigma=-1.0)
        anti = fem.solve_smallest(*fem.assemble(mesh, antiperiodic=True),
                                  args.count, tol=args.tol, sigma=-1.0)
        merged = sorted(
            [(p.eigenvalue, p.residual) for p in sym] + [(p.eigenvalue, p.residual) for p in anti]
        )[: args.count]
        fem_vals = [v for v, _ in merged]
        residuals = [r for _, r in merged]

    rows = []
    used = 0
    for cluster in _cluster(exact_flat):
        block = fem_vals[used : used + len(cluster)]
        used += len(cluster)
        target = cluster[0]
        errs = [abs(v - target) / max(target, 1.0) for v in block]
        rows.append(
            {
                "exact": target,
                "multiplicity": len(cluster),
                "fem": block,
                "max_rel_error": max(errs) if errs else None,
            }
        )
    report = {
        "schema_version": 1,
        "command": "spectrum",
        "config": {"mode": args.mode, "count": args.count, "level": level},
        "mesh": {"vertices": mesh.n_vertices, "triangles": mesh.n_triangles},
        "clusters": rows,
        "fem": fem_vals,
        "exact": exact_flat,
        "max_rel_error": max(r["max_rel_error"] for r in rows if r["max_rel_error"] is not None),
        "solver": {"residuals": residuals, "tolerance": args.tol},
    }
    _write_report(args, "spectrum", report)
    return 0


def _evaluate_mesh(args, name):
    if args.grid is not None:
        n_theta, n_phi = _parse_grid(args.grid)
        return geom.build_latlong_mesh(n_theta, n_phi)
    if args.level is not None:
        return geom.build_icosphere(int(args.level))
    if name == "tetra":
        return geom.build_icosphere(6)
    return geom.build_latlong_mesh(96, 192)


def cmd_evaluate(args):
    name = args.partition
    mesh = _evaluate_mesh(args, name)
    if name == "hemispheres":
        labeling = geom.make_lune_partition(mesh, 2)
    elif name == "y":
        labeling = geom.make_lune_partition(mesh, 3)
    elif name.startswith("lunes:"):
        labeling = geom.make_lune_partition(mesh, int(name.split(":", 1)[1]))
    elif name == "tetra":
        labeling = geom.make_tetrahedral_partition(mesh)
    else:
        raise UsageError(f"unknown partition {name!r}")
    p_list = _parse_float_list(args.p)
    report = analysis.partition_report(mesh, labeling, p_list=p_list, tol=float(args.tol))
    report["command"] = "evaluate"
    report["config"] = {
        "partition": name,
        "mesh": {"vertices": mesh.n_vertices, "triangles": mesh.n_triangles},
        "p": p_list,
    }
    _write_report(args, "evaluate", report)
    return 0


def cmd_bounds(args):
    ks = _parse_k_range(str(args.k))
    rows = []
    for k in ks:
        spectrum = exact.flat_spectrum(exact.sphere_spectrum(k), k)
        rep = bounds.bound_report(k, spectrum=spectrum)
        gamma = rep.gamma
        rows.append(
            {
                "k": rep.k,
                "Phi_infty": rep.phi_infty,
                "Phi_hat3": rep.phi_hat3,
                "Phi3": rep.phi3,
                "gamma": float(gamma),
                "gamma_exact": str(gamma) if k <= 4 else None,
                "delta": rep.delta,
                "large_k": rep.large_k,
                "fermionic": rep.fermionic,
            }
        )
    report = {
        "schema_version": 1,
        "command": "bounds",
        "config": {"k": str(args.k)},
        "rows": rows,
        "j0": bounds.J0,
    }
    _write_report(args, "bounds", report)
    return 0


def cmd_cap(args):
    s = float(args.S)
    if not 0.0 < s < 1.0:
        raise UsageError("--S must lie strictly between 0 and 1")
    alpha = exact.cap_alpha(s)
    report = {
        "schema_version": 1,
        "command": "cap",
        "config": {"S": s},
        "alpha": alpha,
        "lambda": exact.alpha_to_lambda(alpha, 3),
        "polar_angle": float(np.arccos(1.0 - 2.0 * s)),
    }
    _write_report(args, "cap", report)
    return 0


def cmd_optimize(args):
    k = int(args.k)
    n_seeds = int(args.seeds)
    if n_seeds < 1:
        raise UsageError("--seeds must be positive")
    schedule = tuple(_parse_float_list(args.p_schedule))
    mesh = geom.build_icosphere(int(args.level))
    out_mesh, labeling, energy, per_seed, trace = analysis.optimize_best_of(
        mesh, k, seeds=range(n_seeds), p_schedule=schedule,
        max_outer_iters=int(args.max_iters), refine=int(args.refine),
    )
    report = analysis.partition_report(out_mesh, labeling,
                                       p_list=sorted(set(schedule)), trace=trace)
    report["command"] = "optimize"
    report["config"] = {
        "k": k,
        "seeds": n_seeds,
        "level": int(args.level),
        "refine": int(args.refine),
        "p_schedule": list(schedule),
        "mesh": {"vertices": out_mesh.n_vertices, "triangles": out_mesh.n_triangles},
    }
    report["per_seed"] = per_seed
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    geom.export_obj(out_mesh, outdir / "optimize_best.obj")
    geom.export_labels_json(outdir / "optimize_best_labels.json",
                            labels=labeling.labels, k=k)
    _write_report(args, "optimize", report)
    return 0


def build_parser():
    parser = _Parser(prog="spherepart", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--outdir", default=None, help="output directory")
        p.add_argument("--config", default=None, help="key = value config file")

    p = sub.add_parser("spectrum", help="FEM spectrum against the exact one")
    p.add_argument("--mode", default=None, choices=["sphere", "covering", "antisymmetric"])
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="solver residual tolerance")
    common(p)

    p = sub.add_parser("evaluate", help="energies and validators for a named partition")
    p.add_argument("partition", help="hemispheres | y | lunes:k | tetra")
    p.add_argument("--level", type=int, default=None, help="icosphere level")
    p.add_argument("--grid", default=None, help="lat-long grid, e.g. 96x192")
    p.add_argument("--p", default=None, help="comma-separated p values")
    p.add_argument("--tol", type=float, default=None)
    common(p)

    p = sub.add_parser("bounds", help="lower-bound constants per k")
    p.add_argument("--k", default=None, help="single k or range like 2..5")
    common(p)

    p = sub.add_parser("cap", help="spherical-cap exponent for an area fraction")
    p.add_argument("--S", required=True, help="area fraction in (0, 1)")
    common(p)

    p = sub.add_parser("optimize", help="search for a low-energy k-partition")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None, help="number of seeds (0..n-1)")
    p.add_argument("--level", type=int, default=None, help="coarse icosphere level")
    p.add_argument("--p-schedule", dest="p_schedule", default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--refine", type=int, default=None, help="subdivision polish stages")
    common(p)
    return parser


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "evaluate": cmd_evaluate,
    "bounds": cmd_bounds,
    "cap": cmd_cap,
    "optimize": cmd_optimize,
}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _resolve(args, args.command)
        t0 = time.perf_counter()
        code = _COMMANDS[args.command](args)
        elapsed = time.perf_counter() - t0
        sys.stderr.write(f"done in {elapsed:.2f} s\n")
        return code
    except UsageError as exc:
        return _fail("usage", str(exc), 1)
    except (ValueError, KeyError) as exc:
        return _fail("usage", str(exc), 1)
    except (ConvergenceError, DegeneratePartitionError, DomainTooThinError,
            ArithmeticError, RuntimeError) as exc:
        return _fail(type(exc).__name__, str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
