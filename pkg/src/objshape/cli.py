"""Command line interface: ``objshape {shape,peel,test,simulate,fixture}``.

Exit codes: 0 success, 1 statistical refusal (degenerate sample or a
regime where the requested test is undefined), 2 I/O, parse or usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import Metric, as_points, distance_matrix
from .peeling import detect_outliers_by_jump, emit_peeling_plot, pc1_representatives, peel
from .shape import DegenerateSampleError, object_shape, square_distances
from .simulation import SEPARATION, OutlierExperimentConfig, run_grid
from .symmetry import (
    InvalidRegimeError,
    RadialMoments,
    circular_uniformity_test,
    compositional_symmetry_test,
    discrete_uniformity_test,
    sphericity_test,
)

SCHEMA = "objshape/1"
EXIT_OK, EXIT_REFUSED, EXIT_IO = 0, 1, 2

METRIC_CHOICES = ["euclidean", "manhattan", "circle", "aitchison", "discrete", "spd", "precomputed"]
TEST_METRIC = {
    "sphericity": "euclidean",
    "circular": "circle",
    "compositional": "aitchison",
    "discrete": "discrete",
}


class InputError(Exception):
    """Unreadable or malformed input file."""


# -- I/O ---------------------------------------------------------------------


def read_numeric_csv(path) -> np.ndarray:
    """Read a rectangular numeric CSV; a non-numeric first row is taken as a header."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    out = []
    width = None
    for lineno, row in enumerate(rows, start=1):
        try:
            vals = [float(c) for c in row]
        except ValueError:
            if lineno == 1:
                continue
            raise InputError(f"{path}: row {lineno} is not numeric: {row!r}") from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise InputError(f"{path}: row {lineno} has {len(vals)} fields, expected {width}")
        out.append(vals)
    if not out:
        raise InputError(f"{path}: no data rows")
    return np.array(out, dtype=float)


def load_distance_matrix(path, metric):
    arr = read_numeric_csv(path)
    metric = Metric.parse(metric)
    try:
        if metric is Metric.PRECOMPUTED:
            return distance_matrix(arr, metric), arr
        if metric in (Metric.CIRCLE, Metric.DISCRETE):
            if arr.shape[1] != 1:
                raise InputError(f"{path}: {metric.value} data must have a single column")
            arr = arr[:, 0]
        return distance_matrix(arr, metric), arr
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False))


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("OBJSHAPE_THREADS")
    return int(env) if env and env.isdigit() and int(env) > 0 else 1


# -- commands ----------------------------------------------------------------


def cmd_shape(args) -> int:
    D, _ = load_distance_matrix(args.input, args.metric)
    est = object_shape(square_distances(D))
    _emit({"schema": SCHEMA, "command": "shape", "metric": Metric.parse(args.metric).value,
           **est.to_dict()})
    return EXIT_OK


def cmd_peel(args) -> int:
    D, _ = load_distance_matrix(args.input, args.metric)
    result = {"schema": SCHEMA, "command": "peel", "metric": Metric.parse(args.metric).value,
              "direction": args.direction, "n": D.n}
    if args.direction == "min" and args.n0 is not None:
        reps = pc1_representatives(D, args.n0)
        trace = reps.trace
        result.update({"n0": args.n0, "representatives": sorted(reps.indices),
                       "path": reps.path, "path_length": reps.path_length,
                       "surplus": reps.surplus})
        if args.path_out:
            with open(args.path_out, "w", newline="") as fh:
                fh.write(f"# surplus={reps.surplus!r}\n")
                fh.write(f"# path_length={reps.path_length!r}\n")
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["position", "index"])
                for pos, idx in enumerate(reps.path):
                    w.writerow([pos, idx])
            result["path_csv"] = str(args.path_out)
    else:
        trace = peel(D, args.direction, args.stop_fraction)
        if args.direction == "max" and trace.m >= 1:
            lab = detect_outliers_by_jump(trace)
            result.update({"outliers": sorted(lab.indices), "jump_location": lab.jump_location,
                           "jump_size": lab.jump_size})
    result.update({"status": trace.status, "removals": trace.m,
                   "stop_fraction": trace.stop_fraction})
    if trace.message:
        result["message"] = trace.message
    if args.out:
        emit_peeling_plot(trace, args.out, "csv")
        result["trace_csv"] = str(args.out)
    if args.svg:
        emit_peeling_plot(trace, args.svg, "svg")
        result["trace_svg"] = str(args.svg)
    _emit(result)
    return EXIT_OK


def cmd_test(args) -> int:
    arr = read_numeric_csv(args.input)
    which = args.which
    try:
        if which == "sphericity":
            if args.radial is None:
                raise InputError("--which sphericity needs --radial {gaussian,dirac}")
            p = arr.shape[1]
            moments = RadialMoments.gaussian(p) if args.radial == "gaussian" else RadialMoments.dirac()
            res = sphericity_test(arr, moments, alpha=args.alpha, force=args.force,
                                  estimator=args.estimator)
        elif which == "circular":
            if arr.shape[1] != 1:
                raise InputError("circular data must have a single column of angles")
            res = circular_uniformity_test(arr[:, 0], alpha=args.alpha, force=args.force)
        elif which == "compositional":
            comps = as_points(arr, Metric.AITCHISON)
            res = compositional_symmetry_test(comps, alpha=args.alpha, force=args.force,
                                              estimator=args.estimator)
        else:
            if args.counts:
                counts = arr.reshape(-1)
            else:
                if arr.shape[1] != 1:
                    raise InputError("category labels must be a single column (or pass --counts)")
                labels = as_points(arr[:, 0], Metric.DISCRETE)
                p = args.p or int(labels.max())
                if labels.max() > p:
                    raise InputError(f"label {labels.max()} exceeds --p {p}")
                counts = np.bincount(labels - 1, minlength=p)
            if np.any(counts < 0) or np.any(counts != np.round(counts)):
                raise InputError("counts must be nonnegative integers")
            res = discrete_uniformity_test(counts.astype(np.int64), alpha=args.alpha,
                                           force=args.force)
    except InputError:
        raise
    except (InvalidRegimeError, DegenerateSampleError):
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = res.to_dict()
    out["schema"] = SCHEMA
    _emit(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.full_grid:
        ns, eps, thetas = (20, 40, 60, 80, 100), (0.05, 0.10), (2.0, 4.0)
    else:
        ns = tuple(args.n)
        eps = tuple(args.eps)
        if args.theta_out:
            thetas = tuple(args.theta_out)
        else:
            thetas = tuple(SEPARATION[s] for s in args.sep)
    try:
        for n in ns:
            for e in eps:
                for th in thetas:
                    OutlierExperimentConfig(n, e, th, args.reps, args.seed)
    except ValueError as exc:
        raise InputError(f"invalid simulation grid: {exc}") from None
    table = run_grid(ns, eps, thetas, replicates=args.reps, seed=args.seed,
                     threads=_threads(args))
    outputs = {}
    if args.out:
        table.to_csv(args.out)
        outputs[str(args.out)] = _digest(args.out)
    else:
        sys.stdout.write(table.to_csv())
    if args.svg:
        table.to_svg(args.svg)
        outputs[str(args.svg)] = _digest(args.svg)
    if args.out:
        manifest = {
            "schema": SCHEMA,
            "command": "simulate",
            "inputs": [],
            "metric": "spd_affine",
            "parameters": {"n": list(ns), "epsilon": list(eps), "theta_out": list(thetas),
                           "replicates": args.reps, "stop_fraction": 0.8},
            "seed": args.seed,
            "version": __version__,
            "outputs": outputs,
        }
        mpath = Path(str(args.out) + ".manifest.json")
        mpath.write_text(json.dumps(manifest, indent=2) + "\n")
        _emit({"schema": SCHEMA, "command": "simulate", "rows": len(table),
               "out": str(args.out), "manifest": str(mpath)})
    return EXIT_OK


def cmd_fixture(args) -> int:
    from .fixtures import make_fixture

    data = make_fixture(args.name, args.seed)
    if data.ndim == 1:
        data = data[:, None]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in data:
            w.writerow([repr(v.item()) if hasattr(v, "item") else repr(v) for v in row])
    _emit({"schema": SCHEMA, "command": "fixture", "name": args.name, "seed": args.seed,
           "rows": int(data.shape[0]), "out": str(args.out), "sha256": _digest(args.out)})
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="objshape",
                                     description="Object shape of data in metric spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shape", help="sample object shape of a data file")
    p.add_argument("input")
    p.add_argument("--metric", choices=METRIC_CHOICES, default="euclidean")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("peel", help="peeling trace, outliers or representatives")
    p.add_argument("input")
    p.add_argument("--metric", choices=METRIC_CHOICES, default="euclidean")
    p.add_argument("--direction", choices=["max", "min"], default="max")
    p.add_argument("--stop-fraction", type=_fraction, default=0.8)
    p.add_argument("--n0", type=_positive_int, help="min direction: number of representatives")
    p.add_argument("--out", help="trace CSV destination")
    p.add_argument("--svg", help="trace SVG destination")
    p.add_argument("--path-out", help="representative path CSV destination (with --n0)")
    p.set_defaults(func=cmd_peel)

    p = sub.add_parser("test", help="asymptotic test of maximal symmetry")
    p.add_argument("input")
    p.add_argument("--which", choices=sorted(TEST_METRIC), required=True)
    p.add_argument("--radial", choices=["gaussian", "dirac"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--counts", action="store_true", help="discrete: input holds category counts")
    p.add_argument("--p", type=_positive_int, help="discrete: number of categories")
    p.add_argument("--force", action="store_true", help="allow n below the asymptotic minimum")
    p.add_argument("--estimator", choices=["u", "v"], default="u",
                   help="sphericity/compositional: distinct-index (u) or plain (v) sample shape")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="SPD outlier-detection simulation (F1 table)")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[100])
    p.add_argument("--eps", type=float, nargs="+", default=[0.10])
    p.add_argument("--sep", choices=sorted(SEPARATION), nargs="+", default=["more"])
    p.add_argument("--theta-out", type=float, nargs="+")
    p.add_argument("--full-grid", action="store_true", help="run the complete n/eps/sep grid")
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixture", help="write a seeded demo dataset")
    p.add_argument("name", choices=["contaminated", "anisotropic", "uniform-angles",
                                    "compositions", "categories"])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"objshape: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidRegimeError, DegenerateSampleError) as exc:
        print(f"objshape: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except ValueError as exc:
        print(f"objshape: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"objshape: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
