"""Command-line entry point: ``wq <subcommand> ...``.

Every output starts with a metadata block (tool version, seed and the
canonical argument list).  ``wq replay FILE`` re-runs that argument list and
reproduces the file byte for byte.  Wall time goes to stderr so that data
files stay deterministic.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .bridge import build_covariance, clt_check, exact_two_point_tail, l1_tail_bound, mc_cdf, sample_statistic
from .confidence import coverage_sim, radius_k, region_contains, confidence_region
from .measures import (
    FiniteMeasure1D,
    FiniteMeasure2D,
    Grid1D,
    MeasureError,
    load_measure,
    read_batch,
)
from .optimizer import optimize
from .quantiles import lambda_curve
from .rng import Stream
from .transport import embed_1d, w1_1d, w1_grid_lp

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2
CONFIG_PREFIX = "# config: "
# options that only route output; they never change the data
_ROUTING = {"out", "threads", "plan", "emit_heatmap"}


class UsageError(ValueError):
    pass


# --- number formatting ----------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits, always recognizably a float."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def to_json(obj, indent: int = 0, step: int = 2) -> str:
    pad, inner = " " * indent, " " * (indent + step)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent + step)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + step) for v in seq) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)) and not math.isfinite(float(obj)):
        return "null"
    return fmt(obj)


# --- argument parsing -------------------------------------------------------------

def _range_list(text: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, h = (float(v) for v in text.split(":"))
            if h <= 0 or b < a:
                raise ValueError
            k = int(math.floor((b - a) / h + 1e-9))
            return [round(a + i * h, 12) for i in range(k + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:step or a comma list, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wq", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"wq {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, help_, default_format):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker count (default: WQ_THREADS or all cores)")
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        return p

    p = command("w1", "exact W1 between two measure files", "csv")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--plan", default=None, help="write the optimal plan and duals as JSON")

    p = command("bridge-cdf", "Monte Carlo CDF of the limit statistic", "csv")
    p.add_argument("--p", required=True)
    p.add_argument("--t-max", type=float, default=1.5)
    p.add_argument("--t-steps", type=_positive_int, default=200)
    p.add_argument("--reps", type=_positive_int, default=100_000)

    p = command("lambda-curve", "quantile-maximizing mixture weight per level", "csv")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--reps", type=_positive_int, default=100_000)
    p.add_argument("--alphas", type=_range_list, default=_range_list("0.01:0.99:0.01"))
    p.add_argument("--lambda-steps", type=_positive_int, default=101)

    p = command("confidence", "W1 confidence region around a sample", "json")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--candidate", default=None)

    p = command("coverage", "simulated coverage of the confidence region", "json")
    p.add_argument("--measure", required=True)
    p.add_argument("--n-samples", type=_positive_int, default=10_000)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--reps", type=_positive_int, default=2000)

    p = command("optimize-2d", "Bayesian optimization of the quantile over grid measures", "json")
    p.add_argument("--nx", type=int, default=2)
    p.add_argument("--ny", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--n-samples", type=_positive_int, default=100)
    p.add_argument("--reps", type=_positive_int, default=100)
    p.add_argument("--budget", type=_positive_int, default=60)
    p.add_argument("--emit-heatmap", default=None, help="write the incumbent matrix as CSV")

    p = command("tail-compare", "Monte Carlo tail of the statistic against the eigenvalue bound", "csv")
    p.add_argument("--p", required=True)
    p.add_argument("--t-min", type=float, default=0.1)
    p.add_argument("--t-max", type=float, default=1.5)
    p.add_argument("--t-steps", type=_positive_int, default=15)
    p.add_argument("--reps", type=_positive_int, default=100_000)

    p = command("clt-check", "finite-N law of sqrt(N) W1 against the limit law", "json")
    p.add_argument("--p", default=None, help="grid measure (default: uniform on --n points)")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--n-samples", type=_positive_int, default=10_000)
    p.add_argument("--reps", type=_positive_int, default=10_000)
    p.add_argument("--mc-reps", type=_positive_int, default=10_000)

    p = sub.add_parser("replay", help="re-run the configuration embedded in an output file")
    p.add_argument("file")
    p.add_argument("--out", default=None)
    return ap


def canonical_argv(parser: argparse.ArgumentParser, args: argparse.Namespace) -> list[str]:
    """Argument list that reproduces ``args`` (routing options dropped)."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[args.command]
    argv = [args.command]
    for action in sp._actions:
        if not action.option_strings or action.dest in _ROUTING or action.dest == "help":
            continue
        value = getattr(args, action.dest)
        if value is None:
            continue
        flag = action.option_strings[-1]
        if isinstance(value, list):
            argv += [flag, ",".join(fmt(v) for v in value)]
        elif isinstance(value, float):
            argv += [flag, fmt(value)]
        else:
            argv += [flag, str(value)]
    return argv


# --- output -----------------------------------------------------------------------

def _meta(args, argv) -> dict:
    return {"tool": "wq", "version": __version__, "seed": args.seed, "argv": argv}


def render(meta: dict, fmt_: str, columns: list[str] | None = None, rows=None, record: dict | None = None) -> str:
    if fmt_ == "json":
        body = {"meta": meta}
        if record is not None:
            body.update(record)
        if rows is not None:
            body["columns"] = columns
            body["rows"] = [list(r) for r in rows]
        return to_json(body) + "\n"
    buf = io.StringIO()
    buf.write(f"# wq {meta['version']}\n{CONFIG_PREFIX}{json.dumps(meta['argv'])}\n")
    if rows is None:
        columns = list(record)
        rows = [[record[k] for k in columns]]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if v is None else v if isinstance(v, str) else fmt(v) for v in r])
    return buf.getvalue()


def _write(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _load(path, kinds=None):
    try:
        m = load_measure(path)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise UsageError(f"{path}: not a measure file ({e})") from None
    if kinds and not isinstance(m, kinds):
        raise UsageError(f"{path}: expected {' or '.join(k.__name__ for k in kinds)}, got {type(m).__name__}")
    return m


def _grid_p(path) -> np.ndarray:
    return _load(path, (FiniteMeasure1D,)).p


# --- subcommands --------------------------------------------------------------------

def cmd_w1(args, meta):
    P, Q = _load(args.p), _load(args.q)
    two_d = isinstance(P, FiniteMeasure2D), isinstance(Q, FiniteMeasure2D)
    plan = None
    if all(two_d):
        if (P.nx, P.ny) != (Q.nx, Q.ny):
            raise UsageError("grid measures must share a grid")
        value, plan = w1_grid_lp(P, Q)
    elif any(two_d):
        raise UsageError("cannot compare a 2-D measure with a 1-D one")
    else:
        value = w1_1d(P, Q)
        if args.plan and isinstance(P, FiniteMeasure1D) and isinstance(Q, FiniteMeasure1D) and P.n == Q.n:
            _, plan = w1_grid_lp(embed_1d(P), embed_1d(Q))
        elif args.plan:
            raise UsageError("--plan needs two grid measures on the same grid")
    if args.plan:
        _write(args.plan, to_json({"meta": meta, "cost": plan.cost, **plan.to_dict()}) + "\n")
    if args.format == "csv" and args.out is None:
        return fmt(value) + "\n"
    return render(meta, args.format, record={"w1": value})


def cmd_bridge_cdf(args, meta):
    p = _grid_p(args.p)
    if args.t_max <= 0:
        raise UsageError("--t-max must be positive")
    t = np.linspace(0.0, args.t_max, args.t_steps)
    res = mc_cdf(p, t, args.reps, Stream(args.seed), threads=args.threads)
    rows = zip(res.t, res.F_hat, res.ci_lo, res.ci_hi)
    return render(meta, args.format, ["t", "F_hat", "ci_lo", "ci_hi"], rows)


def cmd_lambda_curve(args, meta):
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    if args.lambda_steps < 2:
        raise UsageError("--lambda-steps must be >= 2")
    alphas = np.asarray(args.alphas)
    if np.any((alphas <= 0) | (alphas > 1)):
        raise UsageError("levels must lie in (0,1]")
    grid = np.linspace(0.0, 1.0, args.lambda_steps)
    c = lambda_curve(args.n, alphas, grid, args.reps, Stream(args.seed), threads=args.threads)
    rows = zip(c.alphas, c.lambda_hat, c.quantile_at_max, c.ci_lo, c.ci_hi)
    return render(meta, args.format, ["alpha", "lambda_hat", "quantile", "ci_lo", "ci_hi"], rows)


def cmd_confidence(args, meta):
    try:
        batch = read_batch(args.data)
    except FileNotFoundError:
        raise UsageError(f"no such file: {args.data}") from None
    if batch.dim != 1:
        raise UsageError("confidence regions are one-dimensional")
    region = confidence_region(batch, args.alpha)
    rec = {"k": region.k, "radius": region.radius, "N": region.N, "alpha": args.alpha,
           "note": region.note}
    if args.candidate:
        mem = region_contains(batch, _load(args.candidate), args.alpha)
        rec.update(contained=mem.contained, margin=mem.margin, distance=mem.distance)
    return render(meta, args.format, record=rec)


def cmd_coverage(args, meta):
    P = _load(args.measure)
    if isinstance(P, FiniteMeasure2D):
        raise UsageError("coverage is defined for measures on [0,1]")
    radius_k(args.alpha)
    cov = coverage_sim(P, args.n_samples, args.alpha, args.reps, Stream(args.seed), threads=args.threads)
    rec = {"fraction": cov.fraction, "ci_lo": cov.ci_lo, "ci_hi": cov.ci_hi, "reps": cov.reps,
           "alpha": cov.alpha, "N": cov.N, "warning": cov.warning or ""}
    return render(meta, args.format, record=rec)


def cmd_optimize_2d(args, meta):
    if not 0 < args.alpha <= 1:
        raise UsageError("--alpha must lie in (0,1]")
    Grid1D(args.nx), Grid1D(args.ny)

    def log(msg):
        print(msg, file=sys.stderr)

    res = optimize(args.nx, args.ny, args.n_samples, args.reps, args.alpha, args.budget,
                   Stream(args.seed), log=log, threads=args.threads)
    if args.emit_heatmap:
        lines = [f"# wq {__version__}", CONFIG_PREFIX + json.dumps(meta["argv"])]
        lines += [",".join(fmt(v) for v in row) for row in res.best.p]
        _write(args.emit_heatmap, "\n".join(lines) + "\n")
    if args.format == "json":
        return to_json({"meta": meta, **res.to_dict()}) + "\n"
    k = args.nx * args.ny
    cols = ["index", "phase", "value", "best_observed"] + [f"p{i}" for i in range(k)]
    lines = [f"# wq {__version__}", CONFIG_PREFIX + json.dumps(meta["argv"]), ",".join(cols)]
    for t in res.trace:
        lines.append(",".join([str(t.index), t.phase, fmt(t.value), fmt(t.best_observed)]
                              + [fmt(v) for v in t.p.ravel()]))
    return "\n".join(lines) + "\n"


def cmd_tail_compare(args, meta):
    p = _grid_p(args.p)
    if not 0 < args.t_min <= args.t_max:
        raise UsageError("need 0 < --t-min <= --t-max")
    t = np.linspace(args.t_min, args.t_max, args.t_steps)
    cov = build_covariance(p)
    v = np.sort(sample_statistic(cov, args.reps, Stream(args.seed), args.threads).values)
    tail = 1.0 - np.searchsorted(v, t, side="left") / v.size
    rows = []
    for ti, mc in zip(t, tail):
        bound = l1_tail_bound(p, float(ti))
        exact = None
        if p.size == 2 and p[0] == 0.5:
            exact = float(exact_two_point_tail(float(ti)))
        rows.append([ti, mc, bound.value, bound.threshold, exact])
    return render(meta, args.format, ["t", "mc_tail", "eigen_bound", "chi_threshold", "exact"], rows)


def cmd_clt_check(args, meta):
    if args.p:
        p = _grid_p(args.p)
    else:
        if args.n < 2:
            raise UsageError("--n must be >= 2")
        p = np.full(args.n, 1.0 / args.n)
    res = clt_check(p, args.n_samples, args.reps, args.mc_reps, Stream(args.seed), args.threads)
    rec = {"kolmogorov": res.kolmogorov, "N": args.n_samples, "reps": args.reps,
           "mc_reps": args.mc_reps, "mean_scaled_w1": float(res.scaled_distances.mean()),
           "mean_limit": float(res.limit_values.mean())}
    return render(meta, args.format, record=rec)


COMMANDS = {
    "w1": cmd_w1, "bridge-cdf": cmd_bridge_cdf, "lambda-curve": cmd_lambda_curve,
    "confidence": cmd_confidence, "coverage": cmd_coverage, "optimize-2d": cmd_optimize_2d,
    "tail-compare": cmd_tail_compare, "clt-check": cmd_clt_check,
}


def replay_argv(path) -> list[str]:
    with open(path) as fh:
        text = fh.read()
    for line in text.splitlines():
        if line.startswith(CONFIG_PREFIX):
            return json.loads(line[len(CONFIG_PREFIX):])
    try:
        return json.loads(text)["meta"]["argv"]
    except (json.JSONDecodeError, KeyError, TypeError):
        raise UsageError(f"{path}: no embedded configuration") from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "replay":
            replayed = replay_argv(args.file)
            return main(replayed + (["--out", args.out] if args.out else []))
        argv_c = canonical_argv(parser, args)
        meta = _meta(args, argv_c)
        t0 = time.perf_counter()
        text = COMMANDS[args.command](args, meta)
        _write(args.out, text)
        print(f"wall time {time.perf_counter() - t0:.3f}s", file=sys.stderr)
        return EXIT_OK
    except (UsageError, MeasureError, ValueError, OSError) as e:
        print(f"wq {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"wq {args.command}: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
