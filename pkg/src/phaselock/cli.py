"""Command-line front end.

Exit codes: 0 success, 1 analysis-negative (no fixed point), 2 input error,
3 capacity error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import coupling, simulator
from .errors import CapacityError, CertificationError, PhaselockError
from .frequencies import FrequencySpec, center, parse_frequencies, read_frequencies, sample_normal

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_CAPACITY = 3

THREADS_ENV = "PHASELOCK_THREADS"


class InputError(PhaselockError):
    pass


def _num(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{float(x):.17g}"


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not math.isfinite(x) else float(f"{x:.17g}")
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_json_value(v) for v in x]
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    return x


# --------------------------------------------------------------------------- input


def _parse_sample(tokens: Sequence[str]) -> dict[str, Any]:
    opts: dict[str, Any] = {"mean": 0.0, "std": 1.0, "seed": 0, "distribution": "normal"}
    for tok in tokens:
        if "=" not in tok:
            raise InputError(f"--sample expects key=value tokens, got {tok!r}")
        key, val = tok.split("=", 1)
        try:
            if key in ("n", "seed"):
                opts[key] = int(val)
            elif key in ("mean", "std"):
                opts[key] = float(val)
            elif key == "distribution":
                opts[key] = val
            else:
                raise InputError(f"unknown --sample key {key!r}")
        except ValueError:
            raise InputError(f"bad value for {key}: {val!r}") from None
    if "n" not in opts:
        raise InputError("--sample requires n=<count>")
    if opts["distribution"] != "normal":
        raise InputError(f"unsupported distribution {opts['distribution']!r}")
    return opts


def load_spec(args) -> FrequencySpec:
    sources = [s for s in (args.file, args.omega, args.sample) if s is not None]
    if len(sources) != 1:
        raise InputError("give exactly one of --file, --omega, --sample")
    if args.file is not None:
        if args.file == "-":
            return parse_frequencies(sys.stdin.read())
        path = Path(args.file)
        if not path.is_file():
            raise InputError(f"no such file: {path}")
        return read_frequencies(path)
    if args.omega is not None:
        text = args.omega.strip()
        if not text.startswith("["):
            text = "\n".join(t for t in text.replace(",", " ").split())
        return parse_frequencies(text)
    opts = _parse_sample(args.sample)
    return sample_normal(opts["n"], opts["mean"], opts["std"], opts["seed"])


# --------------------------------------------------------------------------- output


class Output:
    """Collects a flat record or a table and renders it as text, csv or json."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.buf = io.StringIO()

    def record(self, fields: dict[str, Any], text_lines: Sequence[str] | None = None) -> None:
        if self.fmt == "json":
            json.dump(_json_value(fields), self.buf, indent=2)
            self.buf.write("\n")
        elif self.fmt == "csv":
            w = csv.writer(self.buf, lineterminator="\n")
            w.writerow(list(fields))
            w.writerow([_num(v) if not isinstance(v, str) else v for v in fields.values()])
        else:
            for line in text_lines or [f"{k} = {_num(v) if not isinstance(v, str) else v}" for k, v in fields.items()]:
                self.buf.write(line + "\n")

    def table(self, header: Sequence[str], rows: Sequence[Sequence[Any]], meta: dict[str, Any] | None = None) -> None:
        if self.fmt == "json":
            payload = dict(meta or {})
            payload["rows"] = [dict(zip(header, r)) for r in rows]
            json.dump(_json_value(payload), self.buf, indent=2)
            self.buf.write("\n")
            return
        w = csv.writer(self.buf, lineterminator="\n")
        if self.fmt == "text" and meta:
            for k, v in meta.items():
                self.buf.write(f"# {k} = {_num(v) if not isinstance(v, str) else v}\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else v if isinstance(v, str) else _num(v) for v in r])

    def flush(self, target: str | None) -> None:
        data = self.buf.getvalue()
        if target in (None, "-"):
            sys.stdout.write(data)
        else:
            Path(target).write_text(data)


# --------------------------------------------------------------------------- subcommands


def run_bounds(args, out: Output) -> int:
    spec = load_spec(args)
    lo_inf, lo_sigma = coupling.lower_bounds(spec)
    upper = 0.0 if spec.is_degenerate else coupling.upper_bound(spec)
    fields = {
        "n": spec.n,
        "lower_inf": lo_inf,
        "lower_sigma": lo_sigma,
        "upper": upper,
        "upper_vacuous": math.isinf(upper),
        "degenerate": spec.is_degenerate,
    }
    lines = [
        f"N = {spec.n}",
        f"lower_inf = {_num(lo_inf)}",
        f"lower_sigma = {_num(lo_sigma)}",
        f"upper = {_num(upper)}" + ("  (vacuous: all |Omega_j| equal)" if math.isinf(upper) else ""),
    ]
    if spec.is_degenerate:
        lines.append("degenerate: Omega = 0, k_c = 0")
    out.record(fields, lines)
    return EXIT_OK


def run_kc(args, out: Output) -> int:
    spec = load_spec(args)
    eps = None if args.eps is None else args.eps * max(spec.inf_norm, 1e-300)
    rep = coupling.compute_kc(spec, eps)
    fields = {
        "n": spec.n,
        "kc": rep.kc,
        "u_star": rep.u_star,
        "iterations": rep.iterations,
        "tolerance": rep.tolerance,
        "lower_inf": rep.lower_inf,
        "lower_sigma": rep.lower_sigma,
        "upper": rep.upper,
        "degenerate": rep.degenerate,
    }
    lines = [
        f"kc = {rep.kc:.10f}",
        f"u_star = {_num(rep.u_star)}",
        f"iterations = {rep.iterations}",
        f"lower_inf = {_num(rep.lower_inf)}",
        f"lower_sigma = {_num(rep.lower_sigma)}",
        f"upper = {_num(rep.upper)}",
    ]
    if rep.degenerate:
        lines.append("degenerate: Omega = 0")
    out.record(fields, lines)
    return EXIT_OK


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_existence(args, out: Output) -> int:
    spec = load_spec(args)
    if args.k_grid is not None:
        grid = [float(v) for v in args.k_grid.split(",") if v.strip()]
    elif args.k is not None:
        grid = [args.k]
    else:
        raise InputError("existence needs --k or --k-grid")
    for k in grid:
        if not k > 0:
            raise InputError(f"k must be positive, got {k}")

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        betas = list(pool.map(lambda k: coupling.existence_at(spec, k), grid))

    if len(grid) == 1:
        k, beta = grid[0], betas[0]
        fields = {"k": k, "exists": beta is not None, "beta": math.nan if beta is None else beta}
        text = [f"exists (beta={_num(beta)})" if beta is not None else "none"]
        out.record(fields, text)
        return EXIT_OK if beta is not None else EXIT_NEGATIVE

    rows = [[k, b is not None, math.nan if b is None else b] for k, b in zip(grid, betas)]
    out.table(["k", "exists", "beta"], rows)
    return EXIT_OK if any(b is not None for b in betas) else EXIT_NEGATIVE


def run_fixed_points(args, out: Output) -> int:
    spec = load_spec(args)
    if args.k is None or not args.k > 0:
        raise InputError("fixed-points needs a positive --k")
    found = coupling.enumerate_fixed_points(spec, args.k, max_n=args.max_n)
    rows = []
    for c in found:
        rows.append([
            "".join("+" if v > 0 else "-" for v in c.a),
            c.beta,
            c.order_R,
            c.residual_inf,
            c.mirrored,
            " ".join(_num(v) for v in c.x_star),
        ])
    meta = {"k": args.k, "certificates": len(found), "classes": len(found.classes)}
    out.table(["signs", "beta", "R", "residual_inf", "mirrored", "x_star"], rows, meta)
    return EXIT_OK if len(found) else EXIT_NEGATIVE


def run_scan(args, out: Output) -> int:
    spec = load_spec(args)
    if args.k is None:
        raise InputError("scan needs --k")
    curve = coupling.self_consistency_curve(spec, args.k, args.samples)
    out.table(["beta", "P", "h"], curve.tolist())
    return EXIT_OK


def run_simulate(args, out: Output) -> int:
    if args.k is None:
        raise InputError("simulate needs --k")
    config = simulator.SimConfig(
        k=args.k, t_end=args.t_end, dt=args.dt, record_every=args.record_every, seed=args.seed
    )
    if args.homogeneous:
        if args.n is None:
            raise InputError("--homogeneous needs --n")
        trace = simulator.homogeneous_run(args.n, args.k, config)
    else:
        trace = simulator.integrate(load_spec(args), config)
    D = trace.D if trace.D is not None else [None] * len(trace.times)
    rows = [[t, L, d, r] for t, L, d, r in zip(trace.times, trace.L, D, trace.residual)]
    meta = {"k": args.k, "converged": trace.converged, "final_residual": float(trace.residual[-1])}
    out.table(["t", "L", "D", "residual"], rows, meta if out.fmt != "csv" else None)
    return EXIT_OK


COMMANDS = {
    "bounds": run_bounds,
    "kc": run_kc,
    "existence": run_existence,
    "fixed-points": run_fixed_points,
    "scan": run_scan,
    "simulate": run_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("frequency input (exactly one)")
    src.add_argument("--file", help="frequency file: one value per line or a JSON array ('-' for stdin)")
    src.add_argument("--omega", help="inline list, e.g. '1,-1' or '[0, 1, 2]'")
    src.add_argument("--sample", nargs="+", metavar="KEY=VALUE",
                     help="normal sample, e.g. n=20 seed=7 [mean=0 std=1]")
    common.add_argument("--format", choices=["text", "csv", "json"], default="text")
    common.add_argument("-o", "--output", help="output path (default stdout)")

    p = argparse.ArgumentParser(prog="phaselock", description="Phase locking in the all-to-all Kuramoto model")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("bounds", parents=[common], help="lower and upper bounds on k_c")

    kc = sub.add_parser("kc", parents=[common], help="exact critical coupling")
    kc.add_argument("--eps", type=float, help="bracket width relative to ||Omega||_inf (default 1e-10)")

    ex = sub.add_parser("existence", parents=[common], help="does a fixed point exist at k?")
    ex.add_argument("--k", type=float)
    ex.add_argument("--k-grid", help=f"comma-separated k values (threads from ${THREADS_ENV})")

    fp = sub.add_parser("fixed-points", parents=[common], help="enumerate certified fixed points")
    fp.add_argument("--k", type=float)
    fp.add_argument("--max-n", type=int, default=coupling.DEFAULT_MAX_N)

    sc = sub.add_parser("scan", parents=[common], help="self-consistency curve P(k beta) vs beta")
    sc.add_argument("--k", type=float)
    sc.add_argument("--samples", type=int, default=512)

    sim = sub.add_parser("simulate", parents=[common], help="RK4 trace of L = R^2")
    sim.add_argument("--k", type=float)
    sim.add_argument("--t-end", type=float, default=10.0)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--record-every", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--homogeneous", action="store_true", help="identical oscillators (Omega = 0)")
    sim.add_argument("--n", type=int, help="oscillator count for --homogeneous")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    out = Output(args.format)
    try:
        code = COMMANDS[args.command](args, out)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (PhaselockError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out.flush(args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
