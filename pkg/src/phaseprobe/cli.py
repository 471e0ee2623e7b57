"""Command-line sweeps with machine-readable output.

Examples:
  phaseprobe tau --E 0 1 2 5 10 --format csv
  phaseprobe psi74 --r 0 1 2 3 --out psi74.json
  phaseprobe herald --auto
  phaseprobe sample --state psi74:1.5 --count 100000 --seed 7

Every output embeds the full run configuration and the package version, so
two runs with the same arguments produce byte-identical files.  Exit codes:
0 success, 2 precondition failure, 3 truncation or convergence failure.
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
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .continuum import psi_a_cost
from .crb import crb_gap_report
from .errors import (
    ContractError,
    ConvergenceError,
    InfeasibleError,
    MomentError,
    PhaseProbeError,
    RangeError,
    SupportError,
    TruncationError,
)
from .fock import FockVector, from_amplitudes, mean_photon
from .herald import (
    REFERENCE_BETAS,
    REFERENCE_FIDELITY,
    REFERENCE_N,
    REFERENCE_P,
    REFERENCE_Q,
    REFERENCE_S,
    TOP_SCALINGS,
    HeraldConfig,
    core_target,
    herald_amplitudes,
    herald_fidelity,
    optimize_betas,
)
from .phase import (
    box_pointer,
    covariant_error,
    minimize_tau,
    modular_density,
    raised_cosine_pointer,
    sample_estimates,
)
from .squeeze import alpha_asymptotics, psi74_state

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_TRUNCATION = 3


def worker_count() -> int:
    raw = os.environ.get("PHASEPROBE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def ordered_map(func: Callable, items: Sequence) -> list:
    """Apply ``func`` on a thread pool; results come back in input order."""
    items = list(items)
    if len(items) <= 1 or worker_count() == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(func, items))


def fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def render(config: dict, rows: list[dict], extra: dict, fmt_name: str, columns: Sequence[str]) -> str:
    if fmt_name == "json":
        doc = {"version": __version__, "config": config, **extra, "rows": rows}
        return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# phaseprobe {__version__}\n")
    buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    for key, val in extra.items():
        buf.write(f"# {key}: " + json.dumps(_jsonable(val), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


# --------------------------------------------------------------------------
# state specifications shared by sample / modular-check
# --------------------------------------------------------------------------


def parse_state(spec: str) -> FockVector:
    """``basis:n``, ``amplitudes:a0,a1,...``, ``tau:E``, ``psi74:r`` or ``file:PATH``."""
    kind, _, arg = spec.partition(":")
    if kind == "basis":
        return FockVector.basis(int(arg))
    if kind == "amplitudes":
        return from_amplitudes([complex(s) for s in arg.split(",")])
    if kind == "tau":
        return minimize_tau(float(arg)).optimizer
    if kind == "psi74":
        return psi74_state(float(arg))
    if kind == "file":
        try:
            return FockVector.from_json(Path(arg).read_text(encoding="utf-8"))
        except (OSError, KeyError, TypeError) as exc:
            raise ValueError(f"{arg}: expected a saved state {{\"amplitudes\": [[re, im], ...]}} ({exc!r})") from exc
    raise ValueError(f"unknown state spec {spec!r}")


# --------------------------------------------------------------------------
# subcommands: each returns (rows, extra, csv columns, failed)
# --------------------------------------------------------------------------


def _row_failure(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def cmd_tau(args):
    def one(E):
        try:
            return minimize_tau(E, args.n_trunc).to_dict()
        except (TruncationError, ConvergenceError) as exc:
            return {"E": E, **_row_failure(exc)}

    rows = ordered_map(one, args.E)
    if args.format == "csv":
        rows = [{k: v for k, v in r.items() if k != "amplitudes"} for r in rows]
    failed = any("error" in r for r in rows)
    return rows, {}, ["E", "tau", "E2tau", "sector", "mu", "n_trunc", "error"], failed


def cmd_cost_curve(args):
    if args.steps < 2:
        raise ValueError("steps must be at least 2")
    grid = np.linspace(args.a_min, args.a_max, args.steps)
    rows = [{"a": float(a), "c": psi_a_cost(float(a))} for a in grid]
    best = min(rows, key=lambda r: r["c"])
    return rows, {"minimum": best}, ["a", "c"], False


def cmd_psi74(args):
    def one(r):
        try:
            v = psi74_state(r, args.n_trunc, align=not args.no_align)
        except TruncationError as exc:
            return {"r": r, **_row_failure(exc)}
        E = mean_photon(v)
        D = covariant_error(v)
        return {"r": r, "n_trunc": v.n_trunc, "E": E, "D": D, "E2D": E * E * D}

    rows = ordered_map(one, args.r)
    return rows, {}, ["r", "n_trunc", "E", "D", "E2D", "error"], any("error" in r for r in rows)


def cmd_alpha(args):
    rows = ordered_map(
        lambda r: dict(zip(("r", "sup_deviation"), alpha_asymptotics(args.l, args.parity, [r], args.n_trunc)[0])),
        args.r,
    )
    return rows, {}, ["r", "sup_deviation"], False


def cmd_herald(args):
    q = args.q
    if args.auto:
        target = core_target()
        cfg = optimize_betas(q, target, args.top)
    else:
        cfg = HeraldConfig(q, tuple(REFERENCE_BETAS if args.betas is None else args.betas))
    state = herald_amplitudes(cfg, args.top)
    target = state.vector if args.target == "self" else core_target()
    rows = [
        {
            "label": "computed",
            "q": cfg.q,
            "betas": list(cfg.betas),
            "p": cfg.pair_product,
            "s": cfg.pair_sum,
            "N": state.N,
            "fidelity": herald_fidelity(cfg, target, args.top),
            "phi": [float(x) for x in state.phi],
        },
        {
            "label": "reference",
            "q": REFERENCE_Q,
            "betas": list(REFERENCE_BETAS),
            "p": REFERENCE_P,
            "s": REFERENCE_S,
            "N": REFERENCE_N,
            "fidelity": REFERENCE_FIDELITY,
        },
    ]
    if args.format == "csv":
        for row in rows:
            row["betas"] = " ".join(fmt(b) for b in row["betas"])
            row.pop("phi", None)
    return rows, {}, ["label", "q", "betas", "p", "s", "N", "fidelity"], False


def cmd_crb_gap(args):
    report = crb_gap_report(args.E, args.t, args.n_trunc)
    doc = report.to_dict()
    rows = doc.pop("rows")
    return rows, {"summary": doc}, ["t", "mean", "variance", "mcrb", "E2mcrb"], False


def cmd_sample(args):
    v = parse_state(args.state)
    est = sample_estimates(v, args.theta, args.count, args.seed)
    loss = 2.0 * np.sin(est - args.theta) ** 2
    mean = float(np.mean(loss))
    stderr = float(np.std(loss, ddof=1) / math.sqrt(loss.size)) if loss.size > 1 else math.inf
    analytic = covariant_error(v)
    row = {
        "count": args.count,
        "empirical": mean,
        "stderr": stderr,
        "analytic": analytic,
        "z": (mean - analytic) / stderr if stderr > 0 else 0.0,
        "first_estimate": float(est[0]),
        "checksum": float(np.sum(est)),
    }
    return [row], {}, ["count", "empirical", "stderr", "analytic", "z", "first_estimate", "checksum"], False


def cmd_modular_check(args):
    v = parse_state(args.state)
    pointer = raised_cosine_pointer(args.samples) if args.pointer == "raised-cosine" else box_pointer(args.samples)
    res = modular_density(v, pointer, args.k_max, args.grid, args.theta)
    row = {"pointer": res.pointer, "k_max": res.k_max, "grid": res.grid, "max_deviation": res.max_deviation}
    return [row], {}, ["pointer", "k_max", "grid", "max_deviation"], False


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phaseprobe", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"phaseprobe {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="write here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tau", parents=[common], help="minimum error at each energy")
    p.add_argument("--E", type=float, nargs="+", required=True)
    p.add_argument("--n-trunc", type=int, default=None)
    p.set_defaults(func=cmd_tau)

    p = sub.add_parser("cost-curve", parents=[common], help="asymptotic cost of the psi_a family")
    p.add_argument("--a-min", type=float, default=0.6)
    p.add_argument("--a-max", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=2401)
    p.set_defaults(func=cmd_cost_curve)

    p = sub.add_parser("psi74", parents=[common], help="energy and error of the squeezed five-level probe")
    p.add_argument("--r", type=float, nargs="+", required=True)
    p.add_argument("--n-trunc", type=int, default=None)
    p.add_argument("--no-align", action="store_true", help="skip the exp(i pi n/2) rotation")
    p.set_defaults(func=cmd_psi74)

    p = sub.add_parser("alpha-convergence", parents=[common], help="distance of alpha states from their limit profile")
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--parity", choices=("even", "odd"), default="even")
    p.add_argument("--r", type=float, nargs="+", default=[2.0, 2.5, 3.0, 3.5])
    p.add_argument("--n-trunc", type=int, default=None)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("herald", parents=[common], help="heralded core amplitudes and fidelity")
    p.add_argument("--q", type=float, default=REFERENCE_Q)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--betas", type=float, nargs=4, default=None, help="default: the reference betas")
    group.add_argument("--auto", action="store_true", help="solve for the betas")
    p.add_argument("--target", choices=("core", "self"), default="core")
    p.add_argument("--top", choices=TOP_SCALINGS, default="sqrt_factorial")
    p.set_defaults(func=cmd_herald)

    p = sub.add_parser("crb-gap", parents=[common], help="Cramer-Rao bound against the attainable error")
    p.add_argument("--E", type=float, default=10.0)
    p.add_argument("--t", type=float, nargs="+", default=[10.0, 100.0, 1000.0])
    p.add_argument("--n-trunc", type=int, default=None)
    p.set_defaults(func=cmd_crb_gap)

    p = sub.add_parser("sample", parents=[common], help="Monte-Carlo estimate of the error")
    p.add_argument("--state", default="tau:2")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--count", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("modular-check", parents=[common], help="pointer measurement against the ideal density")
    p.add_argument("--state", default="tau:2")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--k-max", type=int, default=512)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--pointer", choices=("raised-cosine", "box"), default="raised-cosine")
    p.set_defaults(func=cmd_modular_check)
    return ap


def run_config(args) -> dict:
    skip = {"func", "out"}
    return {"command": args.command, **{k: v for k, v in sorted(vars(args).items()) if k not in skip | {"command"}}}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rows, extra, columns, failed = args.func(args)
    except (TruncationError, ConvergenceError) as exc:
        print(f"phaseprobe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except (ContractError, InfeasibleError, MomentError, RangeError, SupportError, PhaseProbeError, ValueError) as exc:
        print(f"phaseprobe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    text = render(run_config(args), rows, extra, args.format, columns)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_TRUNCATION if failed else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
