"""Command-line interface.

Exit codes: 0 success, 1 analysis-level failure (a hypothesis or
verification check failed), 2 input error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from . import analysis, filterlib
from .errors import AnalysisError, InputError, InvalidParam, RuelleLabError

EXIT_OK, EXIT_ANALYSIS, EXIT_INPUT = 0, 1, 2


def _error_payload(exc: RuelleLabError) -> dict:
    out = {"error": type(exc).__name__, "message": str(exc)}
    orbit = getattr(exc, "orbit", None)
    if orbit:
        out["orbit"] = [z.to_json() for z in orbit]
    return out


def _emit(obj: dict) -> None:
    sys.stdout.write(analysis.dumps(obj))


def _seed(arg: int) -> int:
    env = os.environ.get("RUELLE_LAB_SEED")
    if env is None or env == "":
        return arg
    try:
        return int(env)
    except ValueError:
        raise InvalidParam(f"RUELLE_LAB_SEED must be an integer, got {env!r}") from None


def cmd_validate(args) -> int:
    spec = filterlib.validate(analysis.load_filter(args.file), args.tol)
    out = {"schema": analysis.SCHEMA, "filter": filterlib.to_json(spec)}
    out.update(spec.validation.to_json())
    out["all_ok"] = spec.validation.all_ok
    _emit(out)
    return EXIT_OK if spec.validation.all_ok else EXIT_ANALYSIS


def cmd_analyze(args) -> int:
    settings = analysis.Settings(
        cycle_tol=args.tol,
        p_max=args.pmax,
        grid=args.grid,
        seed=_seed(args.seed),
        crosscheck=args.crosscheck,
    )
    if settings.grid < 1:
        raise InvalidParam("--grid must be positive")
    if settings.p_max is not None and settings.p_max < 1:
        raise InvalidParam("--pmax must be positive")
    result = analysis.analyze(analysis.load_filter(args.file), settings)
    if args.out is not None:
        analysis.write_outputs(result, args.out)
    _emit(result.to_json())
    return EXIT_OK if result.ok else EXIT_ANALYSIS


def cmd_product(args) -> int:
    report = analysis.product_report(
        analysis.load_filter(args.file), args.f1, args.f2, report_path=args.report
    )
    _emit(report)
    return EXIT_OK if report["ok"] else EXIT_ANALYSIS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ruelle-lab",
        description="Peripheral spectral analysis of wavelet transfer operators.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check the QMF hypotheses of a filter")
    v.add_argument("file", help="filter JSON file or builtin name (haar, stretched_haar:3, daubechies4)")
    v.add_argument("--tol", type=float, default=filterlib.QMF_TOL)
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="cycles, peripheral spectrum and verification report")
    a.add_argument("file", help="filter JSON file or builtin name")
    a.add_argument("--pmax", type=int, default=None, help="largest cycle period searched")
    a.add_argument("--tol", type=float, default=analysis.cyc.CYCLE_TOL, help="cycle tolerance")
    a.add_argument("--grid", type=int, default=1024, help="grid size for checks and CSV output")
    a.add_argument("--seed", type=int, default=0, help="seed for random test functions")
    a.add_argument("--out", default=None, help="directory for report.json and CSV files")
    a.add_argument("--crosscheck", action="store_true", help="run the cascade/product oracles")
    a.set_defaults(func=cmd_analyze)

    pr = sub.add_parser("product", help="the transfer product of two fixed points")
    pr.add_argument("file", help="filter JSON file or builtin name")
    pr.add_argument("f1", help='eigenfunction name ("1", "h_C1", ...) or inline JSON coefficients')
    pr.add_argument("f2")
    pr.add_argument("--report", default=None, help="prior analyze report to resolve names from")
    pr.set_defaults(func=cmd_product)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _emit(_error_payload(exc))
        return EXIT_INPUT
    except AnalysisError as exc:
        _emit(_error_payload(exc))
        return EXIT_ANALYSIS
    except (OSError, json.JSONDecodeError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
