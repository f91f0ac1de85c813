"""The end-to-end pipeline behind ``ruelle-lab analyze`` and ``product``."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import cascade, cycles as cyc, filterlib, peripheral, transfer
from .errors import UnknownFunction
from .filterlib import FilterSpec
from .lpoly import TWO_PI, LaurentPoly, uniform_grid

SCHEMA = "1"


@dataclass(frozen=True)
class Settings:
    cycle_tol: float = cyc.CYCLE_TOL
    p_max: Optional[int] = None
    grid: int = 1024
    seed: int = 0
    crosscheck: bool = False
    rank_tol: float = peripheral.RANK_TOL
    qmf_tol: float = filterlib.QMF_TOL

    def tolerances(self) -> dict:
        return {
            "cycle_tol": self.cycle_tol,
            "qmf_tol": self.qmf_tol,
            "rank_tol": self.rank_tol,
            "near_cycle_tol": cyc.NEAR_CYCLE_TOL,
            "verify": dict(peripheral.VERIFY_THRESHOLDS),
            "cascade_time_domain": cascade.TIME_DOMAIN_TOL,
        }


def load_filter(ref: str) -> FilterSpec:
    """A builtin reference (``haar``, ``stretched_haar:5``) or a JSON file path."""
    spec = filterlib.parse_builtin_ref(ref)
    if spec is not None:
        return spec
    return filterlib.load(ref)


def _fr_pair(fr: Fraction) -> list[int]:
    return [fr.numerator, fr.denominator]


def _fr_name(fr: Fraction) -> str:
    return f"{fr.numerator}/{fr.denominator}"


def eigenfunction_table(spectrum: peripheral.PeripheralSpectrum) -> dict[str, LaurentPoly]:
    """Named eigenfunctions.  Cycles are numbered from 1 (``C1`` is trivial).

    ``h_C<i>``: fixed point of cycle ``i``; ``g_<k>_C<i>``: cycle function at
    its ``k``-th point; ``h_lambda_<a/b>_C<i>``: eigenfunction for
    ``exp(2 pi i a/b)`` (only for ``a/b != 0``).
    """
    out = {"1": LaurentPoly.constant(1.0)}
    for i, h in enumerate(spectrum.h_funcs):
        out[f"h_C{i + 1}"] = h
        if spectrum.cycles[i].period > 1:
            for k, g in enumerate(spectrum.g_funcs[i]):
                out[f"g_{k + 1}_C{i + 1}"] = g
    for (lam, i), h in spectrum.h_lambda.items():
        if lam != 0:
            out[f"h_lambda_{_fr_name(lam)}_C{i + 1}"] = h
    return out


@dataclass
class AnalysisResult:
    spec: FilterSpec
    operator: transfer.TransferOperator
    cycles: list
    spectrum: peripheral.PeripheralSpectrum
    verification: peripheral.VerificationReport
    lawton_cohen: dict
    near_cycles: list
    crosscheck: Optional[list] = None
    cascade_run: Optional[cascade.CascadeRun] = None
    settings: Settings = field(default_factory=Settings)

    @property
    def ok(self) -> bool:
        if not self.verification.ok:
            return False
        return self.crosscheck is None or all(c.ok for c in self.crosscheck)

    def eigenfunctions(self) -> dict[str, LaurentPoly]:
        return eigenfunction_table(self.spectrum)

    def to_json(self) -> dict:
        s = self.settings
        diag = self.spectrum.diagnostics
        report = {
            "schema": SCHEMA,
            "filter": filterlib.to_json(self.spec),
            "validation": self.spec.validation.to_json(),
            "cycles": [c.to_json() for c in self.cycles],
            "eigenvalues": [_fr_pair(lam) for lam in self.spectrum.eigenvalues],
            "eigenfunctions": {k: v.to_json() for k, v in self.eigenfunctions().items()},
            "lawton_cohen": self.lawton_cohen,
            "verification": self.verification.to_json(),
            "diagnostics": {
                "window_half_width": self.operator.d,
                "nu_gram_condition": diag.nu_gram_condition,
                "residual_decay": diag.residual_decay,
                "max_eig_residual": diag.max_eig_residual,
                "near_cycles": [
                    {"point": n.point.to_json(), "deficit": n.deficit, "period": n.period}
                    for n in self.near_cycles
                ],
            },
            "crosscheck": None,
            "ok": self.ok,
            "provenance": {
                "seed": s.seed,
                "p_max": s.p_max if s.p_max is not None else cyc.default_p_max(self.spec.scale_N),
                "grid": s.grid,
                "tolerances": s.tolerances(),
                "version": __version__,
            },
        }
        if self.crosscheck is not None:
            run = self.cascade_run
            h_td = cascade.autocorrelation_h(run.phi)
            report["crosscheck"] = {
                "cascade": {
                    "levels": len(run.distances),
                    "step": run.phi.step,
                    "final_distance": run.distances[-1] if run.distances else None,
                    "h_C1_coeff_discrepancy": h_td.coeff_distance(self.spectrum.h_funcs[0]),
                },
                "cycles": [c.to_json() for c in self.crosscheck],
            }
        return report


def analyze(spec: FilterSpec, settings: Settings = Settings()) -> AnalysisResult:
    """find_cycles, then the transfer matrix, spectrum, verification and
    optional cascade crosscheck."""
    spec = filterlib.require_qmf(spec, settings.qmf_tol)
    cycles = cyc.find_cycles(spec, settings.cycle_tol, settings.p_max)
    op = transfer.build(spec)
    spectrum = peripheral.build_spectrum(op, cycles, settings.rank_tol, seed=settings.seed)
    ver = peripheral.verify_spectrum(op, spectrum, grid_size=settings.grid, seed=settings.seed)
    lc = peripheral.lawton_cohen_report(spectrum)
    near = cyc.near_cycle_report(spec, cycles, p_max=settings.p_max)
    result = AnalysisResult(spec, op, cycles, spectrum, ver, lc, near, settings=settings)
    if settings.crosscheck:
        result.crosscheck = [cascade.crosscheck_h(spec, i, spectrum) for i in range(len(cycles))]
        result.cascade_run = cascade.cascade_fixed_point(spec)
    return result


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_outputs(result: AnalysisResult, out_dir) -> list[Path]:
    """``report.json``, one ``<name>.csv`` per eigenfunction (columns
    ``t, re, im`` on the uniform grid) and, after a crosscheck,
    ``cascade_phi.csv`` (columns ``x, re, im``)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "report.json"
    path.write_text(dumps(result.to_json()))
    written.append(path)
    n = result.settings.grid
    t = TWO_PI * np.arange(n) / n
    z = uniform_grid(n)
    for name, poly in result.eigenfunctions().items():
        path = out / f"{name.replace('/', '_')}.csv"
        vals = poly(z)
        lines = ["t,re,im"] + [
            f"{ti!r},{float(v.real)!r},{float(v.imag)!r}" for ti, v in zip(t.tolist(), vals)
        ]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    if result.cascade_run is not None:
        path = out / "cascade_phi.csv"
        cascade.write_csv(result.cascade_run.phi, path)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------

def resolve_function(name: str, table: dict[str, LaurentPoly]) -> LaurentPoly:
    """Look ``name`` up in ``table`` or parse it as inline JSON: either
    ``{"offset": k, "coeffs": [[re, im], ...]}`` or a bare list of numbers
    or ``[re, im]`` pairs starting at degree 0."""
    if name in table:
        return table[name]
    try:
        obj = json.loads(name)
    except json.JSONDecodeError:
        raise UnknownFunction(
            f"unknown function {name!r}; known: {', '.join(sorted(table))}"
        ) from None
    try:
        if isinstance(obj, dict):
            return LaurentPoly.from_json(obj)
        if isinstance(obj, list):
            vals = [complex(*c) if isinstance(c, list) else complex(c) for c in obj]
            return LaurentPoly.from_dense(vals, 0)
        if isinstance(obj, (int, float)):
            return LaurentPoly.constant(obj)
    except (TypeError, ValueError, KeyError) as exc:
        raise UnknownFunction(f"cannot read inline function {name!r}: {exc}") from None
    raise UnknownFunction(f"cannot read inline function {name!r}")


def table_from_report(path) -> dict[str, LaurentPoly]:
    obj = json.loads(Path(path).read_text())
    return {k: LaurentPoly.from_json(v) for k, v in obj.get("eigenfunctions", {}).items()}


def product_report(
    spec: FilterSpec,
    f1: str,
    f2: str,
    report_path=None,
    settings: Settings = Settings(),
    tol: float = 1e-6,
) -> dict:
    """``f1 * f2`` together with the pair table of the ``h_{C_i}``.

    Each table entry records the product and its largest coefficient
    deviation from ``delta_ij h_{C_i}``.
    """
    spec = filterlib.require_qmf(spec, settings.qmf_tol)
    cycles = cyc.find_cycles(spec, settings.cycle_tol, settings.p_max)
    op = transfer.build(spec)
    spectrum = peripheral.build_spectrum(op, cycles, settings.rank_tol, seed=None)
    table = eigenfunction_table(spectrum)
    if report_path is not None:
        table.update(table_from_report(report_path))
    h1 = resolve_function(f1, table)
    h2 = resolve_function(f2, table)
    prod = peripheral.transfer_product(op, spectrum, h1, h2)

    pairs = []
    worst = 0.0
    hs = spectrum.h_funcs
    for i, a in enumerate(hs):
        for j, b in enumerate(hs):
            p = peripheral.transfer_product(op, spectrum, a, b)
            expected = a if i == j else LaurentPoly.zero()
            dev = p.coeff_distance(expected)
            worst = max(worst, dev)
            pairs.append({"i": i + 1, "j": j + 1, "product": p.to_json(), "deviation": dev})
    return {
        "schema": SCHEMA,
        "filter": filterlib.to_json(spec),
        "f1": f1,
        "f2": f2,
        "product": prod.to_json(),
        "pair_table": pairs,
        "max_pair_deviation": worst,
        "tol": tol,
        "ok": worst <= tol,
        "provenance": {"tolerances": settings.tolerances(), "version": __version__},
    }
