"""Wavelet filters: construction, JSON I/O and the standing QMF hypotheses."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .errors import (
    DegenerateInput,
    InvalidParam,
    ParseError,
    PreconditionFailed,
    SchemaError,
    UnknownFilter,
)
from .lpoly import LaurentPoly, cross_correlation, evaluate

QMF_TOL = 1e-10

_D4 = (
    0.48296291314453414,
    0.83651630373780791,
    0.22414386804201338,
    -0.12940952255126038,
)
_INV_SQRT2 = 0.70710678118654752


@dataclass(frozen=True)
class Validation:
    lipschitz_ok: bool
    finite_zeros_ok: bool
    qmf_ok: bool
    normalized_at_one_ok: bool
    qmf_residual: float
    normalization_residual: float
    tol: float

    @property
    def all_ok(self) -> bool:
        return (
            self.lipschitz_ok
            and self.finite_zeros_ok
            and self.qmf_ok
            and self.normalized_at_one_ok
        )

    def to_json(self):
        return {
            "lipschitz_ok": self.lipschitz_ok,
            "finite_zeros_ok": self.finite_zeros_ok,
            "qmf_ok": self.qmf_ok,
            "normalized_at_one_ok": self.normalized_at_one_ok,
            "qmf_residual": self.qmf_residual,
            "normalization_residual": self.normalization_residual,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class FilterSpec:
    """A candidate filter ``m0(z) = sum a_k z**k`` at scale ``N``."""

    scale_N: int
    m0: LaurentPoly
    name: str = "filter"
    validation: Optional[Validation] = None

    def __post_init__(self):
        if int(self.scale_N) != self.scale_N or self.scale_N < 2:
            raise SchemaError(f"scale N must be an integer >= 2, got {self.scale_N!r}")
        if self.m0.is_zero:
            raise DegenerateInput("m0 is the zero polynomial")

    def same_coefficients(self, other: "FilterSpec") -> bool:
        return self.scale_N == other.scale_N and self.m0 == other.m0


def qmf_residual(m0: LaurentPoly, N: int) -> float:
    """``max_m |c_{Nm} - delta_{m,0}|`` for the autocorrelation ``c`` of ``m0``;
    zero exactly when ``R 1 = 1``."""
    c = cross_correlation(m0, m0)
    worst = abs(c[0] - 1.0)
    for j, cj in c.items():
        if j != 0 and j % N == 0:
            worst = max(worst, abs(cj))
    return float(worst)


def validate(spec: FilterSpec, tol: float = QMF_TOL) -> FilterSpec:
    """Check the standing hypotheses on ``spec`` and return a copy carrying
    the result.  A nonzero trigonometric polynomial is automatically
    Lipschitz with finitely many zeros, so only the QMF identity and the
    normalization ``m0(1) = sqrt(N)`` can fail."""
    if spec.m0.is_zero:
        raise DegenerateInput("m0 is the zero polynomial")
    N = spec.scale_N
    q_res = qmf_residual(spec.m0, N)
    n_res = abs(evaluate(spec.m0, 1.0) - math.sqrt(N))
    val = Validation(
        lipschitz_ok=True,
        finite_zeros_ok=True,
        qmf_ok=q_res <= tol,
        normalized_at_one_ok=n_res <= tol,
        qmf_residual=q_res,
        normalization_residual=float(n_res),
        tol=tol,
    )
    return replace(spec, validation=val)


def require_qmf(spec: FilterSpec, tol: float = QMF_TOL) -> FilterSpec:
    """Validate if needed and raise :class:`PreconditionFailed` naming the
    first failed hypothesis."""
    if spec.validation is None or spec.validation.tol != tol:
        spec = validate(spec, tol)
    v = spec.validation
    if not v.qmf_ok:
        raise PreconditionFailed(
            f"filter {spec.name!r} fails R1 = 1 (QMF residual {v.qmf_residual:.3g} > {tol:g})"
        )
    if not v.normalized_at_one_ok:
        raise PreconditionFailed(
            f"filter {spec.name!r} fails m0(1) = sqrt(N) "
            f"(residual {v.normalization_residual:.3g} > {tol:g})"
        )
    return spec


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

BUILTINS = ("haar", "stretched_haar", "daubechies4")


def builtin(name: str, m: Optional[int] = None) -> FilterSpec:
    """Builtin filters at scale 2.

    ``haar`` is ``(1 + z)/sqrt(2)``; ``stretched_haar`` with odd ``m >= 3``
    (default 3) is ``(1 + z**m)/sqrt(2)``; ``daubechies4`` is the four-tap
    Daubechies filter on degrees 0..3.
    """
    if name == "haar":
        m0 = LaurentPoly({0: _INV_SQRT2, 1: _INV_SQRT2})
        label = "haar"
    elif name == "stretched_haar":
        m = 3 if m is None else m
        if int(m) != m or m < 3 or m % 2 == 0:
            raise InvalidParam(f"stretched_haar needs an odd m >= 3, got {m!r}")
        m0 = LaurentPoly({0: _INV_SQRT2, int(m): _INV_SQRT2})
        label = f"stretched_haar_{m}"
    elif name == "daubechies4":
        m0 = LaurentPoly(dict(enumerate(_D4)))
        label = "daubechies4"
    else:
        raise UnknownFilter(f"unknown builtin filter {name!r}; choose from {BUILTINS}")
    return validate(FilterSpec(2, m0, label))


def parse_builtin_ref(ref: str) -> Optional[FilterSpec]:
    """Resolve ``"haar"``, ``"daubechies4"``, ``"stretched_haar"`` or
    ``"stretched_haar:5"``; ``None`` if ``ref`` is not a builtin name."""
    name, _, param = ref.partition(":")
    if name not in BUILTINS:
        return None
    if param:
        try:
            return builtin(name, int(param))
        except ValueError as exc:
            raise InvalidParam(f"bad builtin parameter in {ref!r}") from exc
    return builtin(name)


# ---------------------------------------------------------------------------
# JSON files
# ---------------------------------------------------------------------------

def to_json(spec: FilterSpec) -> dict:
    dense = spec.m0.to_dense()
    return {
        "name": spec.name,
        "N": spec.scale_N,
        "offset": spec.m0.degree_min,
        "coeffs": [[float(c.real), float(c.imag)] for c in dense],
    }


def from_json(obj, source: str = "<object>") -> FilterSpec:
    if not isinstance(obj, dict):
        raise SchemaError(f"{source}: top level must be an object")
    missing = [k for k in ("name", "N", "offset", "coeffs") if k not in obj]
    if missing:
        raise SchemaError(f"{source}: missing field(s) {', '.join(missing)}")
    N, offset, coeffs = obj["N"], obj["offset"], obj["coeffs"]
    if not isinstance(N, int) or isinstance(N, bool):
        raise SchemaError(f"{source}: field 'N' must be an integer")
    if N < 2:
        raise SchemaError(f"{source}: field 'N' must be >= 2, got {N}")
    if not isinstance(offset, int) or isinstance(offset, bool):
        raise SchemaError(f"{source}: field 'offset' must be an integer")
    if not isinstance(coeffs, list) or not coeffs:
        raise SchemaError(f"{source}: field 'coeffs' must be a non-empty list")
    values = {}
    for j, pair in enumerate(coeffs):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
        ):
            raise SchemaError(f"{source}: coeffs[{j}] must be a [re, im] pair of numbers")
        values[offset + j] = complex(pair[0], pair[1])
    m0 = LaurentPoly(values)
    if m0.is_zero:
        raise SchemaError(f"{source}: all coefficients are zero")
    return FilterSpec(N, m0, str(obj["name"]))


def load(path) -> FilterSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_json(obj, str(path))


def save(spec: FilterSpec, path) -> None:
    Path(path).write_text(json.dumps(to_json(spec), indent=2) + "\n")
