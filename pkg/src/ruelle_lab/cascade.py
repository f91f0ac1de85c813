"""Time- and frequency-domain oracles: cascade iteration, correlation forms,
infinite products and their periodizations.

Grid functions are piecewise constant: ``samples[j]`` is the value on
``[origin + j*step, origin + (j+1)*step)`` with ``step = N**-L``.  On such
grids the cascade operator and the integer-shift correlations are computed
without discretization error, so the identity
``R(p(psi1, psi2)) = p(M_a psi1, M_a psi2)`` holds to roundoff.

Correlation convention: ``p(psi1, psi2) = sum_n z**n * int conj(psi1(x)) psi2(x + n) dx``.
With this sign the coefficient recursion under ``M_a`` is exactly the
matrix of ``R``; the opposite sign conjugates the recursion for complex
filters (they agree for real filters).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .cycles import Cycle
from .errors import GridMismatch
from .filterlib import FilterSpec
from .lpoly import TWO_PI, LaurentPoly, evaluate, rotate

ALIGN_TOL = 1e-9
TIME_DOMAIN_TOL = 1e-4
MAX_CYCLE_SCALE = 4096


@dataclass(frozen=True, eq=False)
class GridFunction:
    samples: np.ndarray
    origin: float
    step: float
    support_hint: tuple[float, float]

    def __post_init__(self):
        if not self.step > 0:
            raise GridMismatch(f"grid step must be positive, got {self.step!r}")
        if len(self.samples) < 1:
            raise GridMismatch("a grid function needs at least one sample")

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.step * np.arange(len(self.samples))

    def integral(self) -> complex:
        return complex(self.step * np.sum(self.samples))

    def l2_norm(self) -> float:
        return float(math.sqrt(self.step * np.sum(np.abs(self.samples) ** 2)))


def box(lo: float = 0.0, hi: float = 1.0, step: float = 1.0, height: Optional[float] = None) -> GridFunction:
    """Indicator of ``[lo, hi)`` scaled to unit integral unless ``height`` is given."""
    n = int(round((hi - lo) / step))
    if n < 1 or abs(n * step - (hi - lo)) > ALIGN_TOL:
        raise GridMismatch(f"[{lo}, {hi}) is not a union of grid cells of size {step}")
    h = 1.0 / (hi - lo) if height is None else height
    return GridFunction(np.full(n, h, dtype=complex), lo, step, (lo, hi))


def _level(step: float, N: int) -> int:
    L = round(-math.log(step) / math.log(N))
    if L < 0 or abs(step * N**L - 1.0) > ALIGN_TOL:
        raise GridMismatch(f"grid step {step!r} is not a power of 1/{N}")
    return L


def _cells(x: float, step: float) -> int:
    k = round(x / step)
    if abs(k * step - x) > ALIGN_TOL * max(1.0, abs(x)):
        raise GridMismatch(f"{x!r} is not a multiple of the grid step {step!r}")
    return k


def cascade_step(a: FilterSpec, psi: GridFunction) -> GridFunction:
    """``(M_a psi)(x) = sqrt(N) sum_n a_n psi(N x - n)`` on the grid refined by ``N``."""
    N = a.scale_N
    L = _level(psi.step, N)
    _cells(psi.origin, psi.step)
    m0 = a.m0
    n_min, n_max = m0.degree_min, m0.degree_max
    per_unit = N**L  # cells per unit length on the input grid
    length = len(psi.samples) + (n_max - n_min) * per_unit
    out = np.zeros(length, dtype=complex)
    scale = math.sqrt(N)
    for n, an in m0.items():
        off = (n - n_min) * per_unit
        out[off : off + len(psi.samples)] += scale * an * psi.samples
    lo, hi = psi.support_hint
    return GridFunction(
        out,
        (psi.origin + n_min) / N,
        psi.step / N,
        ((lo + n_min) / N, (hi + n_max) / N),
    )


def _upsample(psi: GridFunction, N: int) -> GridFunction:
    return GridFunction(np.repeat(psi.samples, N), psi.origin, psi.step / N, psi.support_hint)


def _common_frame(f: GridFunction, g: GridFunction):
    """Pad two grid functions with equal steps onto one index range."""
    if abs(f.step - g.step) > ALIGN_TOL * f.step:
        raise GridMismatch("grid functions have different steps")
    step = f.step
    i0f, i0g = _cells(f.origin, step), _cells(g.origin, step)
    lo = min(i0f, i0g)
    hi = max(i0f + len(f.samples), i0g + len(g.samples))
    F = np.zeros(hi - lo, dtype=complex)
    G = np.zeros(hi - lo, dtype=complex)
    F[i0f - lo : i0f - lo + len(f.samples)] = f.samples
    G[i0g - lo : i0g - lo + len(g.samples)] = g.samples
    return F, G, lo * step, step


def l2_distance(f: GridFunction, g: GridFunction) -> float:
    F, G, _, step = _common_frame(f, g)
    return float(math.sqrt(step * np.sum(np.abs(F - G) ** 2)))


def hull_box(a: FilterSpec) -> GridFunction:
    """Unit-integral box on ``[a_min/(N-1), a_max/(N-1)]``, rounded outward to
    integers when those endpoints are fractional."""
    N = a.scale_N
    lo = a.m0.degree_min / (N - 1)
    hi = a.m0.degree_max / (N - 1)
    lo_i, hi_i = math.floor(lo + 1e-12), math.ceil(hi - 1e-12)
    if hi_i <= lo_i:
        hi_i = lo_i + 1
    return box(float(lo_i), float(hi_i))


@dataclass(frozen=True, eq=False)
class CascadeRun:
    phi: GridFunction
    distances: tuple[float, ...]  # L2 distance between consecutive iterates


def cascade_fixed_point(
    a: FilterSpec,
    n_iter: Optional[int] = None,
    start: Union[str, GridFunction, None] = None,
) -> CascadeRun:
    """Run ``n_iter`` cascade steps (default: enough for a grid step of at
    most ``2**-12``, i.e. 12 steps at ``N = 2``).

    ``start`` is ``"hull"`` (default: the unit-integral box on the support
    hull of the limit), ``"box"`` (the unit box ``[0, 1)``) or a
    :class:`GridFunction` on an ``N``-adic grid.
    """
    if start is None or start == "hull":
        psi = hull_box(a)
    elif start == "box":
        psi = box(0.0, 1.0)
    elif isinstance(start, GridFunction):
        psi = start
    else:
        raise ValueError(f"unknown cascade start {start!r}")
    if n_iter is None:
        n_iter = default_levels(a.scale_N)
    dists = []
    for _ in range(n_iter):
        new = cascade_step(a, psi)
        dists.append(l2_distance(new, _upsample(psi, a.scale_N)))
        psi = new
    return CascadeRun(psi, tuple(dists))


def correlation_form(psi1: GridFunction, psi2: GridFunction, max_shift: Optional[int] = None) -> LaurentPoly:
    """``sum_n z**n int conj(psi1(x)) psi2(x + n) dx`` for ``|n| <= max_shift``."""
    F, G, _, step = _common_frame(psi1, psi2)
    per_unit = round(1.0 / step)
    if abs(per_unit * step - 1.0) > ALIGN_TOL:
        raise GridMismatch("integer shifts are not grid multiples")
    if max_shift is None:
        max_shift = math.ceil(len(F) / per_unit)
    coeffs = {}
    for n in range(-max_shift, max_shift + 1):
        s = n * per_unit
        if abs(s) >= len(F):
            continue
        if s >= 0:
            val = np.vdot(F[: len(F) - s], G[s:])
        else:
            val = np.vdot(F[-s:], G[: len(G) + s])
        coeffs[n] = step * val
    return LaurentPoly(coeffs)


def autocorrelation_h(phi: GridFunction, max_shift: Optional[int] = None) -> LaurentPoly:
    """The periodized ``|phi-hat|**2`` as a Laurent polynomial: its integer-shift
    autocorrelation ``A_n = int conj(phi(x)) phi(x + n) dx``."""
    if not np.any(phi.samples):
        return LaurentPoly.zero()
    return correlation_form(phi, phi, max_shift)


def write_csv(psi: GridFunction, path) -> None:
    """Samples as ``x, re, im`` rows (left cell endpoints)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for x, v in zip(psi.x, psi.samples):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


# ---------------------------------------------------------------------------
# infinite products
# ---------------------------------------------------------------------------

def iterated_filter(m0: LaurentPoly, N: int, p: int) -> LaurentPoly:
    """``m0(z) m0(z**N) ... m0(z**(N**(p-1)))``."""
    out = LaurentPoly.constant(1.0)
    for j in range(p):
        stretch = N**j
        out = out * LaurentPoly({k * stretch: c for k, c in m0.items()})
    return out


def cycle_filter(spec: FilterSpec, cycle: Cycle, k: int = 0) -> FilterSpec:
    """The scale-``N**p`` filter ``exp(-i theta_C) * m0^(p)(z_k z)`` whose
    trivial-cycle objects, rotated back by ``z_k``, are those of ``cycle``
    at its ``k``-th point (0-based)."""
    N, p = spec.scale_N, cycle.period
    mp = iterated_filter(spec.m0, N, p)
    rotated = rotate(mp, cycle.points[k])
    phase = complex(math.cos(cycle.theta_C), -math.sin(cycle.theta_C))
    return FilterSpec(N**p, rotated * phase, f"{spec.name}/cycle{p}@{k + 1}")


def _lipschitz_constant(m: LaurentPoly, M: int) -> float:
    """Bound on ``|d/dtheta m(e^{i theta})| / sqrt(M)``."""
    return sum(abs(k) * abs(c) for k, c in m.items()) / math.sqrt(M)


def phi_product(spec: FilterSpec, cycle: Cycle, k: int, x, K: int):
    """Truncated infinite product ``prod_{j=1..K} m'(exp(i x / M**j)) / sqrt(M)``
    for the cycle filter ``m'`` at scale ``M = N**p``.

    Returns ``(value, tail_bound)``; ``tail_bound`` bounds the distance to the
    full product as ``|value| * expm1(L |x| / (M**K (M - 1)))`` where ``L`` is
    a coefficient bound on the Lipschitz constant of ``m' / sqrt(M)`` (each
    factor has modulus at most 1 on the circle for QMF filters).
    """
    cf = cycle_filter(spec, cycle, k)
    M = cf.scale_N
    x = np.asarray(x, dtype=float)
    val = np.ones_like(x, dtype=complex)
    sM = math.sqrt(M)
    for j in range(1, K + 1):
        val = val * evaluate(cf.m0, np.exp(1j * x / M**j)) / sM
    L = _lipschitz_constant(cf.m0, M)
    bound = np.abs(val) * np.expm1(L * np.abs(x) / (M**K * (M - 1)))
    if val.ndim == 0:
        return complex(val), float(bound)
    return val, bound


@dataclass(frozen=True)
class ProbeResult:
    angle: float
    periodized: float
    eigenfunction: complex
    discrepancy: float
    tail_estimate: float
    truncation_bound: float

    @property
    def within_bound(self) -> bool:
        return self.discrepancy <= self.tail_estimate + self.truncation_bound + 1e-12

    def to_json(self):
        return {
            "angle": self.angle,
            "periodized": self.periodized,
            "eigenfunction": [self.eigenfunction.real, self.eigenfunction.imag],
            "discrepancy": self.discrepancy,
            "tail_estimate": self.tail_estimate,
            "truncation_bound": self.truncation_bound,
            "within_bound": self.within_bound,
        }


def periodized_square(spec: FilterSpec, cycle: Cycle, k: int, s: float, K: int, K_per: int):
    """``sum_{|j| <= K_per} |phi_k(s + 2 pi j)|**2`` with a tail estimate and a
    truncation bound.

    The tail is estimated as ``C * sum_{|j| > K_per} (s + 2 pi j)**-2`` with
    ``C`` the largest ``x**2 |phi(x)|**2`` over the outermost 64 samples on
    each side; it is an estimate, not a proof.
    """
    j = np.arange(-K_per, K_per + 1)
    x = s + TWO_PI * j
    vals, bounds = phi_product(spec, cycle, k, x, K)
    sq = np.abs(vals) ** 2
    per = float(np.sum(sq))
    band = min(64, K_per)
    edge = np.concatenate([np.arange(band), np.arange(len(j) - band, len(j))])
    C = float(np.max(x[edge] ** 2 * sq[edge]))
    a = abs(s)
    # sum_{j > K} 1/(2 pi j - a)**2 <= 1 / (2 pi (2 pi K - a)), both sides
    tail_sum = 2.0 / (TWO_PI * (TWO_PI * K_per - a))
    b = bounds / np.maximum(np.abs(vals), 1e-300)
    trunc = float(np.sum(sq * (2 * b + b * b)))
    return per, C * tail_sum, trunc


@dataclass(frozen=True)
class CrosscheckReport:
    cycle_index: int
    probes: tuple[tuple[ProbeResult, ...], ...]  # per cycle point k
    time_domain: tuple[float, ...]  # per cycle point: max coefficient discrepancy
    cascade_distances: tuple[tuple[float, ...], ...]
    skipped: bool = False

    @property
    def ok(self) -> bool:
        """Probes within their bounds and time-domain agreement to ``1e-4``."""
        return self.skipped or (self.probes_within_bounds and self.max_time_domain <= TIME_DOMAIN_TOL)

    @property
    def max_probe_discrepancy(self) -> float:
        return max((p.discrepancy for ps in self.probes for p in ps), default=0.0)

    @property
    def probes_within_bounds(self) -> bool:
        return all(p.within_bound for ps in self.probes for p in ps)

    @property
    def max_time_domain(self) -> float:
        return max(self.time_domain, default=0.0)

    def to_json(self):
        if self.skipped:
            return {"cycle": self.cycle_index + 1, "skipped": True, "ok": True}
        return {
            "cycle": self.cycle_index + 1,
            "skipped": False,
            "ok": self.ok,
            "time_domain_max_coeff_discrepancy": list(self.time_domain),
            "probes": [[p.to_json() for p in ps] for ps in self.probes],
            "probes_within_bounds": self.probes_within_bounds,
            "cascade_final_distance": [d[-1] if d else None for d in self.cascade_distances],
        }


def default_levels(M: int) -> int:
    """Cascade steps needed for a grid step of at most ``2**-12`` at scale ``M``."""
    return math.ceil(12 * math.log(2) / math.log(M) - 1e-12)


def time_domain_g(spec: FilterSpec, cycle: Cycle, k: int, n_iter: Optional[int] = None):
    """``g_{k}`` of ``cycle`` from the cascade: autocorrelation of the cascade
    limit of the cycle filter, rotated back by ``z_k``.  Returns
    ``(polynomial, cascade run)``."""
    cf = cycle_filter(spec, cycle, k)
    if n_iter is None:
        n_iter = default_levels(cf.scale_N)
    run = cascade_fixed_point(cf, n_iter)
    h = autocorrelation_h(run.phi)
    return rotate(h, cycle.points[k].conjugate()), run


def crosscheck_h(
    spec: FilterSpec,
    cycle_index: int,
    spectrum,
    K: int = 30,
    K_per: int = 2000,
    probe_angles: Sequence[float] = (0.1, 1.0, 2.5),
    time_domain: bool = True,
    max_scale: int = MAX_CYCLE_SCALE,
) -> CrosscheckReport:
    """Compare the spectrum's ``g_{k,i}`` with the cascade and product oracles.

    Cycles whose scale ``N**p`` exceeds ``max_scale`` are skipped: the
    iterated filter then has too many taps for a dense cascade.
    """
    cycle = spectrum.cycles[cycle_index]
    if spec.scale_N ** cycle.period > max_scale:
        return CrosscheckReport(cycle_index, (), (), (), skipped=True)
    gs = spectrum.g_funcs[cycle_index]
    probes, td, dists = [], [], []
    for k in range(cycle.period):
        g = gs[k]
        row = []
        for t in probe_angles:
            s = t - cycle.points[k].angle
            per, tail, trunc = periodized_square(spec, cycle, k, s, K, K_per)
            gv = complex(evaluate(g, complex(math.cos(t), math.sin(t))))
            row.append(ProbeResult(float(t), per, gv, abs(gv - per), tail, trunc))
        probes.append(tuple(row))
        if time_domain:
            g_td, run = time_domain_g(spec, cycle, k)
            td.append(g_td.coeff_distance(g))
            dists.append(run.distances)
    return CrosscheckReport(cycle_index, tuple(probes), tuple(td), tuple(dists))
