"""The transfer (wavelet-Galerkin, Ruelle) operator on trigonometric polynomials.

For filters ``m0, m0'`` at scale ``N`` the operator

    (R f)(z) = 1/N * sum_{w**N = z} conj(m0(w)) m0'(w) f(w)

acts on coefficients by ``(R f)_m = sum_k c_{N m - k} f_k`` where ``c`` is the
cross-correlation of ``m0`` and ``m0'``: averaging ``w**l`` over the ``N``
preimages keeps ``z**(l/N)`` when ``N`` divides ``l`` and kills it otherwise.
So ``R f`` is "multiply by ``c``, keep every ``N``-th coefficient".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import NegativeWeight, ScaleMismatch, WindowTooSmall
from .filterlib import FilterSpec
from .lpoly import LaurentPoly, cross_correlation, evaluate, uniform_grid

CESARO_TOL = 1e-8
CESARO_NMAX = 4096


@dataclass(frozen=True, eq=False)
class TransferOperator:
    scale_N: int
    m0: LaurentPoly
    m0prime: LaurentPoly
    corr: LaurentPoly
    d_star: int
    d: int
    matrix: np.ndarray

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(-self.d, self.d + 1)

    @property
    def size(self) -> int:
        return 2 * self.d + 1

    def to_vector(self, f: LaurentPoly) -> np.ndarray:
        return f.to_dense(-self.d, self.d)

    def from_vector(self, v) -> LaurentPoly:
        return LaurentPoly.from_dense(v, -self.d)

    def in_window(self, f: LaurentPoly) -> bool:
        return f.is_zero or (f.degree_min >= -self.d and f.degree_max <= self.d)


def invariant_half_width(corr: LaurentPoly, N: int) -> int:
    """``ceil(G / (N - 1))`` with ``G`` the largest |degree| of ``corr``; the
    window ``[-d, d]`` is closed under ``R`` for every ``d`` at least this."""
    return -(-corr.half_width // (N - 1))


def window_matrix(corr: LaurentPoly, N: int, d: int) -> np.ndarray:
    degs = np.arange(-d, d + 1)
    A = np.zeros((degs.size, degs.size), dtype=complex)
    for i, m in enumerate(degs):
        for j, k in enumerate(degs):
            A[i, j] = corr[N * m - k]
    return A


def _filter_poly(f: Union[FilterSpec, LaurentPoly]) -> LaurentPoly:
    return f.m0 if isinstance(f, FilterSpec) else f


def build(
    m0: Union[FilterSpec, LaurentPoly],
    m0prime: Union[FilterSpec, LaurentPoly, None] = None,
    d: Optional[int] = None,
    N: Optional[int] = None,
) -> TransferOperator:
    """Assemble ``R_{m0, m0'}``; ``m0prime`` defaults to ``m0``.

    ``N`` is taken from the filter specs; it must be given explicitly when
    both filters are bare polynomials.
    """
    if m0prime is None:
        m0prime = m0
    scales = {f.scale_N for f in (m0, m0prime) if isinstance(f, FilterSpec)}
    if N is not None:
        scales.add(N)
    if len(scales) != 1:
        raise ScaleMismatch(f"filters disagree on the scale: {sorted(scales)}")
    N = scales.pop()
    a, b = _filter_poly(m0), _filter_poly(m0prime)
    corr = cross_correlation(a, b)
    d_star = invariant_half_width(corr, N)
    if d is None:
        d = d_star
    elif d < d_star:
        raise WindowTooSmall(f"window half-width {d} < invariant half-width {d_star}")
    return TransferOperator(N, a, b, corr, d_star, d, window_matrix(corr, N, d))


def apply(op: TransferOperator, f: LaurentPoly) -> LaurentPoly:
    """``R f`` for any Laurent polynomial ``f``."""
    if f.is_zero:
        return f
    prod = op.corr * f
    if prod.is_zero:
        return prod
    N = op.scale_N
    lo = -((-prod.degree_min) // N)  # ceil
    hi = prod.degree_max // N
    return LaurentPoly({m: prod[N * m] for m in range(lo, hi + 1)})


def _enter_window(op: TransferOperator, f: LaurentPoly, n: int):
    """Apply ``R`` until ``f`` sits in the window; returns (poly, steps used)."""
    k = 0
    while k < n and not op.in_window(f):
        f = apply(op, f)
        k += 1
    return f, k


def iterate(op: TransferOperator, f: LaurentPoly, n: int) -> LaurentPoly:
    """``R**n f``; the window matrix takes over once the support fits."""
    if n < 0:
        raise ValueError("n must be >= 0")
    f, k = _enter_window(op, f, n)
    if k == n:
        return f
    v = op.to_vector(f)
    for _ in range(n - k):
        v = op.matrix @ v
    return op.from_vector(v)


def orbit(op: TransferOperator, f: LaurentPoly, n: int) -> np.ndarray:
    """Window vectors of ``R**k f`` for ``k = 0..n`` (row ``k``).

    Rows for the few steps spent outside the window are truncated to it,
    so callers that need exact values should pass ``f`` already in the window.
    """
    out = np.empty((n + 1, op.size), dtype=complex)
    g = f
    k = 0
    while k <= n and not op.in_window(g):
        out[k] = op.to_vector(g)
        g = apply(op, g)
        k += 1
    if k <= n:
        v = op.to_vector(g)
        out[k] = v
        for j in range(k + 1, n + 1):
            v = op.matrix @ v
            out[j] = v
    return out


def grid_matrix(op: TransferOperator, grid_size: int = 1024) -> np.ndarray:
    """Evaluation matrix: window coefficients -> values on the uniform grid."""
    z = uniform_grid(grid_size)
    return z[:, None] ** op.degrees[None, :]


# ---------------------------------------------------------------------------
# Cesaro projections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CesaroResult:
    poly: LaurentPoly
    n_terms: int
    converged: bool
    distance: float
    eig_residual: float


def _as_unimodular(lam) -> complex:
    if hasattr(lam, "numerator") and hasattr(lam, "denominator"):
        # a Fraction a/b stands for exp(2 pi i a/b)
        t = 2.0 * math.pi * float(lam)
        return complex(math.cos(t), math.sin(t))
    return complex(lam)


def cesaro_project(
    op: TransferOperator,
    f: LaurentPoly,
    lam,
    n_max: int = CESARO_NMAX,
    tol: float = CESARO_TOL,
    period: int = 1,
    extrapolate: bool = True,
    grid_size: int = 1024,
) -> CesaroResult:
    """Spectral projection ``T_lam f = lim (1/n) sum_{k=1..n} lam**-k R**k f``.

    The Cesaro means ``A_n`` converge only like ``1/n``.  With
    ``extrapolate`` (the default) the estimate is ``2 A_{2n} - A_n``, the
    mean over ``k = n+1..2n``; the transient part then decays geometrically
    and the other unimodular eigenvalues cancel exactly whenever ``n`` is a
    multiple of their order relative to ``lam``.  ``n`` runs over
    ``period * 2**j``; pass the lcm of the cycle periods as ``period``.

    Successive estimates are compared in sup norm on a uniform grid; the
    first one within ``tol`` of its predecessor is returned.  Reaching
    ``n_max`` returns the last estimate with ``converged=False``.
    """
    lam_c = _as_unimodular(lam)
    if abs(abs(lam_c) - 1.0) > 1e-12:
        raise ValueError(f"|lambda| must be 1, got {abs(lam_c)!r}")
    if f.is_zero:
        return CesaroResult(LaurentPoly.zero(), 0, True, 0.0, 0.0)

    # move f into the window first; T_lam(f) = lam**-k T_lam(R**k f)
    g, k0 = _enter_window(op, f, 10_000)
    shift = lam_c ** (-k0)
    V = grid_matrix(op, grid_size)

    v = op.to_vector(g) * shift
    A = op.matrix / lam_c
    sums = [np.zeros_like(v)]  # sums[k] = sum_{j=1..k} lam**-j R**j g
    n = period
    prev_est = None
    dist = math.inf
    converged = False
    while True:
        while len(sums) <= 2 * n:
            v = A @ v
            sums.append(sums[-1] + v)
        if extrapolate:
            est = (sums[2 * n] - sums[n]) / n
            ref = prev_est
        else:
            est = sums[2 * n] / (2 * n)
            ref = sums[n] / n
        if ref is not None:
            dist = float(np.max(np.abs(V @ (est - ref))))
            if dist <= tol:
                converged = True
                break
        if 4 * n > n_max:
            break
        prev_est = est
        n *= 2
    poly = op.from_vector(est)
    eig_res = float(np.max(np.abs(V @ (op.matrix @ est - lam_c * est))))
    return CesaroResult(poly, 2 * n, converged, dist, eig_res)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def estimate_residual_decay(
    op: TransferOperator,
    spectrum,
    trials: int = 16,
    n: int = 60,
    seed: int = 0,
) -> float:
    """Empirical decay ratio of the non-peripheral part ``S**n f``.

    For ``trials`` random window polynomials (fixed ``seed``) the residual
    ``R**k f - sum_lam lam**k T_lam f`` is tracked for ``k <= n``; per trial
    the geometric-mean ratio ``(|r_b| / |r_a|)**(1/(b - a))`` over the second
    half of the run (stopping where the residual reaches roundoff) is
    taken, and the maximum over trials is returned.  A value below 1 means
    no unimodular eigenvalue was missed by ``spectrum``.

    ``spectrum`` must provide ``eigenvalue_values()`` and ``project(f, lam)``.
    """
    rng = np.random.default_rng(seed)
    lams = spectrum.eigenvalue_values()
    worst = 0.0
    for _ in range(trials):
        v0 = rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size)
        f = op.from_vector(v0)
        periph = [(lam, op.to_vector(spectrum.project(f, lam))) for lam in lams]
        norms = []
        v = v0.copy()
        for k in range(n + 1):
            r = v - sum(lam**k * p for lam, p in periph)
            norms.append(float(np.linalg.norm(r)))
            v = op.matrix @ v
        floor = 1e-12 * max(norms[0], 1e-300)
        usable = [k for k, x in enumerate(norms) if x > floor]
        if not usable:
            continue
        b = usable[-1]
        # the run must be contiguous above the floor up to b
        a = b // 2
        if b == 0 or norms[a] <= floor:
            continue
        ratio = (norms[b] / norms[a]) ** (1.0 / (b - a))
        worst = max(worst, ratio)
    return worst


def schwarz_slack(
    op: TransferOperator,
    xi: LaurentPoly,
    h: LaurentPoly,
    n: int,
    grid_size: int = 1024,
) -> float:
    """``min over the grid of R**n(|xi|**2 h) h - |R**n(xi h)|**2``.

    Raises :class:`NegativeWeight` if ``h`` dips below ``-1e-10``.
    """
    z = uniform_grid(grid_size)
    hv = evaluate(h, z)
    if np.min(hv.real) < -1e-10:
        raise NegativeWeight(f"weight h reaches {np.min(hv.real):.3g} on the grid")
    lhs = np.abs(evaluate(iterate(op, xi * h, n), z)) ** 2
    xi_sq = xi * xi.conj_reflect()
    rhs = (evaluate(iterate(op, xi_sq * h, n), z) * hv).real
    return float(np.min(rhs - lhs))


def schwarz_check(
    op: TransferOperator,
    xi: LaurentPoly,
    h: LaurentPoly,
    n: int,
    grid_size: int = 1024,
) -> bool:
    """Pointwise ``|R**n(xi h)|**2 <= R**n(|xi|**2 h) * h`` up to 1e-9."""
    return schwarz_slack(op, xi, h, n, grid_size) >= -1e-9
