"""Peripheral spectrum of the transfer operator, built cycle-first.

Every unimodular eigenvalue is a ``p_i``-th root of unity for some cycle
period ``p_i``.  For each candidate ``lam`` the eigenspace is computed on the
invariant window and normalized against the point-mass functionals

    nu_i^lam(f) = 1/p_i * sum_k lam**(k-1) f(z_{k,i}),

giving the dual basis ``h^lam_{C_i}``.  The per-point functions ``g_{k,i}``
follow by a finite inverse DFT over the ``p_i``-th roots of unity, and
``h_{C_i} = sum_k g_{k,i}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .cycles import Cycle, cohen_holds
from .errors import (
    DimensionMismatch,
    EigenvalueMismatch,
    IllConditioned,
    NotAFixedPoint,
    NotConverged,
    NotCycleConstant,
)
from .lpoly import LaurentPoly, evaluate, sum_polys, uniform_grid
from .transfer import (
    TransferOperator,
    apply,
    cesaro_project,
    estimate_residual_decay,
    grid_matrix,
)

RANK_TOL = 1e-9
GRAM_COND_MAX = 1e8


def root_of_unity(fr: Fraction) -> complex:
    """``exp(2 pi i fr)``."""
    t = 2.0 * math.pi * float(fr)
    return complex(math.cos(t), math.sin(t))


def _lam_value(lam) -> complex:
    if isinstance(lam, Fraction):
        return root_of_unity(lam)
    return complex(lam)


def _divides_order(lam: Fraction, p: int) -> bool:
    return (lam * p).denominator == 1


@dataclass(frozen=True)
class SpectrumDiagnostics:
    nu_gram_condition: float
    residual_decay: Optional[float]
    eigenspace_dims: Mapping[Fraction, int]
    gram_conditions: Mapping[Fraction, float] = field(default_factory=dict)
    max_eig_residual: float = 0.0
    decay_seed: Optional[int] = None


@dataclass(frozen=True, eq=False)
class PeripheralSpectrum:
    """Peripheral eigen-data.  Cycle indices are 0-based in the containers;
    ``g_funcs[i][k]`` is ``g_{k+1, i+1}`` in one-based notation."""

    operator: TransferOperator
    cycles: tuple[Cycle, ...]
    eigenvalues: tuple[Fraction, ...]
    g_funcs: tuple[tuple[LaurentPoly, ...], ...]
    h_funcs: tuple[LaurentPoly, ...]
    h_lambda: Mapping[tuple[Fraction, int], LaurentPoly]
    diagnostics: SpectrumDiagnostics

    def eigenvalue_values(self) -> list[complex]:
        return [root_of_unity(lam) for lam in self.eigenvalues]

    def cycles_for(self, lam) -> list[int]:
        """Indices ``i`` with ``lam**p_i = 1``."""
        fr = _as_fraction(lam)
        if fr is None:
            return []
        return [i for i, c in enumerate(self.cycles) if _divides_order(fr, c.period)]

    def project(self, f: LaurentPoly, lam) -> LaurentPoly:
        """``T_lam f = sum_i nu_i^lam(f) h^lam_{C_i}`` (zero off the spectrum)."""
        fr = _as_fraction(lam)
        if fr is None or fr not in self.eigenvalues:
            return LaurentPoly.zero()
        return sum_polys(
            nu_apply(self.cycles[i], fr, f) * self.h_lambda[(fr, i)]
            for i in self.cycles_for(fr)
        )


def _as_fraction(lam) -> Optional[Fraction]:
    """Recover ``a/b`` from ``lam = exp(2 pi i a/b)`` when ``b <= 10**6``."""
    if isinstance(lam, Fraction):
        return lam % 1
    z = complex(lam)
    x = (math.atan2(z.imag, z.real) / (2 * math.pi)) % 1.0
    fr = Fraction(x).limit_denominator(10**6)
    if abs(root_of_unity(fr) - z) > 1e-10:
        return None
    return fr % 1


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def candidate_eigenvalues(cycles: Sequence[Cycle]) -> list[Fraction]:
    """Union over cycles of the ``p_i``-th roots of unity, as angle fractions."""
    out = {Fraction(j, c.period) for c in cycles for j in range(c.period)}
    return sorted(out)


def eigenspace(op: TransferOperator, lam, rank_tol: float = RANK_TOL) -> list[LaurentPoly]:
    """Basis of ``null(A - lam I)`` for the window matrix ``A``.

    Singular vectors with singular value ``<= rank_tol * max(1, sigma_max)``
    are kept; each has residual ``|(A - lam I) v| <= rank_tol * |v|`` up to
    the same scale.  Returns ``[]`` when ``lam`` is not an eigenvalue.
    """
    lam_c = _lam_value(lam)
    M = op.matrix - lam_c * np.eye(op.size)
    _, s, vh = np.linalg.svd(M)
    cutoff = rank_tol * max(1.0, float(s[0]))
    null = [vh[j].conj() for j in range(len(s)) if s[j] <= cutoff]
    return [op.from_vector(v) for v in null]


def nu_apply(cycle: Cycle, lam, f: LaurentPoly) -> complex:
    """``1/p * sum_k lam**(k-1) f(z_k)``; needs ``lam**p = 1``."""
    lam_c = _lam_value(lam)
    p = cycle.period
    if abs(lam_c**p - 1.0) > 1e-10:
        raise EigenvalueMismatch(f"lambda**{p} = {lam_c**p:.3g} != 1 for a period-{p} cycle")
    return sum(lam_c**k * evaluate(f, z) for k, z in enumerate(cycle.points)) / p


def build_spectrum(
    op: TransferOperator,
    cycles: Sequence[Cycle],
    rank_tol: float = RANK_TOL,
    seed: Optional[int] = 0,
    decay_trials: int = 16,
    decay_n: int = 60,
) -> PeripheralSpectrum:
    """Assemble eigenvalues, ``h^lam``, ``g_{k,i}`` and ``h_{C_i}``.

    Raises :class:`DimensionMismatch` when an eigenspace dimension differs
    from the number of cycles whose period ``lam`` divides, and
    :class:`IllConditioned` when a normalization system has condition
    number above 1e8.  With ``seed=None`` the residual-decay estimate is
    skipped.
    """
    cycles = tuple(cycles)
    lams = candidate_eigenvalues(cycles)
    h_lambda: dict[tuple[Fraction, int], LaurentPoly] = {}
    dims: dict[Fraction, int] = {}
    conds: dict[Fraction, float] = {}
    max_res = 0.0
    for lam in lams:
        lam_c = root_of_unity(lam)
        basis = eigenspace(op, lam, rank_tol)
        members = [i for i, c in enumerate(cycles) if _divides_order(lam, c.period)]
        dims[lam] = len(basis)
        if len(basis) != len(members):
            raise DimensionMismatch(
                f"eigenvalue exp(2 pi i {lam}) has a {len(basis)}-dimensional eigenspace "
                f"but {len(members)} cycle(s) with lambda**p = 1"
            )
        gram = np.array([[nu_apply(cycles[i], lam, v) for v in basis] for i in members])
        cond = float(np.linalg.cond(gram))
        conds[lam] = cond
        if not cond <= GRAM_COND_MAX:
            raise IllConditioned(f"nu-normalization for exp(2 pi i {lam}) has condition {cond:.3g}")
        V = np.array([op.to_vector(v) for v in basis]).T  # columns
        H = V @ np.linalg.inv(gram)  # nu_j(H[:, i]) = delta_ij
        for col, i in enumerate(members):
            h = H[:, col]
            max_res = max(max_res, float(np.linalg.norm(op.matrix @ h - lam_c * h)))
            h_lambda[(lam, i)] = op.from_vector(h)

    g_funcs = []
    h_funcs = []
    for i, c in enumerate(cycles):
        p = c.period
        gs = []
        for k in range(p):
            acc = np.zeros(op.size, dtype=complex)
            for j in range(p):
                lam = Fraction(j, p)
                acc += root_of_unity(lam) ** k * op.to_vector(h_lambda[(lam, i)])
            gs.append(op.from_vector(acc / p))
        g_funcs.append(tuple(gs))
        h_funcs.append(sum_polys(gs))

    diag = SpectrumDiagnostics(
        nu_gram_condition=max(conds.values()),
        residual_decay=None,
        eigenspace_dims=dims,
        gram_conditions=conds,
        max_eig_residual=max_res,
        decay_seed=seed,
    )
    spectrum = PeripheralSpectrum(
        op, cycles, tuple(lams), tuple(g_funcs), tuple(h_funcs), h_lambda, diag
    )
    if seed is not None:
        decay = estimate_residual_decay(op, spectrum, trials=decay_trials, n=decay_n, seed=seed)
        spectrum = replace(spectrum, diagnostics=replace(diag, residual_decay=decay))
    return spectrum


# ---------------------------------------------------------------------------
# fixed points and their algebra
# ---------------------------------------------------------------------------

def _fixed_point_defect(op: TransferOperator, h: LaurentPoly, grid_size: int = 1024) -> float:
    return (apply(op, h) - h).sup_norm(grid_size)


@dataclass(frozen=True)
class Decomposition:
    alphas: tuple[complex, ...]
    constancy: tuple[float, ...]
    residual: float


def decompose_fixed_point(
    spectrum: PeripheralSpectrum, h: LaurentPoly, tol: float = 1e-8
) -> Decomposition:
    """Write a fixed point as ``h = sum_i alpha_i h_{C_i}`` with ``alpha_i = h`` on ``C_i``."""
    defect = _fixed_point_defect(spectrum.operator, h)
    if defect > tol:
        raise NotAFixedPoint(f"|R h - h| = {defect:.3g} > {tol:g}")
    alphas, spreads = [], []
    for c in spectrum.cycles:
        vals = [evaluate(h, z) for z in c.points]
        spread = max(abs(v - vals[0]) for v in vals)
        if spread > tol:
            raise NotCycleConstant(f"h varies by {spread:.3g} along a period-{c.period} cycle")
        alphas.append(vals[0])
        spreads.append(float(spread))
    recon = sum_polys(a * hc for a, hc in zip(alphas, spectrum.h_funcs))
    return Decomposition(tuple(alphas), tuple(spreads), (h - recon).sup_norm())


def transfer_product(
    op: TransferOperator,
    spectrum: PeripheralSpectrum,
    h1: LaurentPoly,
    h2: LaurentPoly,
    tol: float = 1e-9,
    n_max: int = 8192,
    grid_size: int = 1024,
) -> LaurentPoly:
    """``h1 * h2 = lim_n R**n (h1 h2)`` for fixed points ``h1, h2``.

    The limit is uniform and geometric; iteration stops when successive
    iterates agree to ``tol`` in sup norm on the grid.
    """
    for name, h in (("h1", h1), ("h2", h2)):
        defect = _fixed_point_defect(op, h, grid_size)
        if defect > 1e-8:
            raise NotAFixedPoint(f"{name} is not fixed by R (defect {defect:.3g})")
    f = h1 * h2
    k = 0
    while not op.in_window(f):
        f = apply(op, f)
        k += 1
    V = grid_matrix(op, grid_size)
    v = op.to_vector(f)
    dist = math.inf
    while k < n_max:
        w = op.matrix @ v
        k += 1
        dist = float(np.max(np.abs(V @ (w - v))))
        v = w
        if dist <= tol:
            return op.from_vector(v)
    raise NotConverged(f"R**n(h1 h2) still moving by {dist:.3g} after {n_max} steps")


def product_table(op: TransferOperator, spectrum: PeripheralSpectrum) -> list[list[LaurentPoly]]:
    """``h_{C_i} * h_{C_j}`` for all pairs."""
    hs = spectrum.h_funcs
    return [[transfer_product(op, spectrum, a, b) for b in hs] for a in hs]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def lawton_cohen_report(spectrum: PeripheralSpectrum) -> dict:
    cycles = list(spectrum.cycles)
    cohen = cohen_holds(cycles)
    lawton = spectrum.diagnostics.eigenspace_dims.get(Fraction(0), 0) == 1
    return {
        "cohen_holds": cohen,
        "lawton_holds": lawton,
        "equivalent": cohen == lawton,
        "n_cycles": len(cycles),
        "periods": [c.period for c in cycles],
        "peripheral_eigenvalues": [[lam.numerator, lam.denominator] for lam in spectrum.eigenvalues],
        "eigenspace_dims": {
            f"{lam.numerator}/{lam.denominator}": d
            for lam, d in spectrum.diagnostics.eigenspace_dims.items()
        },
    }


VERIFY_THRESHOLDS = {
    "rotation": 1e-10,
    "point_values": 1e-9,
    "nonnegativity": 1e-8,
    "vanishing": 1e-9,
    "cesaro": 1e-6,
    "nu_equivariance": 1e-10,
    "partition_of_unity": 1e-8,
}


@dataclass(frozen=True)
class VerificationReport:
    residuals: Mapping[str, float]
    thresholds: Mapping[str, float]
    cesaro_converged: bool

    @property
    def passed(self) -> Mapping[str, bool]:
        return {k: self.residuals[k] <= self.thresholds[k] for k in self.residuals}

    @property
    def ok(self) -> bool:
        # an unconverged Cesaro estimate shows up in the "cesaro" residual;
        # the flag itself is diagnostic (slow non-peripheral decay)
        return all(self.passed.values())

    def to_json(self):
        return {
            "residuals": dict(self.residuals),
            "thresholds": dict(self.thresholds),
            "passed": dict(self.passed),
            "cesaro_converged": self.cesaro_converged,
            "ok": self.ok,
        }


def random_window_polys(op: TransferOperator, count: int, seed: int) -> list[LaurentPoly]:
    rng = np.random.default_rng(seed)
    return [
        op.from_vector(rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size))
        for _ in range(count)
    ]


def verify_spectrum(
    op: TransferOperator,
    spectrum: PeripheralSpectrum,
    grid_size: int = 1024,
    n_random: int = 16,
    seed: int = 0,
    cesaro_tol: float = 1e-12,
    thresholds: Optional[Mapping[str, float]] = None,
) -> VerificationReport:
    """Residuals of the defining identities of the peripheral data.

    rotation            R g_{k,i} = g_{k+1,i} (indices mod p_i)
    point_values        g_{k,i}(z_{l,j}) = delta_ij delta_kl
    nonnegativity       h_{C_i} >= 0 on the grid (amount below zero)
    vanishing           h_{C_i} = 0 on the other cycles
    cesaro              Cesaro projection = sum_i nu_i^lam(f) h^lam_{C_i}
    nu_equivariance     nu_i^lam(R f) = lam nu_i^lam(f)
    partition_of_unity  sum_i h_{C_i} = 1
    """
    cycles = spectrum.cycles
    z = uniform_grid(grid_size)
    res = {}

    worst = 0.0
    for gs in spectrum.g_funcs:
        p = len(gs)
        for k in range(p):
            worst = max(worst, (apply(op, gs[k]) - gs[(k + 1) % p]).sup_norm(grid_size))
    res["rotation"] = worst

    worst = 0.0
    for i, gs in enumerate(spectrum.g_funcs):
        for k, g in enumerate(gs):
            for j, c in enumerate(cycles):
                for l, pt in enumerate(c.points):
                    target = 1.0 if (i, k) == (j, l) else 0.0
                    worst = max(worst, abs(evaluate(g, pt) - target))
    res["point_values"] = worst

    neg, vanish = 0.0, 0.0
    for i, h in enumerate(spectrum.h_funcs):
        neg = max(neg, -float(np.min(evaluate(h, z).real)))
        for j, c in enumerate(cycles):
            if j != i:
                vanish = max(vanish, max(abs(evaluate(h, pt)) for pt in c.points))
    res["nonnegativity"] = max(neg, 0.0)
    res["vanishing"] = vanish

    period = math.lcm(*(c.period for c in cycles))
    fs = random_window_polys(op, n_random, seed)
    worst_ces, worst_nu = 0.0, 0.0
    all_conv = True
    for f in fs:
        Rf = apply(op, f)
        for lam in spectrum.eigenvalues:
            lam_c = root_of_unity(lam)
            ces = cesaro_project(op, f, lam, tol=cesaro_tol, period=period)
            all_conv = all_conv and ces.converged
            worst_ces = max(worst_ces, (ces.poly - spectrum.project(f, lam)).sup_norm(grid_size))
            for i in spectrum.cycles_for(lam):
                c = cycles[i]
                worst_nu = max(worst_nu, abs(nu_apply(c, lam, Rf) - lam_c * nu_apply(c, lam, f)))
    res["cesaro"] = worst_ces
    res["nu_equivariance"] = worst_nu

    res["partition_of_unity"] = (sum_polys(spectrum.h_funcs) - 1.0).sup_norm(grid_size)

    th = dict(VERIFY_THRESHOLDS)
    if thresholds:
        th.update(thresholds)
    return VerificationReport(res, th, all_conv)
