"""Cycles of a filter: finite orbits of ``z -> z**N`` on which ``|m0| = sqrt(N)``.

Detection is root-first.  Under ``R 1 = 1`` we have ``|m0|**2 <= N`` on the
circle, so every cycle point is a (multiple) root of ``|m0|**2 - N``; the
roots found on the circle are grouped into orbits of the ``N``-th power map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import OrbitEscape
from .filterlib import FilterSpec, require_qmf
from .lpoly import (
    TWO_PI,
    CirclePoint,
    LaurentPoly,
    cross_correlation,
    derivative_t,
    evaluate,
    unit_circle_roots,
)

CYCLE_TOL = 1e-8
NEAR_CYCLE_TOL = 1e-3
ORBIT_MATCH_TOL = 1e-10
ROOT_MATCH_TOL = 1e-6


@dataclass(frozen=True)
class Cycle:
    points: tuple[CirclePoint, ...]
    phases: tuple[float, ...]

    @property
    def period(self) -> int:
        return len(self.points)

    @property
    def theta_C(self) -> float:
        return float(sum(self.phases))

    @property
    def is_trivial(self) -> bool:
        return self.period == 1 and self.points[0].rational_angle == (0, 1)

    def to_json(self):
        return {
            "period": self.period,
            "points": [p.to_json() for p in self.points],
            "phases": list(self.phases),
            "theta_C": self.theta_C,
            "is_trivial": self.is_trivial,
        }


def default_p_max(N: int) -> int:
    """Largest ``p`` with ``N**p <= 2**20``."""
    p = 1
    while N ** (p + 1) <= 2**20:
        p += 1
    return p


def orbit_closure(z: CirclePoint, N: int, p_max: int) -> Optional[tuple[int, list[CirclePoint]]]:
    """Minimal period of ``z`` under ``z -> z**N`` if it is ``<= p_max``.

    Rational angles are iterated exactly; otherwise points are compared
    within ``1e-10`` (relaxed by the ``N**k`` growth of roundoff).
    """
    if z.rational_angle is not None:
        a, b = z.rational_angle
        orbit = [z]
        x = a
        for _ in range(p_max):
            x = (x * N) % b
            if x == a:
                return len(orbit), orbit
            orbit.append(CirclePoint.from_rational(x, b))
        return None

    orbit = [z]
    t = z.angle
    for k in range(1, p_max + 1):
        t = math.fmod(t * N, TWO_PI)
        gap = abs(t - z.angle)
        gap = min(gap, TWO_PI - gap)
        if gap <= max(ORBIT_MATCH_TOL, 1e-15 * N**k):
            return k, orbit
        orbit.append(CirclePoint.from_angle(t))
    return None


def modulus_defect(m0: LaurentPoly, N: int) -> LaurentPoly:
    """The Laurent polynomial ``|m0|**2 - N`` (nonpositive on the circle for QMF filters)."""
    return cross_correlation(m0, m0) - N


def _phase(m0: LaurentPoly, z: CirclePoint) -> float:
    return math.atan2(evaluate(m0, z).imag, evaluate(m0, z).real)


def _make_cycle(m0: LaurentPoly, orbit: list[CirclePoint]) -> Cycle:
    # start at the smallest angle; keep the z -> z**N order
    start = min(range(len(orbit)), key=lambda j: orbit[j].angle)
    pts = tuple(orbit[start:] + orbit[:start])
    return Cycle(pts, tuple(_phase(m0, z) for z in pts))


def find_cycles(
    spec: FilterSpec,
    cycle_tol: float = CYCLE_TOL,
    p_max: Optional[int] = None,
    strict: bool = True,
) -> list[Cycle]:
    """All cycles of ``spec.m0`` with period ``<= p_max``, trivial cycle first.

    A root of ``|m0|**2 - N`` whose orbit does not close within ``p_max``
    steps, or leaves the set where ``|m0| = sqrt(N)``, raises
    :class:`OrbitEscape` unless ``strict`` is false (the root is then
    skipped).
    """
    spec = require_qmf(spec)
    N, m0 = spec.scale_N, spec.m0
    if p_max is None:
        p_max = default_p_max(N)
    root_n = math.sqrt(N)
    defect = modulus_defect(m0, N)
    roots = unit_circle_roots(defect, tol=cycle_tol, snap_den_max=N**p_max - 1)

    def on_max(z: CirclePoint) -> bool:
        return abs(abs(evaluate(m0, z)) - root_n) <= cycle_tol

    assigned = [False] * len(roots)
    cycles = []
    for idx, root in enumerate(roots):
        if assigned[idx]:
            continue
        found = orbit_closure(root.point, N, p_max)
        if found is None:
            if strict:
                raise OrbitEscape(
                    f"orbit of root at angle {root.point.angle:.12g} does not close "
                    f"within {p_max} steps",
                    [root.point],
                )
            assigned[idx] = True
            continue
        _, orbit = found
        bad = [z for z in orbit if not on_max(z)]
        if bad:
            if strict:
                raise OrbitEscape(
                    f"orbit of root at angle {root.point.angle:.12g} leaves the set |m0| = sqrt(N)",
                    orbit,
                )
            assigned[idx] = True
            continue
        for z in orbit:
            for j, other in enumerate(roots):
                if not assigned[j] and abs(other.point.value - z.value) <= ROOT_MATCH_TOL:
                    assigned[j] = True
        cycles.append(_make_cycle(m0, orbit))

    cycles.sort(key=lambda c: (not c.is_trivial, c.period, c.points[0].angle))
    return cycles


def cohen_holds(cycles: list[Cycle]) -> bool:
    """No nontrivial cycles: exactly one cycle and it is ``{1}``."""
    return len(cycles) == 1 and cycles[0].is_trivial


@dataclass(frozen=True)
class NearCycle:
    point: CirclePoint
    deficit: float  # sqrt(N) - |m0(z)|
    period: Optional[int]


def near_cycle_report(
    spec: FilterSpec,
    cycles: list[Cycle],
    near_tol: float = NEAR_CYCLE_TOL,
    p_max: Optional[int] = None,
) -> list[NearCycle]:
    """Local maxima of ``|m0|`` within ``near_tol`` of ``sqrt(N)`` that are not
    cycle points.  Such points slow down Cesaro convergence."""
    N, m0 = spec.scale_N, spec.m0
    if p_max is None:
        p_max = default_p_max(N)
    defect = modulus_defect(m0, N)
    crit = derivative_t(defect)
    if crit.is_zero:
        return []
    cycle_pts = [z.value for c in cycles for z in c.points]
    out = []
    for root in unit_circle_roots(crit, tol=1e-6):
        z = root.point
        if any(abs(z.value - w) <= ROOT_MATCH_TOL for w in cycle_pts):
            continue
        deficit = math.sqrt(N) - abs(evaluate(m0, z))
        if 0 <= deficit <= near_tol:
            found = orbit_closure(z, N, p_max)
            out.append(NearCycle(z, float(deficit), found[0] if found else None))
    return out


def check_cycle(m0: LaurentPoly, N: int, cycle: Cycle, cycle_tol: float = CYCLE_TOL) -> dict:
    """Residuals of the three cycle invariants."""
    pts = cycle.points
    p = len(pts)
    closure = max(abs(pts[k].value ** N - pts[(k + 1) % p].value) for k in range(p))
    modulus = max(abs(abs(evaluate(m0, z)) - math.sqrt(N)) for z in pts)
    vals = np.array([z.value for z in pts])
    distinct = all(abs(vals[i] - vals[j]) > ROOT_MATCH_TOL for i in range(p) for j in range(i + 1, p))
    return {
        "closure": float(closure),
        "modulus": float(modulus),
        "distinct": distinct,
        "ok": closure <= 1e-10 and modulus <= cycle_tol and distinct,
    }
