"""Laurent (trigonometric) polynomials and points on the unit circle.

A :class:`LaurentPoly` stores ``{degree: coefficient}`` sparsely and is the
container used everywhere else: filters, correlations, eigenfunctions.
Dense conversions (:meth:`LaurentPoly.to_dense`, :meth:`LaurentPoly.from_dense`)
are provided for the numerical inner loops.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional

import numpy as np

from .errors import DegenerateInput

TWO_PI = 2.0 * math.pi

#: coefficients at or below this magnitude are dropped on construction
ZERO_THRESHOLD = 1e-14

#: roots closer than this are always treated as one multiple root
CLUSTER_RADIUS = 1e-6

#: coarse radius for merging the scattered images of a high-order root
MERGE_RADIUS = 1e-3


# ---------------------------------------------------------------------------
# circle points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CirclePoint:
    """A point of the unit circle, optionally a known root of unity.

    ``rational_angle = (a, b)`` means ``value = exp(2 pi i a / b)`` with
    ``0 <= a < b`` and ``gcd(a, b) = 1``.
    """

    value: complex
    angle: float
    rational_angle: Optional[tuple[int, int]] = None

    @classmethod
    def from_angle(cls, angle: float) -> "CirclePoint":
        angle = math.fmod(angle, TWO_PI)
        if angle < 0:
            angle += TWO_PI
        if angle >= TWO_PI:
            angle = 0.0
        return cls(complex(math.cos(angle), math.sin(angle)), angle)

    @classmethod
    def from_rational(cls, num: int, den: int) -> "CirclePoint":
        if den <= 0:
            raise ValueError("denominator must be positive")
        fr = Fraction(num % den, den)
        angle = TWO_PI * fr.numerator / fr.denominator
        return cls(
            complex(math.cos(angle), math.sin(angle)),
            angle,
            (fr.numerator, fr.denominator),
        )

    @classmethod
    def from_value(cls, z: complex) -> "CirclePoint":
        if z == 0:
            raise DegenerateInput("cannot project 0 onto the unit circle")
        return cls.from_angle(cmath.phase(z))

    @property
    def fraction(self) -> Optional[Fraction]:
        if self.rational_angle is None:
            return None
        return Fraction(*self.rational_angle)

    def conjugate(self) -> "CirclePoint":
        if self.rational_angle is not None:
            a, b = self.rational_angle
            return CirclePoint.from_rational(-a, b)
        return CirclePoint.from_angle(-self.angle)

    def power(self, n: int) -> "CirclePoint":
        """``z**n``; exact on rational angles."""
        if self.rational_angle is not None:
            a, b = self.rational_angle
            return CirclePoint.from_rational(a * n, b)
        return CirclePoint.from_angle(self.angle * n)

    def to_json(self):
        out = {"value": [self.value.real, self.value.imag], "angle": self.angle}
        if self.rational_angle is not None:
            out["rational_angle"] = list(self.rational_angle)
        return out


def snap_to_rational(point: CirclePoint, den_max: int, tol: float) -> CirclePoint:
    """Replace ``point`` by the nearest root of unity of order ``<= den_max``
    if it lies within ``tol`` (arc length); otherwise return it unchanged."""
    x = point.angle / TWO_PI
    fr = Fraction(x).limit_denominator(den_max)
    if TWO_PI * abs(x - float(fr)) <= tol:
        return CirclePoint.from_rational(fr.numerator, fr.denominator)
    return point


def uniform_grid(n: int) -> np.ndarray:
    """``n`` equispaced points ``exp(2 pi i j / n)`` on the circle."""
    return np.exp(1j * TWO_PI * np.arange(n) / n)


# ---------------------------------------------------------------------------
# Laurent polynomials
# ---------------------------------------------------------------------------

def _as_complex_array(z):
    if isinstance(z, CirclePoint):
        return z.value
    return z


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    """Finite sum ``sum_k c_k z**k`` with integer (possibly negative) ``k``."""

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, c in self.coeffs.items():
            c = complex(c)
            if abs(c) > ZERO_THRESHOLD:
                clean[int(k)] = c
        object.__setattr__(self, "coeffs", MappingProxyType(dict(sorted(clean.items()))))

    # -- construction -------------------------------------------------------
    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls({})

    @classmethod
    def constant(cls, c) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def monomial(cls, k: int, c=1.0) -> "LaurentPoly":
        return cls({k: c})

    @classmethod
    def from_dense(cls, values, offset: int = 0) -> "LaurentPoly":
        return cls({offset + j: c for j, c in enumerate(np.asarray(values).ravel())})

    # -- support --------------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree_min(self) -> Optional[int]:
        return next(iter(self.coeffs)) if self.coeffs else None

    @property
    def degree_max(self) -> Optional[int]:
        return next(reversed(self.coeffs)) if self.coeffs else None

    @property
    def half_width(self) -> int:
        """``max(|degree_min|, |degree_max|)``, 0 for the zero polynomial."""
        if self.is_zero:
            return 0
        return max(abs(self.degree_min), abs(self.degree_max))

    def __getitem__(self, k: int) -> complex:
        return self.coeffs.get(k, 0j)

    def items(self):
        return self.coeffs.items()

    def to_dense(self, lo: Optional[int] = None, hi: Optional[int] = None) -> np.ndarray:
        """Coefficients of degrees ``lo..hi`` (inclusive) as a complex array.
        Coefficients outside the range are discarded."""
        if lo is None:
            lo = self.degree_min if not self.is_zero else 0
        if hi is None:
            hi = self.degree_max if not self.is_zero else 0
        out = np.zeros(max(hi - lo + 1, 0), dtype=complex)
        for k, c in self.coeffs.items():
            if lo <= k <= hi:
                out[k - lo] = c
        return out

    # -- arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0j) + c
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            if self.is_zero or other.is_zero:
                return LaurentPoly.zero()
            prod = np.convolve(self.to_dense(), other.to_dense())
            return LaurentPoly.from_dense(prod, self.degree_min + other.degree_min)
        if isinstance(other, (int, float, complex, np.number)):
            return LaurentPoly({k: c * other for k, c in self.coeffs.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return dict(self.coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        terms = ", ".join(f"{k}: {c:.6g}" for k, c in self.coeffs.items())
        return f"LaurentPoly({{{terms}}})"

    # -- circle helpers -------------------------------------------------------------
    def conj_reflect(self) -> "LaurentPoly":
        """``sum conj(c_k) z**-k``, the pointwise conjugate on the circle."""
        return LaurentPoly({-k: c.conjugate() for k, c in self.coeffs.items()})

    def on_grid(self, grid_size: int = 1024) -> np.ndarray:
        return evaluate(self, uniform_grid(grid_size))

    def sup_norm(self, grid_size: int = 1024) -> float:
        if self.is_zero:
            return 0.0
        return float(np.max(np.abs(self.on_grid(grid_size))))

    def coeff_distance(self, other: "LaurentPoly") -> float:
        """Largest coefficientwise absolute difference."""
        diff = self - other
        return max((abs(c) for c in diff.coeffs.values()), default=0.0)

    def to_json(self):
        """``{"offset": k0, "coeffs": [[re, im], ...]}`` (dense from ``k0``)."""
        if self.is_zero:
            return {"offset": 0, "coeffs": []}
        dense = self.to_dense()
        return {
            "offset": self.degree_min,
            "coeffs": [[float(c.real), float(c.imag)] for c in dense],
        }

    @classmethod
    def from_json(cls, obj) -> "LaurentPoly":
        offset = int(obj.get("offset", 0))
        return cls({offset + j: complex(re, im) for j, (re, im) in enumerate(obj["coeffs"])})


def _lift(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    return LaurentPoly.constant(x)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def evaluate(p: LaurentPoly, z):
    """Evaluate ``p`` at ``z`` (a :class:`CirclePoint`, a complex number or an
    array of them) by two Horner passes, one in ``z`` for the non-negative
    degrees and one in ``1/z`` for the negative ones."""
    z = _as_complex_array(z)
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    if p.is_zero:
        out = np.zeros_like(z)
        return complex(out) if scalar else out
    lo, hi = p.degree_min, p.degree_max

    pos = np.zeros_like(z)
    for k in range(hi, max(lo, 0) - 1, -1):
        pos = pos * z + p[k]
    if lo > 0:
        pos = pos * z**lo

    neg = np.zeros_like(z)
    if lo < 0:
        w = 1.0 / z
        for k in range(lo, min(hi, -1) + 1):
            neg = neg * w + p[k]
        neg = neg * w ** (-min(hi, -1))
    out = pos + neg
    return complex(out) if scalar else out


def cross_correlation(p: LaurentPoly, q: LaurentPoly) -> LaurentPoly:
    """Coefficients ``c_j = sum_k conj(p_k) q_{k+j}`` of ``conj(p) * q`` on the circle."""
    return p.conj_reflect() * q


def rotate(p: LaurentPoly, rho) -> LaurentPoly:
    """``z -> p(rho z)``: coefficient ``k`` is multiplied by ``rho**k``."""
    if isinstance(rho, CirclePoint):
        return LaurentPoly({k: c * rho.power(k).value for k, c in p.items()})
    return LaurentPoly({k: c * complex(rho) ** k for k, c in p.items()})


def haar_integral(p: LaurentPoly) -> complex:
    """Integral against normalized Haar measure: the constant coefficient."""
    return p[0]


class UnitRoot(NamedTuple):
    point: CirclePoint
    multiplicity: int


def _single_linkage(points: np.ndarray, radius: float) -> list[list[int]]:
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(points[i] - points[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def polynomial_roots(p: LaurentPoly) -> np.ndarray:
    """All nonzero roots of ``p``: eigenvalues of the companion matrix of the
    ordinary polynomial ``z**-degree_min * p``."""
    if p.is_zero:
        raise DegenerateInput("the zero polynomial has no isolated roots")
    dense = p.to_dense()
    if len(dense) == 1:
        return np.zeros(0, dtype=complex)
    return np.roots(dense[::-1])


def cluster_roots(p: LaurentPoly, roots: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Group scattered images of multiple roots.

    Roots within :data:`CLUSTER_RADIUS` always merge.  Fine clusters within
    :data:`MERGE_RADIUS` merge too when the merged centroid is itself a root
    to ``tol``; a ``k``-fold root scatters like ``eps**(1/k)`` while the
    centroid of its images stays accurate to roughly ``eps``.
    """
    if len(roots) == 0:
        return []
    scale = 1.0 + sum(abs(c) for c in p.coeffs.values())
    fine = _single_linkage(roots, CLUSTER_RADIUS)
    centroids = np.array([roots[g].mean() for g in fine])
    coarse = _single_linkage(centroids, MERGE_RADIUS)
    out = []
    for group in coarse:
        members = [i for g in group for i in fine[g]]
        centroid = roots[members].mean()
        if len(group) == 1 or abs(evaluate(p, centroid)) <= tol * scale:
            out.append((complex(centroid), len(members)))
        else:
            for g in group:
                out.append((complex(roots[fine[g]].mean()), len(fine[g])))
    return out


def unit_circle_roots(
    p: LaurentPoly,
    tol: float = 1e-8,
    snap_den_max: Optional[int] = None,
) -> list[UnitRoot]:
    """Roots of ``p`` on the unit circle, each reported once with its multiplicity.

    Parameters
    ----------
    p : LaurentPoly
        Nonzero polynomial.
    tol : float
        Accept a root cluster if ``| |r| - 1 | <= tol``; also the residual and
        snapping tolerance.
    snap_den_max : int, optional
        When given, a root within ``tol`` of ``exp(2 pi i a/b)`` with
        ``b <= snap_den_max`` is replaced by that exact root of unity,
        provided the residual bound still holds there.

    Returns
    -------
    list of UnitRoot, sorted by angle.
    """
    roots = polynomial_roots(p)
    scale = 1.0 + sum(abs(c) for c in p.coeffs.values())
    out = []
    for r, mult in cluster_roots(p, roots, tol):
        if abs(abs(r) - 1.0) > tol:
            continue
        point = CirclePoint.from_value(r)
        if snap_den_max is not None:
            snapped = snap_to_rational(point, snap_den_max, tol)
            if snapped is not point and abs(evaluate(p, snapped)) <= tol * scale:
                point = snapped
        out.append(UnitRoot(point, mult))
    out.sort(key=lambda u: u.point.angle)
    return out


def derivative_t(p: LaurentPoly) -> LaurentPoly:
    """``d/dt p(e^{it})`` as a Laurent polynomial (coefficients ``i k c_k``)."""
    return LaurentPoly({k: 1j * k * c for k, c in p.items()})


def sum_polys(polys: Iterable[LaurentPoly]) -> LaurentPoly:
    total = LaurentPoly.zero()
    for q in polys:
        total = total + q
    return total
