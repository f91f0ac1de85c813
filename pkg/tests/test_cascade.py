import cmath
import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ruelle_lab import cascade, cycles, filterlib, peripheral, transfer
from ruelle_lab.cascade import GridFunction
from ruelle_lab.errors import GridMismatch
from ruelle_lab.filterlib import FilterSpec
from ruelle_lab.lpoly import LaurentPoly

# phi(1), phi(2) for Daubechies-4: the eigenvector of [[a1, a0], [a3, a2]] * sqrt(2)
# for eigenvalue 1, normalized to sum 1, is ((1 + sqrt 3)/2, (1 - sqrt 3)/2)
D4_PHI_1 = 1.3660254037844386
D4_PHI_2 = -0.3660254037844386

coef = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def spectrum_of(spec):
    op = transfer.build(spec)
    cyc = cycles.find_cycles(spec)
    return cyc, peripheral.build_spectrum(op, cyc)


def d4_dyadic_values(levels):
    """phi(i / 2**levels), i = 0..3 * 2**levels, from the two-scale relation
    phi(x) = sqrt(2) sum_k a_k phi(2x - k) seeded with the integer values."""
    a = filterlib.builtin("daubechies4").m0.to_dense().real
    vals = np.array([0.0, D4_PHI_1, D4_PHI_2, 0.0])
    for j in range(1, levels + 1):
        half = 2 ** (j - 1)
        new = np.zeros(3 * 2**j + 1)
        for k in range(4):
            lo = k * half
            n = min(len(vals), len(new) - lo)
            new[lo : lo + n] += a[k] * vals[:n]
        vals = math.sqrt(2) * new
    return vals


# --- grid functions ---------------------------------------------------------

def test_grid_function_invariants():
    with pytest.raises(GridMismatch):
        GridFunction(np.ones(3, dtype=complex), 0.0, 0.0, (0, 3))
    with pytest.raises(GridMismatch):
        GridFunction(np.ones(0, dtype=complex), 0.0, 1.0, (0, 0))
    b = cascade.box(0.0, 3.0)
    assert b.integral() == pytest.approx(1.0)
    assert b.l2_norm() == pytest.approx(1 / math.sqrt(3))


def test_box_must_fit_the_grid():
    with pytest.raises(GridMismatch):
        cascade.box(0.0, 1.5, step=1.0)


# --- cascade steps ----------------------------------------------------------

def test_haar_box_is_fixed():
    haar = filterlib.builtin("haar")
    out = cascade.cascade_step(haar, cascade.box())
    assert out.step == 0.5 and out.origin == 0.0
    assert np.allclose(out.samples, 1.0, atol=1e-15)


def test_stretched_haar_box_is_fixed():
    sh = filterlib.builtin("stretched_haar")
    out = cascade.cascade_step(sh, cascade.box(0.0, 3.0))
    assert out.origin == 0.0 and len(out.samples) * out.step == 3.0
    assert np.allclose(out.samples, 1 / 3, atol=1e-15)


def test_unnormalized_filter_scales_the_integral():
    # sum a_k = 1, so the integral changes by 1/sqrt(2)
    a = FilterSpec(2, LaurentPoly({0: 0.5, 1: 0.5}))
    out = cascade.cascade_step(a, cascade.box())
    assert out.integral() == pytest.approx(1 / math.sqrt(2))


def test_step_rejects_non_adic_grids():
    haar = filterlib.builtin("haar")
    with pytest.raises(GridMismatch):
        cascade.cascade_step(haar, GridFunction(np.ones(3, dtype=complex), 0.0, 1 / 3, (0, 1)))
    with pytest.raises(GridMismatch):
        cascade.cascade_step(haar, GridFunction(np.ones(4, dtype=complex), 0.1, 0.25, (0.1, 1.1)))


def test_negative_degrees_shift_the_origin():
    a = FilterSpec(2, LaurentPoly({-1: 2**-0.5, 0: 2**-0.5}))
    out = cascade.cascade_step(a, cascade.box(-1.0, 0.0))
    assert out.origin == -1.0
    assert np.allclose(out.samples, 1.0)


# --- fixed points -----------------------------------------------------------

def test_haar_fixed_point():
    run = cascade.cascade_fixed_point(filterlib.builtin("haar"), 12)
    assert run.phi.step == 2.0**-12
    assert np.max(np.abs(run.phi.samples - 1.0)) <= 1e-12
    assert max(run.distances) <= 1e-12


def test_stretched_haar_fixed_point():
    run = cascade.cascade_fixed_point(filterlib.builtin("stretched_haar"), 12)
    assert run.phi.origin == 0.0 and len(run.phi.samples) * run.phi.step == 3.0
    assert np.max(np.abs(run.phi.samples - 1 / 3)) <= 1e-12


def test_daubechies4_fixed_point():
    run = cascade.cascade_fixed_point(filterlib.builtin("daubechies4"), 16)
    assert run.distances[-1] < 1e-4
    tail = run.distances[-4:]
    assert all(b < a for a, b in zip(tail, tail[1:]))
    # cell j of the cascade approximates phi at its left endpoint
    exact = d4_dyadic_values(16)[:-1]
    err = run.phi.samples.real - exact
    assert math.sqrt(run.phi.step * np.sum(err**2)) < 1e-4
    assert np.max(np.abs(err)) < 5e-3  # pointwise error is limited by the Hoelder roughness
    assert run.phi.integral() == pytest.approx(1.0, abs=1e-12)
    lo, hi = run.phi.support_hint
    assert (lo, hi) == (0.0, 3.0)
    x = run.phi.x
    assert np.all(np.abs(run.phi.samples[(x < lo) | (x >= hi)]) <= 1e-12)


def test_default_levels():
    assert cascade.default_levels(2) == 12
    assert cascade.default_levels(4) == 6
    assert cascade.default_levels(3) == 8
    assert len(cascade.cascade_fixed_point(filterlib.builtin("haar")).distances) == 12


def test_unit_box_start_stalls_on_stretched_haar():
    # from chi_[0,1) the iterates never settle; since R1 = 1 the
    # autocorrelation stays exactly 1 instead of approaching h_{C1}
    run = cascade.cascade_fixed_point(filterlib.builtin("stretched_haar"), 10, start="box")
    h = cascade.autocorrelation_h(run.phi)
    assert h.coeff_distance(LaurentPoly.constant(1.0)) <= 1e-12
    assert min(run.distances) > 0.1


def test_bad_start():
    with pytest.raises(ValueError):
        cascade.cascade_fixed_point(filterlib.builtin("haar"), 2, start="triangle")


# --- correlation forms ------------------------------------------------------

def test_autocorrelation_of_boxes():
    assert cascade.autocorrelation_h(cascade.box()).coeff_distance(LaurentPoly.constant(1.0)) < 1e-15
    h = cascade.autocorrelation_h(cascade.box(0.0, 3.0))
    for n in range(-3, 4):
        assert h[n] == pytest.approx((3 - abs(n)) / 9, abs=1e-15)


def test_autocorrelation_of_zero():
    z = GridFunction(np.zeros(4, dtype=complex), 0.0, 0.25, (0, 1))
    assert cascade.autocorrelation_h(z).is_zero


def test_correlation_shift_direction():
    # b(x) = a(x - 1), so b(x + n) overlaps a(x) only for n = 1
    a = cascade.box(0.0, 1.0, height=1.0)
    b = cascade.box(1.0, 2.0, height=1.0)
    p = cascade.correlation_form(a, b)
    assert p[1] == pytest.approx(1.0) and abs(p[-1]) < 1e-15


@st.composite
def step_functions(draw):
    n = draw(st.integers(1, 4))
    vals = draw(st.lists(coef, min_size=n, max_size=n))
    lo = draw(st.integers(-2, 2))
    return GridFunction(np.array(vals, dtype=complex), float(lo), 1.0, (lo, lo + n))


@st.composite
def complex_filters(draw):
    vals = draw(st.lists(coef, min_size=1, max_size=4))
    off = draw(st.integers(-1, 1))
    p = LaurentPoly.from_dense(vals, off)
    if p.is_zero:
        p = LaurentPoly.constant(1.0)
    return FilterSpec(2, p)


@given(complex_filters(), step_functions(), step_functions())
def test_cascade_intertwines_with_transfer(a, psi1, psi2):
    # R(p(psi1, psi2)) = p(M psi1, M psi2); Riemann sums are exact on these grids
    op = transfer.build(a)
    lhs = transfer.apply(op, cascade.correlation_form(psi1, psi2))
    rhs = cascade.correlation_form(cascade.cascade_step(a, psi1), cascade.cascade_step(a, psi2))
    scale = (1 + sum(abs(c) for _, c in a.m0.items())) ** 2 * (
        1 + np.sum(np.abs(psi1.samples))) * (1 + np.sum(np.abs(psi2.samples)))
    assert lhs.coeff_distance(rhs) <= 1e-12 * scale


def test_opposite_shift_sign_breaks_the_identity_for_complex_filters():
    a = FilterSpec(2, LaurentPoly({0: 0.6 + 0.3j, 1: 0.2 - 0.5j, 2: 0.1j}))
    psi1 = GridFunction(np.array([1.0, 2.0j, -1.0]), 0.0, 1.0, (0, 3))
    psi2 = GridFunction(np.array([0.5, 1.0]), -1.0, 1.0, (-1, 1))

    def minus_form(f, g):
        p = cascade.correlation_form(f, g)
        return LaurentPoly({-k: c for k, c in p.items()})

    op = transfer.build(a)
    lhs = transfer.apply(op, minus_form(psi1, psi2))
    rhs = minus_form(cascade.cascade_step(a, psi1), cascade.cascade_step(a, psi2))
    assert lhs.coeff_distance(rhs) > 1e-2


# --- infinite products ------------------------------------------------------

def test_iterated_filter():
    r = 1 / math.sqrt(2)
    m2 = cascade.iterated_filter(LaurentPoly({0: r, 1: r}), 2, 2)
    assert dict(m2.items()) == pytest.approx({0: 0.5, 1: 0.5, 2: 0.5, 3: 0.5})


def test_haar_product_values():
    haar = filterlib.builtin("haar")
    triv = cycles.find_cycles(haar)[0]
    v, bound = cascade.phi_product(haar, triv, 0, 0.0, 5)
    assert v == 1 and bound == 0
    v, bound = cascade.phi_product(haar, triv, 0, math.pi, 30)
    # prod_k (1 + e^{ix/2^k})/2 = e^{ix/2} sin(x/2)/(x/2); at x = pi this is 2i/pi
    assert abs(v - 0.6366197723675814j) <= 1e-8
    assert bound <= 1e-8


@given(st.floats(-40, 40, allow_nan=False))
def test_haar_product_closed_form(x):
    haar = filterlib.builtin("haar")
    triv = cycles.find_cycles(haar)[0]
    v, bound = cascade.phi_product(haar, triv, 0, x, 40)
    exact = cmath.exp(0.5j * x) * (math.sin(x / 2) / (x / 2) if x else 1.0)
    assert abs(v - exact) <= bound + 1e-12


@pytest.mark.parametrize("name", ["stretched_haar", "stretched_haar:5", "daubechies4"])
def test_product_is_one_at_zero_on_every_cycle(name):
    spec = filterlib.parse_builtin_ref(name)
    for c in cycles.find_cycles(spec):
        for k in range(c.period):
            for K in (1, 3, 10):
                v, _ = cascade.phi_product(spec, c, k, 0.0, K)
                assert abs(abs(v) - 1) <= 1e-12


@pytest.mark.parametrize("name", ["haar", "stretched_haar", "daubechies4"])
def test_truncation_consistency(name):
    spec = filterlib.builtin(name)
    xs = np.array([0.1, 1.0, 2.5, 10.0, 100.0])
    for c in cycles.find_cycles(spec):
        for k in range(c.period):
            for K in (3, 8, 20):
                v, bound = cascade.phi_product(spec, c, k, xs, K)
                v1, _ = cascade.phi_product(spec, c, k, xs, K + 1)
                assert np.all(np.abs(v1 - v) <= bound + 1e-15)


def test_cycle_filter_is_normalized_at_one():
    spec = filterlib.builtin("stretched_haar")
    c = cycles.find_cycles(spec)[1]
    for k in range(2):
        cf = cascade.cycle_filter(spec, c, k)
        assert cf.scale_N == 4
        assert cf.m0(1.0) == pytest.approx(2.0)
        assert filterlib.validate(cf).validation.all_ok


# --- crosschecks ------------------------------------------------------------

def test_haar_crosscheck():
    spec = filterlib.builtin("haar")
    cyc, sp = spectrum_of(spec)
    rep = cascade.crosscheck_h(spec, 0, sp, K=30, K_per=2000)
    assert rep.max_probe_discrepancy < 2e-3
    assert rep.probes_within_bounds and rep.ok
    assert rep.max_time_domain <= 1e-12


def test_stretched_haar_crosscheck_every_cycle():
    spec = filterlib.builtin("stretched_haar")
    cyc, sp = spectrum_of(spec)
    for i in range(len(cyc)):
        rep = cascade.crosscheck_h(spec, i, sp)
        assert rep.ok and rep.probes_within_bounds
        assert rep.max_time_domain <= 1e-12


def test_period_four_time_domain():
    spec = filterlib.builtin("stretched_haar", 5)
    cyc, sp = spectrum_of(spec)
    rep = cascade.crosscheck_h(spec, 1, sp, probe_angles=(1.0,))
    assert rep.ok and rep.max_time_domain <= 1e-10


def test_large_cycle_scales_are_skipped():
    spec = filterlib.builtin("stretched_haar", 9)
    cyc, sp = spectrum_of(spec)
    rep = cascade.crosscheck_h(spec, 2, sp)  # period 6 -> scale 64
    assert not rep.skipped
    rep = cascade.crosscheck_h(spec, 2, sp, max_scale=32)
    assert rep.skipped and rep.ok and rep.to_json()["skipped"]


def test_write_csv(tmp_path):
    path = tmp_path / "phi.csv"
    cascade.write_csv(cascade.box(0.0, 1.0, step=0.5), path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x", "re", "im"]
    assert [float(r[0]) for r in rows[1:]] == [0.0, 0.5]
    assert [float(r[1]) for r in rows[1:]] == [1.0, 1.0]
