import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.integrate as si
from scipy.special import fresnel

from oscillab import powerlog as pl
from oscillab import quad
from oscillab.phase import PhaseModel
from oscillab.quad import _moments


def chi(lo, hi):
    pieces = []
    if lo < 0 < hi:
        spans = [(lo, 0.0), (0.0, hi)]
    else:
        spans = [(lo, hi)]
    for a, b in spans:
        pieces.append((pl.interval_cell(a, b),
                       (pl.PowerLogTerm(1.0, (Fraction(0),), (0,)),)))
    return pl.PiecewisePowerLog(tuple(pieces))


def triangle():
    terms = (pl.PowerLogTerm(1.0, (Fraction(0),), (0,)),
             pl.PowerLogTerm(-1.0, (Fraction(1),), (0,)))
    return pl.PiecewisePowerLog((
        (pl.interval_cell(-1.0, 0.0), terms),
        (pl.interval_cell(0.0, 1.0), terms),
    ))


def ramp(lo, hi):
    """f(y) = y on (lo, hi) with lo >= 0."""
    return pl.PiecewisePowerLog((
        (pl.interval_cell(lo, hi), (pl.PowerLogTerm(1.0, (Fraction(1),), (0,)),)),
    ))


PHI_LINEAR = PhaseModel.from_exprs(["y1"], 1)
PHI_SQUARE = PhaseModel.from_exprs(["y1 * y1"], 1)
XI = (1.0,)


def linear_exact(lo, hi, lam):
    if lam == 0.0:
        return complex(hi - lo)
    return (cmath.exp(1j * lam * hi) - cmath.exp(1j * lam * lo)) / (1j * lam)


def fresnel_exact(lam):
    s = math.sqrt(2 * lam / math.pi)
    S, C = fresnel(s)
    return math.sqrt(math.pi / (2 * lam)) * 2 * (C + 1j * S)


def triangle_exact(lam):
    if lam == 0.0:
        return 1.0 + 0j
    return complex((2.0 - 2.0 * math.cos(lam)) / lam ** 2)


def ramp_exact(lo, hi, lam):
    # int y e^{i lam y} dy by parts
    if lam == 0.0:
        return complex((hi ** 2 - lo ** 2) / 2.0)
    il = 1j * lam
    return (hi * cmath.exp(il * hi) - lo * cmath.exp(il * lo)) / il \
        - (cmath.exp(il * hi) - cmath.exp(il * lo)) / il ** 2


def test_kernel_one():
    r = quad.integrate_oscillatory(chi(0.0, 1.0), PHI_LINEAR, XI, 0.0)
    assert r.value == pytest.approx(1.0 + 0j, abs=1e-12)


def test_linear_phase_modulus():
    r = quad.integrate_oscillatory(chi(0.0, 1.0), PHI_LINEAR, XI, 10.0)
    assert abs(r.value) == pytest.approx(2 * abs(math.sin(5.0)) / 10.0, abs=1e-10)
    assert abs(r.value) == pytest.approx(0.191784, abs=1e-5)


def test_fresnel_modulus():
    r = quad.integrate_oscillatory(chi(-1.0, 1.0), PHI_SQUARE, XI, 100.0, tol=1e-8)
    assert abs(r.value) == pytest.approx(abs(fresnel_exact(100.0)), abs=1e-6)
    # stationary-phase asymptotic, loose by its nature at lam = 100
    assert abs(r.value) == pytest.approx(math.sqrt(math.pi / 100.0), abs=2e-2)


BATTERY = []
for lam in (10.0, 100.0, 1000.0, 10000.0):
    BATTERY.append(("chi01-linear", chi(0.0, 1.0), PHI_LINEAR, lam,
                    linear_exact(0.0, 1.0, lam)))
for lam in (10.0, 100.0, 1000.0, 10000.0):
    BATTERY.append(("chi-off-linear", chi(0.5, 2.5), PHI_LINEAR, lam,
                    linear_exact(0.5, 2.5, lam)))
for lam in (10.0, 100.0, 1000.0, 10000.0):
    BATTERY.append(("fresnel", chi(-1.0, 1.0), PHI_SQUARE, lam, fresnel_exact(lam)))
for lam in (10.0, 100.0, 1000.0, 10000.0):
    BATTERY.append(("triangle-linear", triangle(), PHI_LINEAR, lam, triangle_exact(lam)))
for lam in (10.0, 1000.0, 10000.0):
    BATTERY.append(("ramp-linear", ramp(0.0, 1.0), PHI_LINEAR, lam,
                    ramp_exact(0.0, 1.0, lam)))
BATTERY.append(("chi-sym-linear", chi(-1.0, 1.0), PHI_LINEAR, 500.0,
                linear_exact(-1.0, 1.0, 500.0)))


@pytest.mark.parametrize("name,f,phi,lam,exact",
                         BATTERY, ids=[f"{b[0]}-{b[3]:g}" for b in BATTERY])
def test_closed_form_battery(name, f, phi, lam, exact):
    r = quad.integrate_oscillatory(f, phi, XI, lam, tol=1e-9)
    assert not r.low_confidence
    assert abs(r.value - exact) <= 1e-8


def test_lambda_zero_reduces_to_signed_integral():
    f = triangle()
    r = quad.integrate_oscillatory(f, PHI_LINEAR, XI, 0.0, tol=1e-12)
    signed = quad.integrate_signed(f, tol=1e-12)
    assert r.value.imag == 0.0
    assert r.value.real == pytest.approx(signed, abs=1e-12)
    assert signed == pytest.approx(1.0, abs=1e-11)


def test_conjugation_symmetry():
    f = chi(0.0, 1.0)
    plus = quad.integrate_oscillatory(f, PHI_LINEAR, XI, 37.5, tol=1e-12)
    minus = quad.integrate_oscillatory(f, PHI_LINEAR, XI, -37.5, tol=1e-12)
    assert abs(plus.value.conjugate() - minus.value) <= 1e-12


def test_xi_must_be_unit():
    with pytest.raises(ValueError):
        quad.integrate_oscillatory(chi(0.0, 1.0), PHI_LINEAR, (2.0,), 1.0)


def test_result_invariants():
    r = quad.integrate_oscillatory(chi(0.0, 1.0), PHI_LINEAR, XI, 25.0)
    assert r.error >= 0.0
    assert r.panel_count >= 1
    assert len(r.methods) == r.panel_count


def test_low_confidence_flag_when_budget_exhausted():
    r = quad.integrate_oscillatory(chi(-1.0, 1.0), PHI_SQUARE, XI, 1e4, tol=1e-16)
    assert r.low_confidence or r.error <= 1e-16


# -- integrate_abs -----------------------------------------------------------


def test_integrate_abs_two_t():
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0), (pl.PowerLogTerm(2.0, (Fraction(1),), (0,)),)),
    ))
    assert quad.integrate_abs(f, tol=1e-11) == pytest.approx(1.0, abs=1e-10)


def test_integrate_abs_inverse_sqrt():
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0), (pl.PowerLogTerm(1.0, (Fraction(-1, 2),), (0,)),)),
    ))
    assert quad.integrate_abs(f, tol=1e-10) == pytest.approx(2.0, abs=1e-9)


def test_integrate_abs_sign_change_at_zero():
    # f(y) = y on (-1, 1): integral of |f| is 1
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(-1.0, 0.0), (pl.PowerLogTerm(-1.0, (Fraction(1),), (0,)),)),
        (pl.interval_cell(0.0, 1.0), (pl.PowerLogTerm(1.0, (Fraction(1),), (0,)),)),
    ))
    assert f.eval(-0.5) == pytest.approx(-0.5)
    assert quad.integrate_abs(f, tol=1e-11) == pytest.approx(1.0, abs=1e-10)


def test_integrate_abs_interior_sign_change():
    # f(y) = y - 1/2 on (0, 1): int |f| = 1/4
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0),
         (pl.PowerLogTerm(1.0, (Fraction(1),), (0,)),
          pl.PowerLogTerm(-0.5, (Fraction(0),), (0,)))),
    ))
    assert quad.integrate_abs(f, tol=1e-11) == pytest.approx(0.25, abs=1e-10)


def test_integrate_abs_subinterval():
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0), (pl.PowerLogTerm(1.0, (Fraction(-1, 2),), (0,)),)),
    ))
    v = quad.integrate_abs(f, interval=(0.25, 1.0), tol=1e-11)
    assert v == pytest.approx(2.0 - 2.0 * 0.5, abs=1e-10)


# -- stationary points ---------------------------------------------------------


def test_stationary_points_square():
    pts = quad.stationary_points(PHI_SQUARE, XI, (-1.0, 1.0))
    assert len(pts) == 1
    assert pts[0] == pytest.approx(0.0, abs=1e-11)


def test_stationary_points_linear():
    assert quad.stationary_points(PHI_LINEAR, XI, (0.0, 1.0)) == []


def test_stationary_points_cubic():
    phi = PhaseModel.from_exprs(["y1 * y1 * y1 - 3 * y1"], 1)
    pts = quad.stationary_points(phi, XI, (-2.0, 2.0))
    assert len(pts) == 2
    assert pts[0] == pytest.approx(-1.0, abs=1e-11)
    assert pts[1] == pytest.approx(1.0, abs=1e-11)


# -- moments -------------------------------------------------------------------


@pytest.mark.parametrize("omega", [0.0, 0.5, 3.0, 5.9, 6.1, 12.0, 40.0, 300.0])
def test_filon_moments_against_weighted_quadrature(omega):
    m = _moments(omega)
    for j in (0, 1, 4, 7, 10):
        if omega == 0.0:
            exact = 2.0 / (j + 1) if j % 2 == 0 else 0.0
            assert m[j] == pytest.approx(exact, abs=1e-14)
            continue
        re = si.quad(lambda t: t ** j, -1, 1, weight="cos", wvar=omega)[0]
        im = si.quad(lambda t: t ** j, -1, 1, weight="sin", wvar=omega)[0]
        assert abs(m[j] - (re + 1j * im)) < 1e-12


# -- randomized cross-check against an independent oracle -----------------------


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_cross_oracle_randomized():
    """Random prepared amplitudes (powers, logs, units) against scipy
    quadrature at moderate frequencies."""
    from oscillab import expr as ex

    rng = np.random.default_rng(1234)
    unit_expr = ex.parse("1 / (1 + y1 * y1)")
    phases = [
        (PHI_LINEAR, lambda y: y),
        (PHI_SQUARE, lambda y: y * y),
        (PhaseModel.from_exprs(["y1 * y1 * y1 - 3 * y1"], 1),
         lambda y: y ** 3 - 3 * y),
    ]
    cells = [(0.0, 1 / math.e), (1 / math.e, math.e), (math.e, 9.0)]
    checked = 0
    while checked < 12:
        lo, hi = cells[int(rng.integers(0, len(cells)))]
        alpha = Fraction(int(rng.integers(-1, 3)), 2)
        if lo == 0.0 and alpha <= -1:
            continue
        beta = int(rng.integers(0, 3))
        use_unit = rng.random() < 0.4
        unit = pl.UnitSpec(unit_expr, 2.2) if use_unit else pl.UNIT_ONE
        c = float(rng.uniform(-2.0, 2.0))
        if abs(c) < 0.1:
            continue
        f = pl.PiecewisePowerLog((
            (pl.interval_cell(lo, hi), (pl.PowerLogTerm(c, (alpha,), (beta,), unit),)),
        ))
        phi, phi_fn = phases[int(rng.integers(0, len(phases)))]
        lam = float(rng.choice([0.0, 3.0, 21.5, 47.0]))

        def integrand_re(y):
            val = c * y ** float(alpha) * math.log(y) ** beta
            if use_unit:
                val /= 1.0 + y * y
            return val * math.cos(lam * phi_fn(y))

        def integrand_im(y):
            val = c * y ** float(alpha) * math.log(y) ** beta
            if use_unit:
                val /= 1.0 + y * y
            return val * math.sin(lam * phi_fn(y))

        ref_re = si.quad(integrand_re, lo, hi, limit=2000, epsabs=1e-12)[0]
        ref_im = si.quad(integrand_im, lo, hi, limit=2000, epsabs=1e-12)[0]
        res = quad.integrate_oscillatory(f, phi, XI, lam, tol=1e-10)
        assert abs(res.value - (ref_re + 1j * ref_im)) <= 1e-7, \
            (lo, hi, alpha, beta, use_unit, lam)
        checked += 1


# -- two dimensions -------------------------------------------------------------


def square_box():
    return pl.PiecewisePowerLog((
        (pl.box_cell([(0.0, 1.0), (0.0, 1.0)]),
         (pl.PowerLogTerm(1.0, (Fraction(0), Fraction(0)), (0, 0)),)),
    ))


@pytest.mark.parametrize("lam", [0.0, 10.0, 100.0])
def test_2d_separable_linear_phase(lam):
    phi = PhaseModel.from_exprs(["y1 + y2"], 2)
    r = quad.integrate_oscillatory(square_box(), phi, XI, lam, tol=1e-8)
    exact = linear_exact(0.0, 1.0, lam) ** 2
    assert abs(r.value - exact) <= 1e-7


def test_2d_singular_amplitude():
    f = pl.PiecewisePowerLog((
        (pl.box_cell([(0.0, 1.0), (0.0, 1.0)]),
         (pl.PowerLogTerm(1.0, (Fraction(-1, 2), Fraction(-1, 2)), (0, 0)),)),
    ))
    phi = PhaseModel.from_exprs(["y1 + y2"], 2)
    r = quad.integrate_oscillatory(f, phi, XI, 0.0, tol=1e-7)
    assert r.value.real == pytest.approx(4.0, abs=1e-6)
