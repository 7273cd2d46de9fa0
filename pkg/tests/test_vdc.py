import math
from fractions import Fraction

import numpy as np
import pytest

from oscillab import powerlog as pl
from oscillab import vdc
from oscillab.phase import PhaseModel


def const_amp(lo, hi, c=1.0):
    return pl.PiecewisePowerLog((
        (pl.interval_cell(lo, hi), (pl.PowerLogTerm(c, (Fraction(0),), (0,)),)),
    ))


def symmetric_amp(terms_plus):
    """Even extension of terms on (0,1) to (-1,1)."""
    return pl.PiecewisePowerLog((
        (pl.interval_cell(-1.0, 0.0), terms_plus),
        (pl.interval_cell(0.0, 1.0), terms_plus),
    ))


PHI_LINEAR = PhaseModel.from_exprs(["y1"], 1)
PHI_SQUARE = PhaseModel.from_exprs(["y1 * y1"], 1)
XI = (1.0,)


@pytest.mark.parametrize("d,expected", [(1, 3), (2, 8), (3, 18), (4, 38)])
def test_cd_constant(d, expected):
    assert vdc.cd_constant(d) == expected


def test_cd_constant_rejects_nonpositive():
    with pytest.raises(ValueError):
        vdc.cd_constant(0)


def test_bound_direct_substitution():
    assert vdc.vdc_bound(1, 1.0, 10.0, 1.0, 1.0, 0.0) == pytest.approx(0.3, abs=1e-15)


def test_bound_d2():
    assert vdc.vdc_bound(2, 2.0, 100.0, 1.0, 1.0, 0.0) == pytest.approx(
        8.0 / math.sqrt(200.0), rel=1e-15)
    assert vdc.vdc_bound(2, 2.0, 100.0, 1.0, 1.0, 0.0) == pytest.approx(0.565685, abs=5e-7)


def test_bound_zero_amplitude():
    assert vdc.vdc_bound(3, 1.0, 10.0, 0.0, 0.0, 0.0) == 0.0


def test_bound_rejects_bad_args():
    with pytest.raises(ValueError):
        vdc.vdc_bound(1, 0.0, 10.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        vdc.vdc_bound(1, 1.0, -1.0, 1.0, 1.0, 0.0)


def test_bound_monotone_in_lambda_and_eps():
    lams = [1.0, 5.0, 25.0, 400.0]
    for d in (1, 2, 3):
        vals = [vdc.vdc_bound(d, 1.0, lam, 1.0, 0.5, 0.3) for lam in lams]
        assert all(a > b for a, b in zip(vals[:-1], vals[1:]))
        epss = [0.1, 0.5, 2.0, 7.0]
        vals = [vdc.vdc_bound(d, e, 10.0, 1.0, 0.5, 0.3) for e in epss]
        assert all(a > b for a, b in zip(vals[:-1], vals[1:]))


def test_bound_scaling_identity():
    for d in (1, 2, 4):
        for eps, lam in [(0.25, 10.0), (3.0, 125.0)]:
            assert vdc.vdc_bound(d, eps, lam, 0.7, 1.3, 0.2) == \
                vdc.vdc_bound(d, 1.0, lam * eps, 0.7, 1.3, 0.2)


def test_hypotheses_square_phase():
    eps, ev = vdc.check_hypotheses(PHI_SQUARE, XI, 2, (-1.0, 1.0))
    assert eps == pytest.approx(1.9, rel=1e-12)
    assert ev.min_abs_derivative == pytest.approx(2.0, rel=1e-12)


def test_hypotheses_cubic_fails_d1():
    phi = PhaseModel.from_exprs(["y1 * y1 * y1"], 1)
    eps, _ = vdc.check_hypotheses(phi, XI, 1, (-1.0, 1.0))
    assert eps == 0.0


def test_hypotheses_linear():
    eps, ev = vdc.check_hypotheses(PHI_LINEAR, XI, 1, (0.0, 1.0))
    assert eps == pytest.approx(0.95, rel=1e-12)
    assert ev.second_derivative_sign_constant is True


def test_total_variation_sqrt():
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0), (pl.PowerLogTerm(1.0, (Fraction(1, 2),), (0,)),)),
    ))
    assert vdc.total_variation(f, (0.0, 1.0)) == pytest.approx(1.0, abs=1e-9)


def test_total_variation_triangle():
    terms = (pl.PowerLogTerm(1.0, (Fraction(0),), (0,)),
             pl.PowerLogTerm(-1.0, (Fraction(1),), (0,)))
    f = symmetric_amp(terms)
    assert vdc.total_variation(f, (-1.0, 1.0)) == pytest.approx(2.0, abs=1e-9)


def test_total_variation_nonmonotone():
    # f = y - y^2 on (0, 1): rises to 1/4 at 1/2 then falls back: TV = 1/2
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0),
         (pl.PowerLogTerm(1.0, (Fraction(1),), (0,)),
          pl.PowerLogTerm(-1.0, (Fraction(2),), (0,)))),
    ))
    assert vdc.total_variation(f, (0.0, 1.0)) == pytest.approx(0.5, abs=1e-9)


def test_verify_linear_case():
    cert = vdc.verify(const_amp(0.0, 1.0), PHI_LINEAR, XI, 1, (0.0, 1.0), [10.0])
    row = cert.rows[0]
    assert row.actual == pytest.approx(2 * abs(math.sin(5.0)) / 10.0, abs=1e-9)
    assert row.bound == pytest.approx(0.3 / 0.95, rel=1e-12)
    assert cert.verdict


def test_verify_zero_amplitude():
    cert = vdc.verify(const_amp(0.0, 1.0, c=0.0), PHI_LINEAR, XI, 1, (0.0, 1.0), [10.0])
    assert cert.rows[0].actual == pytest.approx(0.0, abs=1e-15)
    assert cert.rows[0].bound == 0.0
    assert cert.verdict


def test_verify_fresnel_case():
    f = symmetric_amp((pl.PowerLogTerm(1.0, (Fraction(0),), (0,)),))
    cert = vdc.verify(f, PHI_SQUARE, XI, 2, (-1.0, 1.0), [100.0])
    row = cert.rows[0]
    assert row.actual == pytest.approx(0.17725, abs=2e-2)
    assert row.bound == pytest.approx(8.0 / math.sqrt(100.0 * 1.9), rel=1e-12)
    assert cert.verdict


def test_verify_requires_certified_eps():
    phi = PhaseModel.from_exprs(["y1 * y1 * y1"], 1)
    with pytest.raises(ValueError):
        vdc.verify(const_amp(-1.0, 1.0), phi, XI, 1, (-1.0, 1.0), [10.0])


def test_certificate_serialization_fields():
    cert = vdc.verify(const_amp(0.0, 1.0), PHI_LINEAR, XI, 1, (0.0, 1.0),
                      [10.0, 100.0])
    rows = cert.csv_rows()
    assert [r[0] for r in rows] == [10.0, 100.0]
    header = cert.json_header()
    assert header["verdict"] == "pass"
    assert header["d"] == 1
    assert header["epsilon"] == pytest.approx(0.95)


def _random_case(rng):
    """A random (amplitude, phase, d, interval) with certified hypotheses and
    a symbolically computable total variation."""
    d = int(rng.integers(1, 5))
    lead = float(rng.uniform(0.5, 2.0)) * (1 if rng.random() < 0.5 else -1)
    coeffs = {(d,): lead}
    for k in range(d):
        if rng.random() < 0.5:
            coeffs[(k,)] = float(rng.uniform(-1.0, 1.0))
    from oscillab.phase import Polynomial
    phi = PhaseModel.polynomial([Polynomial(1, coeffs)], derivative_bound=d)
    alpha = Fraction(int(rng.integers(0, 5)), 2)  # 0, 1/2, 1, 3/2, 2
    beta = int(rng.integers(0, 2))
    if alpha == 0 and beta > 0:
        beta = 0
    c = float(rng.uniform(0.25, 2.0)) * (1 if rng.random() < 0.5 else -1)
    f = pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 2.0), (pl.PowerLogTerm(c, (alpha,), (beta,)),)),
    ))
    return f, phi, d, (0.25, 1.75)


def test_randomized_battery_small():
    rng = np.random.default_rng(411)
    good = 0
    while good < 12:
        f, phi, d, interval = _random_case(rng)
        eps, _ = vdc.check_hypotheses(phi, XI, d, interval)
        if eps <= 0.0:
            continue
        cert = vdc.verify(f, phi, XI, d, interval, [10.0, 1000.0])
        assert cert.verdict, (d, cert.csv_rows())
        good += 1
