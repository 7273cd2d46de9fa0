import math
from fractions import Fraction

import numpy as np
import pytest

from oscillab import decayfit as dc
from oscillab import powerlog as pl
from oscillab.phase import PhaseModel


def chi01():
    return pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0), (pl.PowerLogTerm(1.0, (Fraction(0),), (0,)),)),
    ))


def zero_amp():
    return pl.PiecewisePowerLog((
        (pl.interval_cell(0.0, 1.0), (pl.PowerLogTerm(0.0, (Fraction(0),), (0,)),)),
    ))


PHI = PhaseModel.from_exprs(["y1"], 1)
XI = (1.0,)


def test_sample_decay_matches_closed_form():
    s = dc.sample_decay(chi01(), PHI, XI, 10.0, 1000.0, 12)
    expected = 2.0 * np.abs(np.sin(s.lams / 2.0)) / s.lams
    assert np.max(np.abs(s.abs_values - expected)) <= 1e-7


def test_sample_decay_zero_amplitude():
    s = dc.sample_decay(zero_amp(), PHI, XI, 10.0, 100.0, 8)
    assert np.all(s.abs_values == 0.0)


def test_sample_decay_degenerate_grid():
    s = dc.sample_decay(chi01(), PHI, XI, 50.0, 50.0, 5)
    assert len(s) == 1
    assert s.lams[0] == 50.0


def test_lambda_grid_validates():
    with pytest.raises(ValueError):
        dc.lambda_grid(0.0, 10.0, 4)


def test_sliding_envelope_width5():
    v = np.array([0.0, 1.0, 0.0, 0.0, 0.5, 0.2, 0.0])
    env = dc.sliding_envelope(v)
    assert env.tolist() == [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5]


def test_fit_exact_power_law():
    lams = np.geomspace(10, 1e4, 48)
    fit = dc.fit_exponent((lams, 3.0 * lams ** -2.0))
    assert fit.p_hat == pytest.approx(2.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    # the windowed-max envelope majorizes the samples, so c_hat >= c
    assert 3.0 <= fit.c_hat <= 3.0 * (lams[2] / lams[0]) ** 2 * (1 + 1e-9)


def test_fit_constant_samples():
    lams = np.geomspace(10, 1e4, 48)
    fit = dc.fit_exponent((lams, np.full(48, 0.7)))
    assert fit.p_hat == pytest.approx(0.0, abs=1e-12)


def test_fit_all_zero_sentinel():
    lams = np.geomspace(10, 1e4, 16)
    fit = dc.fit_exponent((lams, np.zeros(16)))
    assert math.isinf(fit.p_hat)


def test_fit_ignores_zero_values():
    lams = np.geomspace(10, 1e4, 48)
    vals = 2.0 * lams ** -1.0
    vals[::7] = 0.0  # zeros are absorbed by the envelope, fit stays clean
    fit = dc.fit_exponent((lams, vals))
    assert fit.p_hat == pytest.approx(1.0, abs=0.02)


def test_fit_window_is_top_decade():
    lams = np.geomspace(10, 1e4, 48)
    fit = dc.fit_exponent((lams, 1.0 * lams ** -1.0), window_fraction=1.0 / 3.0)
    assert fit.window[0] == pytest.approx(1e3, rel=1e-9)
    assert fit.window[1] == pytest.approx(1e4, rel=1e-9)


def test_fit_sinc_from_closed_form():
    lams = np.geomspace(10, 1e4, 96)
    fit = dc.fit_exponent((lams, 2.0 * np.abs(np.sin(lams / 2.0)) / lams))
    assert 0.95 <= fit.p_hat <= 1.05


def test_certify_chi_linear():
    s = dc.sample_decay(chi01(), PHI, XI, 10.0, 1e4, 48)
    cert = dc.certify_envelope(s, 1.0, 2.0)
    assert cert.ok  # |F| = 2|sin(lam/2)|/lam <= 2/lam
    cert_bad = dc.certify_envelope(s, 1.5, 2.0)
    assert not cert_bad.ok  # 2|sin|/lam beats c lam^-1.5 infinitely often


def test_certify_zero_samples():
    s = dc.sample_decay(zero_amp(), PHI, XI, 10.0, 100.0, 8)
    cert = dc.certify_envelope(s, 1.0, 1.0)
    assert cert.ok


def test_certify_rejects_bad_args():
    s = dc.sample_decay(chi01(), PHI, XI, 10.0, 100.0, 8)
    with pytest.raises(ValueError):
        dc.certify_envelope(s, -1.0, 1.0)
    with pytest.raises(ValueError):
        dc.certify_envelope(s, 1.0, 0.0)


def test_analyze_engine_round_trip():
    rep = dc.analyze(chi01(), PHI, XI, 10.0, 1e4, 96)
    assert 0.95 <= rep.p_hat <= 1.05
    assert rep.fit.r_squared > 0.9
    assert not rep.samples.low_confidence


def test_per_x_sweep_constants_finite_positive():
    # amplitude c(x) * chi_(0,1) with c(x) = 1 + x^2: fitted c_hat(x) tracks it
    for x in (0.0, 1.0, 2.0):
        c = 1.0 + x * x
        f = pl.PiecewisePowerLog((
            (pl.interval_cell(0.0, 1.0),
             (pl.PowerLogTerm(c, (Fraction(0),), (0,)),)),
        ))
        rep = dc.analyze(f, PHI, XI, 10.0, 1e4, 96)
        assert math.isfinite(rep.c_hat) and rep.c_hat > 0
        assert rep.c_hat == pytest.approx(2.0 * c, rel=0.35)
