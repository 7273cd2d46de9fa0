"""Sampling |F(lam xi)| on log grids, envelope extraction, decay-exponent
fitting, and certification of candidate envelopes g * lam^(-p).

|F| oscillates through zeros (sinc-like), so fitting raw samples is
meaningless: the fit runs on sliding-window maxima (width 5) over the
lam-sorted samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import quad
from .phase import PhaseModel
from .powerlog import PiecewisePowerLog

DEFAULT_POINTS = 48
DEFAULT_LAMBDA_MIN = 10.0
DEFAULT_LAMBDA_MAX = 1e4
ENVELOPE_WIDTH = 5
DEFAULT_WINDOW_FRACTION = 1.0 / 3.0
INFINITE_EXPONENT = math.inf


@dataclass(frozen=True)
class DecaySamples:
    lams: np.ndarray
    values: np.ndarray  # complex F(lam)
    errors: np.ndarray  # per-sample quadrature error estimates
    low_confidence: bool

    @property
    def abs_values(self) -> np.ndarray:
        return np.abs(self.values)

    def __len__(self) -> int:
        return len(self.lams)


def lambda_grid(lam_min: float, lam_max: float, points: int) -> np.ndarray:
    if lam_min <= 0:
        raise ValueError("lam_min must be positive")
    if lam_min == lam_max or points == 1:
        return np.array([float(lam_min)])
    return np.geomspace(float(lam_min), float(lam_max), int(points))


def sample_decay(f: PiecewisePowerLog, phase: PhaseModel, xi: Sequence[float],
                 lam_min: float = DEFAULT_LAMBDA_MIN,
                 lam_max: float = DEFAULT_LAMBDA_MAX,
                 points: int = DEFAULT_POINTS,
                 tol: float | None = None) -> DecaySamples:
    """Sample F on a log-spaced grid.  With tol=None, a coarse 8-point
    pre-pass fits a provisional envelope and each sample then runs at
    1e-3 of the predicted envelope value (floored at 1e-13)."""
    lams = lambda_grid(lam_min, lam_max, points)
    if tol is None:
        pre = lambda_grid(lam_min, lam_max, min(8, len(lams)))
        pre_abs = []
        for lam in pre:
            res = quad.integrate_oscillatory(f, phase, xi, float(lam), tol=1e-8)
            pre_abs.append(abs(res.value))
        env = sliding_envelope(np.asarray(pre_abs), width=3)
        keep = env > 0
        if np.count_nonzero(keep) >= 2:
            slope, intercept = np.polyfit(np.log(pre[keep]), np.log(env[keep]), 1)
            def tol_at(lam):
                return float(np.clip(1e-3 * math.exp(intercept) * lam ** slope,
                                     1e-13, 1e-4))
        else:
            def tol_at(lam):
                return 1e-10
    else:
        def tol_at(lam):
            return float(tol)

    vals, errs = [], []
    low = False
    for lam in lams:
        res = quad.integrate_oscillatory(f, phase, xi, float(lam), tol=tol_at(lam))
        vals.append(res.value)
        errs.append(res.error)
        low = low or res.low_confidence
    return DecaySamples(lams, np.asarray(vals, dtype=complex),
                        np.asarray(errs), low)


def sliding_envelope(abs_values: np.ndarray, width: int = ENVELOPE_WIDTH) -> np.ndarray:
    """Centered sliding-window maxima (window clipped at the ends)."""
    v = np.asarray(abs_values, dtype=float)
    n = len(v)
    half = width // 2
    out = np.empty(n)
    for i in range(n):
        out[i] = v[max(0, i - half):min(n, i + half + 1)].max()
    return out


@dataclass(frozen=True)
class ExponentFit:
    p_hat: float
    c_hat: float
    r_squared: float
    window: tuple  # (lam_lo, lam_hi) actually used
    points_used: int


def fit_exponent(samples, window_fraction: float = DEFAULT_WINDOW_FRACTION,
                 envelope_width: int = ENVELOPE_WIDTH) -> ExponentFit:
    """Log-log least squares on the envelope over the top `window_fraction`
    of the lambda range (log scale).  Zero envelope values are dropped; all
    zero yields the +inf sentinel."""
    if isinstance(samples, DecaySamples):
        lams = samples.lams
        abs_values = samples.abs_values
    else:
        lams, abs_values = samples
        lams = np.asarray(lams, dtype=float)
        abs_values = np.asarray(abs_values, dtype=float)
    env = sliding_envelope(abs_values, envelope_width)
    lam_lo = lams[-1] * (lams[0] / lams[-1]) ** window_fraction
    mask = lams >= lam_lo * (1.0 - 1e-12)
    keep = mask & (env > 0.0)
    if not np.any(env > 0.0):
        return ExponentFit(INFINITE_EXPONENT, 0.0, 1.0,
                           (float(lam_lo), float(lams[-1])), 0)
    x = np.log(lams[keep])
    y = np.log(env[keep])
    if len(x) < 2 or np.ptp(x) == 0.0:
        return ExponentFit(0.0, float(np.exp(y.mean())) if len(y) else 0.0,
                           0.0, (float(lam_lo), float(lams[-1])), len(x))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = intercept + slope * x
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(-slope), float(math.exp(intercept)), r2,
                       (float(lam_lo), float(lams[-1])), int(np.sum(keep)))


@dataclass(frozen=True)
class EnvelopeCertificate:
    ok: bool
    p: float
    g: float
    worst_margin: float
    worst_lam: float
    allowance: float


def certify_envelope(samples, p: float, g_value: float,
                     allowance: float | None = None) -> EnvelopeCertificate:
    """True iff every sample satisfies |F| <= g * lam^(-p) + allowance;
    the allowance defaults to each sample's quadrature error estimate."""
    if p <= 0.0 or g_value <= 0.0:
        raise ValueError("p and g must be positive")
    if isinstance(samples, DecaySamples):
        lams = samples.lams
        abs_values = samples.abs_values
        errors = samples.errors
    else:
        lams, abs_values = samples
        lams = np.asarray(lams, dtype=float)
        abs_values = np.asarray(abs_values, dtype=float)
        errors = np.zeros_like(lams)
    worst_margin = math.inf
    worst_lam = float(lams[0]) if len(lams) else 0.0
    ok = True
    base_allow = allowance
    for lam, val, err in zip(lams, abs_values, errors):
        allow = float(err) + 1e-12 if base_allow is None else base_allow
        bound = g_value * lam ** (-p)
        margin = bound + allow - val
        if margin < worst_margin:
            worst_margin = margin
            worst_lam = float(lam)
        if val > bound + allow:
            ok = False
    if not len(lams):
        worst_margin = 0.0
    return EnvelopeCertificate(ok, p, g_value, float(worst_margin), worst_lam,
                               0.0 if base_allow is None else base_allow)


@dataclass(frozen=True)
class DecayFitReport:
    samples: DecaySamples
    envelope: np.ndarray
    fit: ExponentFit
    certificate: EnvelopeCertificate | None

    @property
    def p_hat(self) -> float:
        return self.fit.p_hat

    @property
    def c_hat(self) -> float:
        return self.fit.c_hat


def analyze(f: PiecewisePowerLog, phase: PhaseModel, xi: Sequence[float],
            lam_min: float = DEFAULT_LAMBDA_MIN, lam_max: float = DEFAULT_LAMBDA_MAX,
            points: int = DEFAULT_POINTS, tol: float | None = None,
            window_fraction: float = DEFAULT_WINDOW_FRACTION,
            certify: tuple | None = None) -> DecayFitReport:
    """Sample, fit, and optionally certify a (p, g) candidate pair."""
    samples = sample_decay(f, phase, xi, lam_min, lam_max, points, tol)
    fit = fit_exponent(samples, window_fraction)
    cert = None
    if certify is not None:
        p, g = certify
        cert = certify_envelope(samples, p, g)
    return DecayFitReport(samples, sliding_envelope(samples.abs_values), fit, cert)
