"""Van der Corput inequality lab: the constant c_d = 5*2^(d-1) - 2, the
bound c_d (lam eps)^(-1/d) (min endpoint |f| + int |f'|), sampled hypothesis
certification, and numerical verification certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import quad
from .phase import PhaseModel
from .powerlog import LimitDivergesError, PiecewisePowerLog, one_sided_limit

HYPOTHESIS_SAMPLES = 4096
SAFETY = 0.95
DEFAULT_ALLOWANCE = 1e-8


def cd_constant(d: int) -> int:
    """c_d = 5 * 2^(d-1) - 2, exactly."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    return 5 * 2 ** (d - 1) - 2


def vdc_bound(d: int, eps: float, lam: float, f_a: float, f_b: float,
              tv: float) -> float:
    """c_d / (lam*eps)^(1/d) * (min(|f_a|, |f_b|) + tv)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if tv < 0.0:
        raise ValueError("total variation must be nonnegative")
    return cd_constant(d) / (lam * eps) ** (1.0 / d) * (min(abs(f_a), abs(f_b)) + tv)


@dataclass(frozen=True)
class HypothesisEvidence:
    d: int
    interval: tuple
    samples: int
    min_abs_derivative: float
    derivative_sign_constant: bool
    second_derivative_sign_constant: bool | None  # populated for d = 1 only


def check_hypotheses(phase: PhaseModel, xi: Sequence[float], d: int,
                     interval: tuple,
                     samples: int = HYPOTHESIS_SAMPLES) -> tuple:
    """eps certified as 0.95 * min over `samples` points of |phi^(d)|,
    or 0 when a sample vanishes, phi^(d) changes sign, or (d = 1) phi'' is
    not of constant sign.  Returns (eps, HypothesisEvidence)."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    scalar = phase.scalar(xi)
    a, b = float(interval[0]), float(interval[1])
    ts = np.linspace(a, b, samples)
    dv = scalar.derivative_values(ts, d)
    min_abs = float(np.min(np.abs(dv)))
    sign_const = not (np.any(dv > 0.0) and np.any(dv < 0.0))
    second_const = None
    if d == 1:
        d2 = scalar.derivative_values(ts, 2)
        second_const = not (np.any(d2 > 0.0) and np.any(d2 < 0.0))
    ok = min_abs > 0.0 and sign_const and (second_const is not False)
    eps = SAFETY * min_abs if ok else 0.0
    return eps, HypothesisEvidence(d, (a, b), samples, min_abs, sign_const, second_const)


def total_variation(f: PiecewisePowerLog, interval: tuple,
                    tol: float = 1e-10) -> float:
    """int_a^b |f'| by monotone decomposition: isolate the sign changes of
    the symbolic derivative, then sum the |f| increments over each
    constant-sign stretch (FTC).  Falls back to direct quadrature of |f'|
    when a one-sided limit diverges."""
    a, b = float(interval[0]), float(interval[1])
    df = f.differentiate(0)
    points = {a, b}
    for cell, _ in f.pieces:
        lo, hi = cell.axes[0].y_interval()
        for p in (lo, hi):
            if math.isfinite(p) and a < p < b:
                points.add(p)
    for idx, (cell, terms) in enumerate(df.pieces):
        if not terms:
            continue
        ax = cell.axes[0]
        lo, hi = ax.y_interval()
        lo, hi = max(lo, a), min(hi, b)
        if not lo < hi:
            continue
        if math.isinf(lo) or math.isinf(hi):
            # Unbounded stretch: no finite scan; rely on the quadrature path.
            return quad.integrate_abs(df, interval=(a, b), tol=tol)
        amp = df.cell_amplitude(idx)
        t_lo, t_hi = sorted((float(ax.normalized(lo)), float(ax.normalized(hi))))
        pad = 1e-12 * (1.0 + abs(t_lo) + abs(t_hi))
        grid = np.linspace(t_lo + pad, t_hi - pad, 2049)
        roots_t = quad._sign_change_roots(grid, amp(grid), amp)
        points.update(float(ax.original(t)) for t in roots_t)
    cuts = sorted(points)
    try:
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            left = one_sided_limit(f, lo, +1)
            right = one_sided_limit(f, hi, -1)
            total += abs(right - left)
        # Piecewise-differentiable amplitudes carry variation in their jumps
        # too (the Stieltjes form of the bound); count interior jumps.
        for p in cuts[1:-1]:
            total += abs(one_sided_limit(f, p, +1) - one_sided_limit(f, p, -1))
        return total
    except LimitDivergesError:
        return quad.integrate_abs(df, interval=(a, b), tol=tol)


@dataclass(frozen=True)
class VdcRow:
    lam: float
    actual: float
    bound: float
    margin: float
    quadrature_error: float
    low_confidence: bool


@dataclass(frozen=True)
class VdcCertificate:
    d: int
    eps: float
    interval: tuple
    endpoint_values: tuple
    total_variation: float
    rows: tuple  # of VdcRow
    evidence: HypothesisEvidence
    allowance: float = DEFAULT_ALLOWANCE
    notes: tuple = field(default=())

    @property
    def verdict(self) -> bool:
        return all(r.actual <= r.bound + self.allowance for r in self.rows)

    @property
    def low_confidence(self) -> bool:
        return any(r.low_confidence for r in self.rows)

    def csv_rows(self) -> list:
        return [(r.lam, r.actual, r.bound, r.margin) for r in self.rows]

    def json_header(self) -> dict:
        return {
            "d": self.d,
            "epsilon": self.eps,
            "interval": list(self.interval),
            "verdict": "pass" if self.verdict else "fail",
            "endpoint_values": list(self.endpoint_values),
            "total_variation": self.total_variation,
            "allowance": self.allowance,
            "min_abs_derivative": self.evidence.min_abs_derivative,
            "safety_factor": SAFETY,
            "low_confidence": self.low_confidence,
        }


def verify(f: PiecewisePowerLog, phase: PhaseModel, xi: Sequence[float], d: int,
           interval: tuple, lam_grid: Sequence[float],
           tol: float = 1e-10, allowance: float = DEFAULT_ALLOWANCE) -> VdcCertificate:
    """Compare |int_a^b f e^{i lam xi.phi}| against the certified bound on
    every lam of the grid.  Quadrature low-confidence flags propagate into
    the certificate rows."""
    eps, evidence = check_hypotheses(phase, xi, d, interval)
    if eps <= 0.0:
        raise ValueError("derivative hypothesis failed: certified eps is 0")
    a, b = float(interval[0]), float(interval[1])
    f_a = one_sided_limit(f, a, +1)
    f_b = one_sided_limit(f, b, -1)
    tv = total_variation(f, (a, b))
    rows = []
    for lam in sorted(float(v) for v in lam_grid):
        res = quad.integrate_oscillatory(f, phase, xi, lam, tol=tol,
                                         interval=(a, b))
        actual = abs(res.value)
        bound = vdc_bound(d, eps, lam, f_a, f_b, tv)
        rows.append(VdcRow(lam, actual, bound, bound - actual, res.error,
                           res.low_confidence))
    return VdcCertificate(d, eps, (a, b), (f_a, f_b), tv, tuple(rows),
                          evidence, allowance)
