"""Truncation machinery for decay analysis: the comparison function psi,
the increasing region family E_lam, the g/h factor split with its growth
bounds, and the vanishing complement mass."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import quad
from .powerlog import (
    Cell,
    PiecewisePowerLog,
    PowerLogTerm,
    UNIT_ONE,
    differentiate_term,
    power_log_integral,
)

DEFAULT_UNIT_BOUND = 1.5
SUP_SAMPLES = 4096


def psi(t: float, alpha_m: Fraction | float) -> float:
    """t^alpha for alpha != -1; t^(-1/2) on t <= 1 and t^(-2) on t > 1 when
    alpha = -1 (the integrable comparison function)."""
    if t <= 0.0:
        raise ValueError("psi requires t > 0")
    a = Fraction(alpha_m) if not isinstance(alpha_m, Fraction) else alpha_m
    if a != -1:
        return t ** float(a)
    if t <= 1.0:
        return t ** -0.5
    return t ** -2.0


def psi_integral(alpha_m: Fraction, lo: float, hi: float) -> float:
    """Closed-form integral of psi(., alpha_m) over (lo, hi) in (0, inf)."""
    a = Fraction(alpha_m)
    if a != -1:
        return power_log_integral(a, 0, lo, hi)
    total = 0.0
    if lo < 1.0:
        total += power_log_integral(Fraction(-1, 2), 0, lo, min(hi, 1.0))
    if hi > 1.0:
        total += power_log_integral(Fraction(-2), 0, max(lo, 1.0), hi)
    return total


def default_parameters(N: int, alpha_m: Fraction) -> tuple:
    """Working parameter choices: p = 1/(4N) and r = min(p, 1/(4(|a|+1))).
    Any sufficiently small r works; this formula satisfies every case bound
    and is recorded in reports."""
    if N < 1:
        raise ValueError("N must be >= 1")
    p = 1.0 / (4.0 * N)
    r = min(p, 1.0 / (4.0 * (abs(float(alpha_m)) + 1.0)))
    return p, r


@dataclass(frozen=True)
class TruncationFamily:
    """Regions E_lam = {lam^-r < t < lam^r} cut to the cell, gated by the
    fiber-mass condition lam^-r < K^-1 int_cell psi; nested and increasing
    in lam by construction (verified)."""

    term: PowerLogTerm
    cell: Cell
    r: float
    K: float
    lam_grid: tuple
    regions: tuple  # of (lo, hi) or None, aligned with lam_grid
    psi_mass: float

    @property
    def axis(self):
        return self.cell.axes[-1]

    def region(self, lam: float):
        for g, reg in zip(self.lam_grid, self.regions):
            if g == lam:
                return reg
        raise KeyError(f"lam {lam} not in family grid")


def build_truncation(term: PowerLogTerm, cell: Cell, r: float,
                     lam_grid: Sequence[float],
                     K: float | None = None) -> TruncationFamily:
    """Per-lam truncation regions for the last axis of the cell.  K defaults
    to the term's declared unit bound (or 1.5 for the constant unit)."""
    if r <= 0.0:
        raise ValueError("r must be positive")
    if K is None:
        K = term.unit.bound if term.unit.bound is not None else DEFAULT_UNIT_BOUND
    ax = cell.axes[-1]
    alpha_m = term.alpha[-1]
    mass = psi_integral(alpha_m, ax.lower, ax.upper) / K
    regions = []
    grid = tuple(float(v) for v in lam_grid)
    for lam in grid:
        if lam <= 1.0:
            regions.append(None)
            continue
        gate = lam ** (-r)
        if not gate < mass:
            regions.append(None)
            continue
        lo = max(ax.lower, lam ** (-r))
        hi = min(ax.upper, lam ** r)
        regions.append((lo, hi) if lo < hi else None)
    fam = TruncationFamily(term, cell, float(r), float(K), grid,
                           tuple(regions), mass)
    _check_nesting(fam)
    return fam


def _check_nesting(fam: TruncationFamily) -> None:
    pairs = sorted(zip(fam.lam_grid, fam.regions))
    prev = None
    for lam, reg in pairs:
        if prev is not None and prev[1] is not None:
            if reg is None:
                raise AssertionError(f"family not increasing at lam={lam}")
            if reg[0] > prev[1][0] + 1e-15 or reg[1] < prev[1][1] - 1e-15:
                raise AssertionError(f"region at lam={lam} does not contain its predecessor")
        prev = (lam, reg)


@dataclass(frozen=True)
class FactorSplit:
    """f = g(y_<m) * h(y) with the unit attached to h; for m = 1 the g part
    is the bare coefficient."""

    g_terms: tuple  # PowerLogTerm over the leading axes (possibly empty)
    h_term: PowerLogTerm
    cell: Cell

    def g_value(self, ts_lead) -> np.ndarray:
        if not self.g_terms:
            shape = np.asarray(ts_lead[0]).shape if len(ts_lead) else ()
            return np.ones(shape)
        out = np.zeros(np.asarray(ts_lead[0]).shape)
        for t in self.g_terms:
            out = out + t.value_normalized(ts_lead)
        return out


def factor_split(term: PowerLogTerm, cell: Cell) -> FactorSplit:
    m = term.dimension
    if m == 1:
        h = PowerLogTerm(term.coefficient, term.alpha, term.beta, term.unit)
        return FactorSplit((), h, cell)
    g = PowerLogTerm(term.coefficient, term.alpha[:-1], term.beta[:-1], UNIT_ONE)
    h = PowerLogTerm(1.0, term.alpha[-1:], term.beta[-1:], term.unit)
    return FactorSplit((g,), h, cell)


def verify_factor_split(split: FactorSplit, term: PowerLogTerm,
                        samples: int = 512) -> float:
    """Max |g*h - f| over sampled points (should be ~1e-12 relative)."""
    pts = split.cell.sample_normalized(samples)
    ts = [pts[:, j] for j in range(split.cell.dimension)]
    full = term.value_normalized(ts)
    if split.cell.dimension == 1:
        prod = split.h_term.value_normalized(ts)
    else:
        prod = split.g_value(ts[:-1]) * split.h_term.value_normalized(ts[-1:])
    scale = 1.0 + np.max(np.abs(full))
    return float(np.max(np.abs(prod - full)) / scale)


def _fit_growth_exponent(lams, values) -> float:
    lams = np.asarray(lams, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if np.count_nonzero(keep) < 2:
        return 0.0
    slope, _ = np.polyfit(np.log(lams[keep]), np.log(values[keep]), 1)
    return float(slope)


@dataclass(frozen=True)
class HBoundRow:
    lam: float
    region: tuple
    sup_h: float
    int_abs_dh: float

    @property
    def lhs(self) -> float:
        return self.sup_h + self.int_abs_dh


@dataclass(frozen=True)
class HBoundReport:
    rows: tuple
    growth_exponent: float
    p: float
    minimal_constant: float

    @property
    def ok(self) -> bool:
        return self.growth_exponent <= self.p + 0.02


def _sup_abs_h(h_term: PowerLogTerm, lo: float, hi: float,
               samples: int = SUP_SAMPLES) -> float:
    # Monotone exploitation: pure powers have endpoint suprema.
    if h_term.beta[0] == 0 and h_term.unit.is_one:
        ends = np.array([lo, hi])
        return float(np.max(np.abs(h_term.value_normalized((ends,)))))
    ts = np.geomspace(lo, hi, samples)
    return float(np.max(np.abs(h_term.value_normalized((ts,)))))


def verify_h_bounds(split: FactorSplit, fam: TruncationFamily, p: float,
                    tol: float = 1e-8) -> HBoundReport:
    """Per-lam sup|h| (4096 log-spaced samples, endpoints when monotone)
    plus int |dh/dt_m| over the region; the fitted growth exponent of the
    left side must stay within p + 0.02."""
    ax = fam.axis
    h = split.h_term
    dcell = Cell((ax,))
    dh = differentiate_term(h, 0, 1)
    dh_pw = PiecewisePowerLog(((dcell, dh),))
    rows = []
    for lam, reg in zip(fam.lam_grid, fam.regions):
        if reg is None:
            continue
        lo, hi = reg
        sup_h = _sup_abs_h(h, lo, hi)
        # interval in original coordinates of this axis
        y_lo, y_hi = sorted((float(ax.original(lo)), float(ax.original(hi))))
        int_dh = quad.integrate_abs(dh_pw, interval=(y_lo, y_hi), tol=tol) if dh else 0.0
        rows.append(HBoundRow(lam, reg, sup_h, int_dh))
    if not rows:
        return HBoundReport((), 0.0, p, 0.0)
    growth = _fit_growth_exponent([r.lam for r in rows], [r.lhs for r in rows])
    minimal_c = max(r.lhs * r.lam ** (-p) for r in rows)
    return HBoundReport(tuple(rows), growth, p, minimal_c)


def verify_g_bound(split: FactorSplit, fam: TruncationFamily,
                   tol: float = 1e-9) -> dict:
    """2-D check of the g-factor chain: int over the E-projection of |g|
    must grow no faster than lam^r; G is the measured L1 quotient."""
    if split.cell.dimension != 2:
        raise ValueError("g-factor bound applies to 2-D scenarios")
    lead_ax = split.cell.axes[0]
    g_pw = PiecewisePowerLog(((Cell((lead_ax,)), split.g_terms),))
    rows = []
    for lam, reg in zip(fam.lam_grid, fam.regions):
        if reg is None:
            continue
        # The projection keeps leading coordinates whose fiber is nonempty;
        # for product cells that is the whole leading interval.
        mass = quad.integrate_abs(g_pw, tol=tol)
        rows.append((lam, mass))
    if not rows:
        return {"rows": (), "G": 0.0, "growth_exponent": 0.0, "r": fam.r, "ok": True}
    quotients = [mass * lam ** (-fam.r) for lam, mass in rows]
    growth = _fit_growth_exponent([r[0] for r in rows], [r[1] for r in rows])
    return {
        "rows": tuple(rows),
        "G": max(quotients),
        "growth_exponent": growth,
        "r": fam.r,
        "ok": growth <= fam.r + 0.02,
    }


def psi_minorization(split: FactorSplit, fam: TruncationFamily,
                     samples: int = SUP_SAMPLES) -> dict:
    """Check K^-1 psi(t_m) <= |h| at sampled points of the cell axis; valid
    on classified cells (middle cells need beta eliminated first)."""
    ax = fam.axis
    h = split.h_term
    hi = ax.upper if math.isfinite(ax.upper) else max(10.0 / fam.r, 100.0)
    lo = ax.lower if ax.lower > 0 else hi * 1e-12
    ts = np.geomspace(lo, hi, samples)
    hv = np.abs(h.value_normalized((ts,)))
    pv = np.array([psi(float(t), h.alpha[0]) for t in ts])
    ok = bool(np.all(pv / fam.K <= hv * (1.0 + 1e-9)))
    worst = float(np.max(pv / fam.K - hv))
    return {"ok": ok, "worst_gap": worst, "samples": samples}


@dataclass(frozen=True)
class ComplementMassReport:
    rows: tuple  # (lam, mass)
    decay_exponent: float
    decreasing: bool


def complement_mass(f: PiecewisePowerLog, fam: TruncationFamily,
                    tol_rel: float = 1e-6) -> ComplementMassReport:
    """Mass of |f| outside E_lam per lam, with the fitted decay exponent of
    the shrinking complement."""
    ax = fam.axis
    rows = []
    for lam, reg in zip(fam.lam_grid, fam.regions):
        pieces = []
        if reg is None:
            pieces.append((ax.lower, ax.upper))
        else:
            lo, hi = reg
            if ax.lower < lo:
                pieces.append((ax.lower, lo))
            if hi < ax.upper:
                pieces.append((hi, ax.upper))
        mass = 0.0
        for t_lo, t_hi in pieces:
            y_lo, y_hi = sorted((float(ax.original(t_lo)), float(ax.original(min(t_hi, 1e300)))))
            mass += quad.integrate_abs(f, interval=(y_lo, y_hi),
                                       tol=max(1e-14, tol_rel * 1e-3))
        rows.append((lam, mass))
    masses = [m for _, m in rows]
    decreasing = all(b <= a * (1.0 + 1e-9) for a, b in zip(masses[:-1], masses[1:]))
    nonzero = [(lam, m) for lam, m in rows if m > 0]
    if len(nonzero) >= 2:
        exponent = -_fit_growth_exponent([r[0] for r in nonzero],
                                         [r[1] for r in nonzero])
    else:
        exponent = math.inf if any(m == 0 for m in masses) else 0.0
    return ComplementMassReport(tuple(rows), exponent, decreasing)
