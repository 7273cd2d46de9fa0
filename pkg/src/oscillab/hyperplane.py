"""Decision procedure and empirical checks for the hyperplane condition:
does every hyperplane pull back to a null set under the phase?

For polynomial phases this is exact linear algebra: a positive-measure fiber
forces an identical affine relation among the components, so the condition
holds iff {1, phi_1, ..., phi_n} are linearly independent in the monomial
basis.  Non-polynomial phases get a sampled least-hyperplane fit, labeled
as a heuristic.  The counterexample generator reproduces the constant
|F(lam xi)| = vol(U) obstruction on a failing phase."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from . import expr as ex
from . import quad
from .phase import PhaseModel, Polynomial
from .powerlog import Cell, PiecewisePowerLog, PowerLogTerm, interval_cell

RANK_THRESHOLD = 1e-10
WITNESS_TOL = 1e-10


@dataclass(frozen=True)
class HyperplaneVerdict:
    passed: bool
    method: str  # "symbolic-rank" or "monte-carlo"
    witness_xi: tuple | None = None
    witness_b: float | None = None
    witness_residual: float | None = None
    detail: str = ""

    @property
    def witness(self) -> tuple | None:
        if self.witness_xi is None:
            return None
        return (self.witness_xi, self.witness_b)


def _coefficient_rows(phase: PhaseModel) -> tuple:
    monomials = {(0,) * phase.m}
    for comp in phase.components:
        monomials.update(comp.coeffs.keys())
    monomials = sorted(monomials, reverse=True)
    index = {mono: k for k, mono in enumerate(monomials)}
    rows = np.zeros((phase.n + 1, len(monomials)))
    rows[0, index[(0,) * phase.m]] = 1.0
    for i, comp in enumerate(phase.components):
        for mono, c in comp.coeffs.items():
            rows[i + 1, index[mono]] = c
    return rows, monomials


def _witness_from_kernel(kernel: np.ndarray) -> tuple:
    # kernel = (mu, xi_1..xi_n) with mu*1 + xi.phi == 0, so b = -mu.
    mu, xi = kernel[0], kernel[1:]
    scale = xi[np.argmax(np.abs(xi))]
    xi = xi / scale
    mu = mu / scale
    return tuple(float(v) for v in xi), float(-mu)


def _verify_witness(phase: PhaseModel, xi: tuple, b: float,
                    n_points: int = 100, box_half_width: float = 2.0) -> float:
    box = ex.DomainBox(tuple(ex.AxisInterval(-box_half_width, box_half_width)
                             for _ in range(phase.m)))
    pts = box.sample(n_points)
    worst = 0.0
    for row in pts:
        val = phase.evaluate(tuple(row))
        worst = max(worst, abs(float(np.dot(xi, val)) - b))
    return worst


def check_polynomial(phase: PhaseModel) -> HyperplaneVerdict:
    """Pass iff the coefficient vectors of {1, phi_1, .., phi_n} have rank
    n+1 (column-pivoted QR, threshold 1e-10 relative to the largest
    coefficient); on failure, a kernel vector provides the witness, verified
    to 1e-10 at 100 sample points.  Non-polynomial phases are routed to the
    Monte Carlo heuristic."""
    if not phase.is_polynomial:
        return monte_carlo_check(phase)
    rows, _ = _coefficient_rows(phase)
    scale = float(np.max(np.abs(rows)))
    _, pivoted_r, _ = scipy.linalg.qr(rows.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(pivoted_r))
    rank = int(np.sum(diag > RANK_THRESHOLD * scale))
    if rank == phase.n + 1:
        return HyperplaneVerdict(True, "symbolic-rank",
                                 detail=f"rank {rank} = n+1")
    u, _, _ = np.linalg.svd(rows)
    kernel = u[:, -1]  # left null vector: the vanishing row combination
    xi, b = _witness_from_kernel(kernel)
    residual = _verify_witness(phase, xi, b)
    if residual > WITNESS_TOL:
        raise ArithmeticError(
            f"rank-deficient phase produced an invalid witness (residual {residual:.3e})")
    return HyperplaneVerdict(False, "symbolic-rank", xi, b, residual,
                             detail=f"rank {rank} < n+1")


def monte_carlo_check(phase: PhaseModel, box: ex.DomainBox | None = None,
                      samples: int = 512,
                      threshold: float = 1e-8) -> HyperplaneVerdict:
    """Heuristic for non-polynomial phases: fit the best affine relation
    xi . phi = b over sampled points (smallest singular value of the
    centered sample matrix); a tiny residual yields a fail verdict with that
    witness, anything else a heuristic pass.  Never a proof."""
    if box is None:
        box = ex.DomainBox(tuple(ex.AxisInterval(-1.0, 1.0)
                                 for _ in range(phase.m)))
    pts = box.sample(samples)
    values = np.array([phase.evaluate(tuple(row)) for row in pts])
    design = np.hstack([np.ones((samples, 1)), values])
    _, svals, vt = np.linalg.svd(design, full_matrices=False)
    rel = svals[-1] / max(svals[0], 1e-300)
    if rel < threshold:
        xi, b = _witness_from_kernel(vt[-1])
        residual = float(np.max(np.abs(values @ np.asarray(xi) - b)))
        return HyperplaneVerdict(False, "monte-carlo", xi, b, residual,
                                 detail=f"sampled affine relation, sigma_rel={rel:.2e}")
    return HyperplaneVerdict(True, "monte-carlo",
                             detail=f"no sampled affine relation (sigma_rel={rel:.2e}); heuristic only")


@dataclass(frozen=True)
class FiberEstimate:
    fraction: float
    ci_low: float
    ci_high: float
    samples: int
    delta: float


def monte_carlo_fiber(phase: PhaseModel, hyperplane: tuple, box: ex.DomainBox,
                      samples: int, delta: float,
                      seed: int = 0) -> FiberEstimate:
    """Fraction of uniform samples with |xi . phi(y) - b| < delta, with a
    95% binomial (normal approximation) confidence interval.  A heuristic
    flag only, never a proof."""
    xi, b = hyperplane
    rng = np.random.default_rng(seed)
    lows = np.array([ax.lower for ax in box.axes])
    highs = np.array([ax.upper for ax in box.axes])
    pts = rng.uniform(lows, highs, size=(samples, box.dimension))
    comps = phase.component_arrays([pts[:, j] for j in range(box.dimension)])
    vals = np.zeros(samples)
    for w, comp in zip(xi, comps):
        vals = vals + w * comp
    hits = int(np.count_nonzero(np.abs(vals - b) < delta))
    p = hits / samples
    half = 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / samples)
    return FiberEstimate(p, max(0.0, p - half), min(1.0, p + half), samples, delta)


def characteristic_box(intervals: Sequence) -> PiecewisePowerLog:
    """Characteristic function of a product box as a prepared amplitude;
    axes straddling 0 are split at the center."""
    axis_spans = []
    for lo, hi in intervals:
        if lo < 0.0 < hi:
            axis_spans.append([(lo, 0.0), (0.0, hi)])
        else:
            axis_spans.append([(lo, hi)])
    pieces = []
    def build(prefix, remaining):
        if not remaining:
            axes = tuple(interval_cell(lo, hi).axes[0] for lo, hi in prefix)
            m = len(prefix)
            term = PowerLogTerm(1.0, (Fraction(0),) * m, (0,) * m)
            pieces.append((Cell(axes), (term,)))
            return
        for span in remaining[0]:
            build(prefix + [span], remaining[1:])
    build([], axis_spans)
    return PiecewisePowerLog(tuple(pieces))


@dataclass(frozen=True)
class CounterexampleReport:
    volume: float
    rows: tuple  # of (lam, abs_F)
    witness: tuple
    max_deviation: float


def counterexample_integral(phase: PhaseModel, witness: tuple, box: Sequence,
                            lam_grid: Sequence[float],
                            tol: float = 1e-10) -> CounterexampleReport:
    """With f the characteristic function of U inside the witness fiber,
    |F(lam xi)| stays equal to vol(U) for every lam: a decay envelope of any
    positive exponent is impossible for this phase."""
    xi, b = witness
    xi_arr = np.asarray(xi, dtype=float)
    norm = float(np.linalg.norm(xi_arr))
    if norm == 0.0:
        raise ValueError("witness xi must be nonzero")
    unit = tuple(xi_arr / norm)
    intervals = [(float(lo), float(hi)) for lo, hi in box]
    # sampled containment check: U must sit inside the fiber
    sample_box = ex.DomainBox(tuple(ex.AxisInterval(lo, hi) for lo, hi in intervals))
    for row in sample_box.sample(200):
        val = float(np.dot(xi_arr, phase.evaluate(tuple(row))))
        if abs(val - b) > 1e-9 * (1.0 + abs(b)):
            raise ValueError(
                f"box is not inside the fiber: |xi.phi - b| = {abs(val - b):.3e} at {tuple(row)}")
    f = characteristic_box(intervals)
    volume = 1.0
    for lo, hi in intervals:
        volume *= hi - lo
    rows = []
    worst = 0.0
    for lam in lam_grid:
        lam = float(lam)
        res = quad.integrate_oscillatory(f, phase, unit, lam * norm, tol=tol)
        mag = abs(res.value)
        rows.append((lam, mag))
        worst = max(worst, abs(mag - volume))
    return CounterexampleReport(volume, tuple(rows), (tuple(float(v) for v in xi), float(b)),
                                worst)
