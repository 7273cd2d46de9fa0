"""Prepared power-log amplitudes: cells with centers, terms
c * |t|^alpha * (log|t|)^beta * u(t), units, term calculus, and the
alpha-only integrability criterion.

Coordinates: every cell stores per-axis (center, sign, positive interval);
the normalized coordinate is t_j = sign_j * (y_j - center_j), always in
(0, inf).  Units are expressions in the normalized coordinates t (written
y1..ym in the expression grammar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaincc

from . import expr as ex

E = math.e
_CLASS_TOL = 1e-12

NEAR_ZERO = "nearZero"
MIDDLE = "middle"
FAR = "far"
CUSTOM = "custom"


class PartitionError(Exception):
    """A point lies in more than one cell: the partition is malformed."""


class NotIntegrableError(Exception):
    pass


class LimitDivergesError(Exception):
    """A one-sided limit of a prepared term diverges."""


class UnitValidationError(Exception):
    pass


# --------------------------------------------------------------------------
# Units


@dataclass(frozen=True)
class UnitSpec:
    """A phi-unit: constant 1 or an expression bounded in (1/K, K) on its
    cell, with |t_l * du/dt_l| < K (checked by sampling).  Derived terms may
    carry expressions without a bound claim (bound=None)."""

    expression: ex.Expr | None = None
    bound: float | None = None

    @property
    def is_one(self) -> bool:
        return self.expression is None

    def value(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        if self.expression is None:
            shape = np.asarray(axes[0]).shape if len(axes) else ()
            return np.ones(shape)
        return ex.evaluate_array(self.expression, axes)

    def partial(self, axis: int) -> ex.Expr | None:
        """d/dt_axis (0-based); None when identically zero."""
        if self.expression is None:
            return None
        d = ex.differentiate(self.expression, axis + 1)
        if d == ex.ZERO:
            return None
        return d


UNIT_ONE = UnitSpec()


# --------------------------------------------------------------------------
# Cells


@dataclass(frozen=True)
class CellAxis:
    """One axis: normalized interval (lower, upper) with 0 <= lower < upper,
    plus the center/sign mapping t = sign*(y - center)."""

    lower: float
    upper: float
    center: float = 0.0
    sign: int = 1
    lower_closed: bool = False
    upper_closed: bool = False

    def __post_init__(self):
        if self.lower < 0.0 or not self.lower < self.upper:
            raise ValueError(f"invalid cell axis ({self.lower}, {self.upper})")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def adjacent_to_center(self) -> bool:
        return self.lower == 0.0

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.upper)

    def classify(self) -> str:
        if self.adjacent_to_center and abs(self.upper - 1.0 / E) <= _CLASS_TOL:
            return NEAR_ZERO
        if abs(self.lower - 1.0 / E) <= _CLASS_TOL and abs(self.upper - E) <= _CLASS_TOL:
            return MIDDLE
        if self.unbounded and abs(self.lower - E) <= _CLASS_TOL:
            return FAR
        return CUSTOM

    def normalized(self, y) -> np.ndarray:
        return self.sign * (np.asarray(y, dtype=float) - self.center)

    def original(self, t) -> np.ndarray:
        return self.center + self.sign * np.asarray(t, dtype=float)

    def contains_normalized(self, t: float) -> bool:
        lo_ok = t >= self.lower if self.lower_closed else t > self.lower
        hi_ok = t <= self.upper if self.upper_closed else t < self.upper
        return lo_ok and hi_ok

    def y_interval(self) -> tuple:
        """Image interval in original coordinates, ordered (lo, hi)."""
        a = self.center + self.sign * self.lower
        b = self.center + self.sign * self.upper
        return (min(a, b), max(a, b))


@dataclass(frozen=True)
class Cell:
    axes: tuple  # of CellAxis

    def __post_init__(self):
        for ax in self.axes:
            if ax.contains_normalized(0.0):
                raise ValueError("cell axis interval contains its center")

    @property
    def dimension(self) -> int:
        return len(self.axes)

    def contains(self, y: Sequence[float]) -> bool:
        return all(ax.contains_normalized(float(ax.normalized(v)))
                   for ax, v in zip(self.axes, y))

    def sample_normalized(self, n: int) -> np.ndarray:
        """Quasi-random points in normalized coordinates, shape (n, m)."""
        box = ex.DomainBox(tuple(ex.AxisInterval(ax.lower, ax.upper) for ax in self.axes))
        return box.sample(n)


def interval_cell(lo: float, hi: float, center: float = 0.0,
                  lower_closed: bool = False, upper_closed: bool = False) -> Cell:
    """1-D cell from an interval in original coordinates (must not contain
    the center); the sign flip is inferred."""
    a, b = lo - center, hi - center
    if a < 0 and b <= 0:
        return Cell((CellAxis(-b, -a, center, -1, upper_closed, lower_closed),))
    if a >= 0 and b > 0:
        return Cell((CellAxis(a, b, center, 1, lower_closed, upper_closed),))
    raise ValueError(f"interval ({lo}, {hi}) straddles its center {center}")


def box_cell(intervals: Sequence[tuple], centers: Sequence[float] | None = None) -> Cell:
    centers = centers or [0.0] * len(intervals)
    axes = []
    for (lo, hi), c in zip(intervals, centers):
        axes.append(interval_cell(lo, hi, c).axes[0])
    return Cell(tuple(axes))


# --------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class PowerLogTerm:
    coefficient: float
    alpha: tuple  # of Fraction
    beta: tuple  # of int
    unit: UnitSpec = UNIT_ONE

    def __post_init__(self):
        if len(self.alpha) != len(self.beta):
            raise ValueError("alpha and beta must have equal length")
        for b in self.beta:
            if b < 0:
                raise ValueError("beta entries must be natural numbers")

    @property
    def dimension(self) -> int:
        return len(self.alpha)

    def value_normalized(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate at positive normalized coordinates (arrays, equal shape)."""
        ts = [np.asarray(a, dtype=float) for a in axes]
        out = np.full(ts[0].shape, self.coefficient)
        for j, (a, b) in enumerate(zip(self.alpha, self.beta)):
            t = ts[j]
            if a != 0:
                out = out * t ** float(a)
            if b != 0:
                out = out * np.log(t) ** b
        if not self.unit.is_one:
            out = out * self.unit.value(ts)
        return out

    def scaled(self, factor: float) -> "PowerLogTerm":
        return PowerLogTerm(self.coefficient * factor, self.alpha, self.beta, self.unit)


def differentiate_term(term: PowerLogTerm, axis: int, sign: int = 1) -> tuple:
    """d/dy_axis of a term (axis 0-based), as a tuple of closed-form terms.

    With t = sign*(y - center) on an interval not crossing 0:
        d/dy [t^a (log t)^b u] = sign * ( a t^(a-1) (log t)^b u
                                        + b t^(a-1) (log t)^(b-1) u
                                        + t^a (log t)^b du/dt ).
    The middle term is dropped when b = 0, the first when a = 0.
    """
    a = term.alpha[axis]
    b = term.beta[axis]
    lowered_alpha = tuple(v - 1 if j == axis else v for j, v in enumerate(term.alpha))
    out = []
    if a != 0:
        out.append(PowerLogTerm(term.coefficient * float(a) * sign,
                                lowered_alpha, term.beta, term.unit))
    if b != 0:
        lowered_beta = tuple(v - 1 if j == axis else v for j, v in enumerate(term.beta))
        out.append(PowerLogTerm(term.coefficient * b * sign,
                                lowered_alpha, lowered_beta, term.unit))
    du = term.unit.partial(axis)
    if du is not None:
        out.append(PowerLogTerm(term.coefficient * sign, term.alpha, term.beta,
                                UnitSpec(du, None)))
    return tuple(out)


# --------------------------------------------------------------------------
# Piecewise amplitudes


@dataclass(frozen=True)
class PiecewisePowerLog:
    pieces: tuple  # of (Cell, tuple of PowerLogTerm)

    @property
    def dimension(self) -> int:
        return self.pieces[0][0].dimension if self.pieces else 1

    def eval(self, y) -> float:
        """Value at a point; 0 outside all cells; PartitionError if the point
        lies in more than one cell."""
        point = [float(v) for v in np.atleast_1d(y)]
        hits = [(cell, terms) for cell, terms in self.pieces if cell.contains(point)]
        if not hits:
            return 0.0
        if len(hits) > 1:
            raise PartitionError(f"point {point} lies in {len(hits)} cells")
        cell, terms = hits[0]
        ts = tuple(np.asarray(float(ax.normalized(v))) for ax, v in zip(cell.axes, point))
        return float(sum(t.value_normalized(ts) for t in terms))

    def cell_amplitude(self, index: int) -> Callable:
        """Vectorized amplitude of one piece in normalized coordinates."""
        _, terms = self.pieces[index]

        def amp(*axes):
            ts = [np.asarray(a, dtype=float) for a in axes]
            out = np.zeros(ts[0].shape)
            for t in terms:
                out = out + t.value_normalized(ts)
            return out

        return amp

    def differentiate(self, axis: int) -> "PiecewisePowerLog":
        """d/dy_axis applied per cell (uses each cell's axis sign)."""
        out = []
        for cell, terms in self.pieces:
            sign = cell.axes[axis].sign
            derived = []
            for t in terms:
                derived.extend(differentiate_term(t, axis, sign))
            out.append((cell, tuple(derived)))
        return PiecewisePowerLog(tuple(out))

    def scaled(self, factor: float) -> "PiecewisePowerLog":
        return PiecewisePowerLog(tuple(
            (cell, tuple(t.scaled(factor) for t in terms)) for cell, terms in self.pieces))


# --------------------------------------------------------------------------
# Integrability (the alpha-only criterion)


@dataclass(frozen=True)
class AxisVerdict:
    axis: int
    integrable: bool
    reason: str


@dataclass(frozen=True)
class TermVerdict:
    piece: int
    term: int
    integrable: bool
    axes: tuple  # of AxisVerdict


@dataclass(frozen=True)
class IntegrabilityReport:
    verdicts: tuple  # of TermVerdict

    @property
    def all_integrable(self) -> bool:
        return all(v.integrable for v in self.verdicts)


def axis_integrability(ax: CellAxis, alpha: Fraction) -> AxisVerdict:
    adjacent = ax.adjacent_to_center
    unbounded = ax.unbounded
    if not adjacent and not unbounded:
        return AxisVerdict(0, True, "bounded away from center and infinity")
    if alpha == -1:
        return AxisVerdict(0, False, "alpha = -1 diverges for every beta")
    ok = True
    reasons = []
    if adjacent:
        if alpha > -1:
            reasons.append("alpha > -1 at the center")
        else:
            ok = False
            reasons.append("alpha < -1 at the center: diverges")
    if unbounded:
        if alpha < -1:
            reasons.append("alpha < -1 at infinity")
        else:
            ok = False
            reasons.append("alpha > -1 at infinity: diverges")
    return AxisVerdict(0, ok, "; ".join(reasons))


def is_integrable(f: PiecewisePowerLog) -> IntegrabilityReport:
    """Per-cell, per-term verdicts; the term verdict is the conjunction over
    axes.  Independent of beta by design."""
    verdicts = []
    for pi, (cell, terms) in enumerate(f.pieces):
        for ti, term in enumerate(terms):
            axes = []
            for j, ax in enumerate(cell.axes):
                v = axis_integrability(ax, term.alpha[j])
                axes.append(AxisVerdict(j, v.integrable, v.reason))
            verdicts.append(TermVerdict(pi, ti, all(a.integrable for a in axes), tuple(axes)))
    return IntegrabilityReport(tuple(verdicts))


def integral_abs(f: PiecewisePowerLog, interval: tuple | None = None,
                 tol: float = 1e-9) -> float:
    """Numerical integral of |f| (1-D) via the quadrature engine."""
    report = is_integrable(f)
    if not report.all_integrable:
        raise NotIntegrableError("amplitude is not integrable on some cell")
    from . import quad

    return quad.integrate_abs(f, interval=interval, tol=tol)


# --------------------------------------------------------------------------
# Closed-form power-log integrals (plumbing shared by quad and proofkit)


def _gamma_upper(k: int, x: float) -> float:
    # Upper incomplete gamma with integer shape: Gamma(k, x) = (k-1)! * Q(k, x).
    return math.factorial(k - 1) * float(gammaincc(k, x))


def tail_integral(alpha: Fraction, beta: int, lower: float) -> float:
    """Integral of t^alpha (log t)^beta on (lower, inf); requires alpha < -1
    and lower >= 1."""
    a = float(alpha)
    if a >= -1.0:
        raise NotIntegrableError("tail integral requires alpha < -1")
    if lower < 1.0:
        raise ValueError("tail_integral requires lower >= 1")
    s = -(a + 1.0)
    return _gamma_upper(beta + 1, s * math.log(lower)) / s ** (beta + 1)


def head_integral(alpha: Fraction, beta: int, upper: float) -> float:
    """Signed integral of t^alpha (log t)^beta on (0, upper); requires
    alpha > -1 and upper <= 1."""
    a = float(alpha)
    if a <= -1.0:
        raise NotIntegrableError("head integral requires alpha > -1")
    if upper > 1.0:
        raise ValueError("head_integral requires upper <= 1")
    s = a + 1.0
    return ((-1.0) ** beta) * _gamma_upper(beta + 1, s * (-math.log(upper))) / s ** (beta + 1)


def power_log_integral(alpha: Fraction, beta: int, lo: float, hi: float) -> float:
    """Signed integral of t^alpha (log t)^beta over (lo, hi) subset (0, inf)."""
    if lo >= hi:
        return 0.0
    a = float(alpha)
    if lo == 0.0 and hi <= 1.0:
        return head_integral(alpha, beta, hi)
    if math.isinf(hi) and lo >= 1.0:
        if a == -1.0:
            raise NotIntegrableError("alpha = -1 tail diverges")
        return tail_integral(alpha, beta, lo)
    if lo == 0.0:
        return head_integral(alpha, beta, 1.0) + power_log_integral(alpha, beta, 1.0, hi)
    if math.isinf(hi):
        return power_log_integral(alpha, beta, lo, 1.0) + tail_integral(alpha, beta, 1.0)
    # Finite positive interval: integrate exactly by parts in v = log t.
    # I(a, b) = int t^a (log t)^b dt; for a != -1:
    #   I = [t^(a+1)/(a+1) (log t)^b] - b/(a+1) * I(a, b-1);
    # for a = -1: I = (log t)^(b+1)/(b+1).
    if a == -1.0:
        return (math.log(hi) ** (beta + 1) - math.log(lo) ** (beta + 1)) / (beta + 1)
    total = 0.0
    coef = 1.0
    for k in range(beta, -1, -1):
        boundary = (hi ** (a + 1) * math.log(hi) ** k - lo ** (a + 1) * math.log(lo) ** k) / (a + 1)
        total += coef * boundary
        coef *= -k / (a + 1.0)
    return total


# --------------------------------------------------------------------------
# One-sided limits (symbolic, for FTC/IBP hypotheses)


def _term_limit_at_zero(term: PowerLogTerm) -> float:
    a, b = term.alpha[0], term.beta[0]
    if a > 0:
        return 0.0
    if a == 0 and b == 0:
        if term.unit.is_one:
            return term.coefficient
        try:
            u0 = float(ex.evaluate(term.unit.expression, (0.0,)))
        except ex.ExprError:
            u0 = float(ex.evaluate(term.unit.expression, (1e-12,)))
        return term.coefficient * u0
    raise LimitDivergesError(
        f"term with alpha={a}, beta={b} diverges at its center")


def _term_limit_at_infinity(term: PowerLogTerm) -> float:
    a, b = term.alpha[0], term.beta[0]
    if a < 0:
        return 0.0
    if a == 0 and b == 0:
        if term.unit.is_one:
            return term.coefficient
        # Units are bounded; take a far sample as the limit surrogate.
        return term.coefficient * float(ex.evaluate(term.unit.expression, (1e12,)))
    raise LimitDivergesError("term diverges at infinity")


def _term_limit_interior(term: PowerLogTerm, t0: float) -> float:
    ts = (np.asarray(t0),)
    return float(term.value_normalized(ts))


def one_sided_limit(f: PiecewisePowerLog, point: float, side: int) -> float:
    """Limit of a 1-D amplitude as y -> point from side (+1 right, -1 left).
    Exact for the term class: 0 when the leading alpha > 0 at a center,
    coefficient*unit when alpha = beta = 0, divergence otherwise."""
    if f.dimension != 1:
        raise ValueError("one_sided_limit is 1-D only")
    if math.isinf(point):
        side = -1 if point > 0 else 1
    # Locate the cell whose closure touches `point` from the given side.
    for cell, terms in f.pieces:
        ax = cell.axes[0]
        ylo, yhi = ax.y_interval()
        if math.isinf(point):
            touching = (point > 0 and math.isinf(yhi)) or (point < 0 and math.isinf(ylo))
            at_infinity = True
        else:
            touching = (side > 0 and abs(ylo - point) <= 1e-14) or \
                       (side < 0 and abs(yhi - point) <= 1e-14)
            at_infinity = False
        if not touching:
            # The point may be interior to the cell.
            eps = 1e-9 * max(1.0, abs(point)) * side
            if not math.isinf(point) and cell.contains([point + eps]):
                t0 = float(ax.normalized(point))
                if ax.contains_normalized(t0):
                    return float(sum(_term_limit_interior(t, t0) for t in terms))
            continue
        total = 0.0
        for term in terms:
            if at_infinity:
                total += _term_limit_at_infinity(term)
            else:
                t0 = float(ax.normalized(point))
                if abs(t0) <= 1e-14:
                    total += _term_limit_at_zero(term)
                else:
                    total += _term_limit_interior(term, t0)
        return total
    return 0.0  # outside the support


# --------------------------------------------------------------------------
# Unit validation and the middle-cell log elimination


def validate_unit(term: PowerLogTerm, cell: Cell, samples: int = 10000,
                  margin: float = 1.05) -> dict:
    """Sampling check of the declared unit bound K: K^-1 < |u| < K and
    |t_l du/dt_l| < K, all with a 5% safety margin; u must have constant
    sign.  Returns the sampled extrema."""
    unit = term.unit
    if unit.is_one:
        return {"min_u": 1.0, "max_u": 1.0, "max_t_du": 0.0}
    if unit.bound is None:
        raise UnitValidationError("unit has no declared bound K")
    K = unit.bound
    if K <= 1.0:
        raise UnitValidationError("unit bound K must exceed 1")
    pts = cell.sample_normalized(samples)
    ts = [pts[:, j] for j in range(cell.dimension)]
    u = unit.value(ts)
    if np.any(u > 0) and np.any(u < 0):
        raise UnitValidationError("unit changes sign on its cell")
    au = np.abs(u)
    min_u, max_u = float(au.min()), float(au.max())
    if not (min_u > margin / K and max_u < K / margin):
        raise UnitValidationError(
            f"unit range [{min_u:.6g}, {max_u:.6g}] violates declared K={K} "
            f"with 5% margin")
    max_t_du = 0.0
    for axis in range(cell.dimension):
        du = unit.partial(axis)
        if du is None:
            continue
        vals = np.abs(ts[axis] * ex.evaluate_array(du, ts))
        max_t_du = max(max_t_du, float(vals.max()))
    if not max_t_du < K / margin:
        raise UnitValidationError(
            f"|t du/dt| reaches {max_t_du:.6g}, violating K={K} with 5% margin")
    return {"min_u": min_u, "max_u": max_u, "max_t_du": max_t_du}


def eliminate_middle_log(term: PowerLogTerm, cell: Cell, axis: int,
                         samples: int = 2048) -> tuple:
    """Rewrite (log t)^b * u as ((log t)^b u - c) + c with c = 2*sup sample,
    valid on middle cells where log t is bounded; returns two terms with
    beta_axis = 0 whose sum equals the input on the cell."""
    ax = cell.axes[axis]
    if ax.classify() != MIDDLE:
        raise ValueError("log elimination applies to middle cells only")
    b = term.beta[axis]
    if b == 0:
        return (term,)
    pts = cell.sample_normalized(samples)
    ts = [pts[:, j] for j in range(cell.dimension)]
    vals = np.log(ts[axis]) ** b * term.unit.value(ts)
    c_shift = 2.0 * float(vals.max())
    if c_shift <= 0.0:
        raise ValueError("sampled sup of (log t)^b u is not positive")

    log_pow: ex.Expr = ex.Pow(ex.Log(ex.Var(axis + 1)), Fraction(b))
    if term.unit.is_one:
        w_expr: ex.Expr = ex.Sub(log_pow, ex.Const(c_shift))
    else:
        w_expr = ex.Sub(ex.Mul(log_pow, term.unit.expression), ex.Const(c_shift))
    w_vals = vals - c_shift
    abs_w = np.abs(w_vals)
    k_w = 1.1 * max(float(abs_w.max()), 1.0 / float(abs_w.min()))

    beta0 = tuple(0 if j == axis else v for j, v in enumerate(term.beta))
    main = PowerLogTerm(term.coefficient, term.alpha, beta0, UnitSpec(w_expr, k_w))
    shifted = PowerLogTerm(term.coefficient * c_shift, term.alpha, beta0, term.unit)
    return (main, shifted)


# --------------------------------------------------------------------------
# Serialization of amplitude sections (exact rationals rendered "p/q")


def _fraction_str(fr: Fraction) -> str:
    return f"{fr.numerator}/{fr.denominator}" if fr.denominator != 1 else str(fr.numerator)


def parse_fraction(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def _endpoint(value) -> float:
    if isinstance(value, str):
        s = value.strip()
        if s in ("inf", "+inf"):
            return math.inf
        if s == "-inf":
            return -math.inf
        if s == "e":
            return E
        if s == "-e":
            return -E
        if s in ("1/e", "e^-1"):
            return 1.0 / E
        if s == "-1/e":
            return -1.0 / E
        if "/" in s:
            return float(Fraction(s))
        return float(s)
    return float(value)


def term_to_mapping(term: PowerLogTerm) -> dict:
    out = {
        "coefficient": term.coefficient,
        "alpha": [_fraction_str(a) for a in term.alpha],
        "beta": list(term.beta),
    }
    if not term.unit.is_one:
        out["unit"] = ex.render(term.unit.expression)
        if term.unit.bound is not None:
            out["unit_bound"] = term.unit.bound
    return out


def term_from_mapping(data: dict, dimension: int, params: Sequence[float] = ()) -> PowerLogTerm:
    raw_coeff = data["coefficient"]
    if isinstance(raw_coeff, str):
        coeff = ex.evaluate(ex.parse(raw_coeff), [0.0] * dimension, params)
    else:
        coeff = float(raw_coeff)
    alpha = tuple(parse_fraction(a) for a in data["alpha"])
    beta = tuple(int(b) for b in data["beta"])
    unit = UNIT_ONE
    if "unit" in data and str(data["unit"]).strip() not in ("", "1"):
        unit = UnitSpec(ex.parse(str(data["unit"])), float(data.get("unit_bound", 0)) or None)
    return PowerLogTerm(coeff, alpha, beta, unit)


def cell_to_mapping(cell: Cell) -> dict:
    intervals = []
    centers = []
    for ax in cell.axes:
        lo, hi = ax.y_interval()
        intervals.append([lo if math.isfinite(lo) else ("-inf" if lo < 0 else "inf"),
                          hi if math.isfinite(hi) else ("inf" if hi > 0 else "-inf")])
        centers.append(ax.center)
    return {"interval": intervals, "center": centers}


def cell_from_mapping(data: dict) -> Cell:
    intervals = data["interval"]
    centers = data.get("center", [0.0] * len(intervals))
    axes = []
    for (lo, hi), c in zip(intervals, centers):
        axes.append(interval_cell(_endpoint(lo), _endpoint(hi), float(c)).axes[0])
    return Cell(tuple(axes))


def amplitude_from_mapping(cells: Sequence[dict], params: Sequence[float] = ()) -> PiecewisePowerLog:
    pieces = []
    for cdata in cells:
        cell = cell_from_mapping(cdata)
        terms = tuple(term_from_mapping(t, cell.dimension, params) for t in cdata["terms"])
        pieces.append((cell, terms))
    return PiecewisePowerLog(tuple(pieces))


def amplitude_to_mapping(f: PiecewisePowerLog) -> list:
    out = []
    for cell, terms in f.pieces:
        cdata = cell_to_mapping(cell)
        cdata["terms"] = [term_to_mapping(t) for t in terms]
        out.append(cdata)
    return out
