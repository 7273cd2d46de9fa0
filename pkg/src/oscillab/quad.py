"""Oscillatory and absolute quadrature for prepared power-log amplitudes.

Panel strategy: the integration range of each cell is split at cell
boundaries, amplitude singularities (the center, via the substitution
t = s^q), and stationary points of the phase.  On a panel whose phase swing
lam*|d(psi)| is at most 8*pi, a global-adaptive Gauss-Kronrod 15/7 pair is
used; on larger swings a Filon-type rule: the phase is linearized through
the panel endpoints, the remaining curvature (kept under 2 radians by
bisection) is folded into the amplitude, the modified amplitude is
interpolated at 11 Chebyshev points, and the interpolant is integrated
against exact moments of e^{i*omega*t}.  Unbounded cells are truncated where
the power-log tail bound drops below a tenth of the tolerance.

All reductions are ordered and pairwise-summed, so results are bit-stable
for identical inputs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .phase import PhaseModel, ScalarPhase
from .powerlog import (
    Cell,
    NotIntegrableError,
    PiecewisePowerLog,
    PowerLogTerm,
    tail_integral,
)

_EIGHT_PI = 8.0 * math.pi
_MAX_PANELS = 2400
_MIN_WIDTH_REL = 1e-14

# 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
# (QUADPACK dqk15 constants).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES15 = np.concatenate([-_XGK[:7], _XGK[::-1]])
_WEIGHTS15 = np.concatenate([_WGK[:7], _WGK[::-1]])
_G7_POS = np.array([1, 3, 5, 7, 9, 11, 13])
_WEIGHTS7 = np.array([_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0]])

# Filon machinery: 11 Chebyshev (Clenshaw-Curtis) nodes, the inverse
# Chebyshev-Vandermonde matrix, and the Chebyshev -> monomial table.
_CC_DEG = 10
_CC_T = np.cos(np.pi * np.arange(_CC_DEG + 1) / _CC_DEG)


def _chebyshev_setup():
    n = _CC_DEG + 1
    vand = np.zeros((n, n))
    vand[:, 0] = 1.0
    vand[:, 1] = _CC_T
    for k in range(2, n):
        vand[:, k] = 2.0 * _CC_T * vand[:, k - 1] - vand[:, k - 2]
    inv = np.linalg.inv(vand)
    t2m = np.zeros((n, n))
    t2m[0, 0] = 1.0
    t2m[1, 1] = 1.0
    for k in range(2, n):
        t2m[k, 1:] = 2.0 * t2m[k - 1, :-1]
        t2m[k, :] -= t2m[k - 2, :]
    return inv, t2m


_CC_INV, _T2M = _chebyshev_setup()


def _moments(omega: float) -> np.ndarray:
    """m_j = int_{-1}^{1} t^j e^{i omega t} dt for j = 0..10.

    Crossover at |omega| = 6: below it the Taylor series has no catastrophic
    cancellation (peak term ~ e^|omega|); above it the upward recurrence is
    stable since j <= 10 stays comparable to omega.
    """
    n = _CC_DEG + 1
    if abs(omega) < 6.0:
        m = np.zeros(n, dtype=complex)
        term = 1.0 + 0.0j  # (i*omega)^l / l!
        l = 0
        while True:
            for j in range(n):
                if (l + j) % 2 == 0:
                    m[j] += term * (2.0 / (l + j + 1))
            l += 1
            term *= 1j * omega / l
            if abs(term) < 1e-20 and l > 5:
                break
        return m
    m = np.zeros(n, dtype=complex)
    iw = 1j * omega
    m[0] = 2.0 * math.sin(omega) / omega
    for j in range(1, n):
        if j % 2 == 0:
            boundary = 2.0 * math.sin(omega) / omega
        else:
            boundary = -2j * math.cos(omega) / omega
        m[j] = boundary - (j / iw) * m[j - 1]
    return m


def _pairwise_sum(values):
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = []
        for i in range(0, len(vals) - 1, 2):
            nxt.append(vals[i] + vals[i + 1])
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


@dataclass
class OscillatoryResult:
    value: complex
    error: float
    lam: float
    xi: tuple
    panel_count: int
    methods: tuple
    low_confidence: bool = False

    def __post_init__(self):
        if self.error < 0:
            raise ValueError("error estimate must be nonnegative")

    @property
    def method_counts(self) -> dict:
        out: dict = {}
        for tag in self.methods:
            out[tag] = out.get(tag, 0) + 1
        return out


class ToleranceNotMet(Exception):
    pass


# --------------------------------------------------------------------------
# Panel evaluation


def _gk15(fun: Callable, a: float, b: float):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid + half * _NODES15
    fv = np.asarray(fun(x))
    resk = half * np.sum(_WEIGHTS15 * fv)
    resg = half * np.sum(_WEIGHTS7 * fv[_G7_POS])
    mean = resk / (b - a)
    resasc = half * float(np.sum(_WEIGHTS15 * np.abs(fv - mean)))
    err = abs(resk - resg)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    err = max(err, 50.0 * np.finfo(float).eps * abs(resk))
    return resk, err


@dataclass
class _Segment:
    """One smooth stretch in the integration coordinate u: amp and psi are
    vectorized callables of u; psi is None for non-oscillatory work."""

    amp: Callable
    psi: Callable | None
    tag: str = ""


_SPLIT = object()  # sentinel: panel must be bisected before acceptance


def _eval_panel(seg: _Segment, a: float, b: float, lam: float):
    """Returns (value, err, method) or (None, inf, _SPLIT)."""
    if lam == 0.0 or seg.psi is None:
        val, err = _gk15(seg.amp, a, b)
        return complex(val), err, "gk"
    pend = seg.psi(np.array([a, b]))
    swing = lam * abs(float(pend[1]) - float(pend[0]))
    if swing <= _EIGHT_PI:
        def integrand(x):
            return seg.amp(x) * np.exp(1j * lam * seg.psi(x))

        val, err = _gk15(integrand, a, b)
        return val, err, "gk"
    return _filon_panel(seg, a, b, lam)


def _filon_panel(seg: _Segment, a: float, b: float, lam: float):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid + half * _CC_T  # x[0] = b, x[-1] = a
    pv = seg.psi(x)
    p = 0.5 * (pv[0] + pv[-1])
    r = 0.5 * (pv[0] - pv[-1])
    resid = pv - (p + r * _CC_T)
    if lam * float(np.max(np.abs(resid))) > 2.0:
        return None, math.inf, _SPLIT
    g = seg.amp(x) * np.exp(1j * lam * resid)
    acoef = _CC_INV @ g
    mono = _T2M @ _moments(lam * r)  # chebmom[k] = int T_k(t) e^{i w t} dt
    contrib = acoef * mono
    val = half * np.exp(1j * lam * p) * _pairwise_sum(list(contrib))
    tail = 8.0 * (abs(contrib[-1]) + abs(contrib[-2]))
    err = half * tail + 1e-15 * abs(val)
    return val, err, "filon"


def _integrate_segments(segments: Sequence, breaklists: Sequence, lam: float,
                        tol: float, max_panels: int = _MAX_PANELS):
    """Global-adaptive integration of a list of segments, each with its own
    initial breakpoints.  Returns (value, err, count, methods, converged)."""
    panels = []  # index -> dict
    heap = []
    counter = 0
    finite_err = 0.0
    inf_count = 0

    def push(seg_idx, a, b, depth):
        nonlocal counter, finite_err, inf_count
        seg = segments[seg_idx]
        val, err, method = _eval_panel(seg, a, b, lam)
        rec = {"seg": seg_idx, "a": a, "b": b, "depth": depth,
               "value": 0j if method is _SPLIT else val,
               "err": err, "method": method}
        panels.append(rec)
        if math.isinf(err):
            inf_count += 1
        else:
            finite_err += err
        heapq.heappush(heap, (-err, counter, len(panels) - 1))
        counter += 1

    for si, breaks in enumerate(breaklists):
        for a, b in zip(breaks[:-1], breaks[1:]):
            if b > a:
                push(si, a, b, 0)

    if not panels:
        return 0j, 0.0, 0, (), True

    live = sum(1 for p in panels if p["method"] is not None)
    while live < max_panels:
        if inf_count == 0 and finite_err <= tol:
            break
        if not heap:
            break
        _, _, idx = heapq.heappop(heap)
        rec = panels[idx]
        if rec["method"] is None:
            continue
        a, b, depth = rec["a"], rec["b"], rec["depth"]
        scale = 1.0 + abs(a) + abs(b)
        if (b - a) <= _MIN_WIDTH_REL * scale or (depth >= 30 and rec["method"] is not _SPLIT):
            # Too narrow to split; keep the estimate as-is.
            continue
        mid = 0.5 * (a + b)
        rec["method"] = None  # retired
        if math.isinf(rec["err"]):
            inf_count -= 1
        else:
            finite_err -= rec["err"]
        push(rec["seg"], a, mid, depth + 1)
        push(rec["seg"], mid, b, depth + 1)
        live += 1

    final = [p for p in panels if p["method"] is not None]
    final.sort(key=lambda p: (p["seg"], p["a"]))
    unresolved = any(p["method"] is _SPLIT for p in final)
    value = _pairwise_sum([p["value"] for p in final])
    err = _pairwise_sum([p["err"] if p["method"] is not _SPLIT else 1.0 for p in final])
    methods = tuple(
        (p["method"] if p["method"] is not _SPLIT else "unresolved")
        + (f":{segments[p['seg']].tag}" if segments[p["seg"]].tag else "")
        for p in final)
    converged = (not unresolved) and math.isfinite(err) and err <= tol
    return value, float(err), len(final), methods, converged


# --------------------------------------------------------------------------
# Cell planning


def _unit_bound_estimate(term: PowerLogTerm, lo: float, hi: float) -> float:
    if term.unit.is_one:
        return 1.0
    if term.unit.bound is not None:
        return term.unit.bound
    grid = np.geomspace(max(lo, 1e-6), min(hi, 1e9), 257)
    vals = np.abs(term.unit.value((grid,)))
    return 1.5 * float(vals.max()) + 1e-300


def _truncation_point(terms, lo: float, tol_tail: float) -> tuple:
    """Smallest Y (geometric search) with sum_t |c| K int_Y^inf t^a log^b <= tol."""
    start = max(math.e, lo * 1.5, 2.0)
    bounds = []
    for t in terms:
        if t.alpha[0] >= -1:
            raise NotIntegrableError("unbounded cell requires alpha < -1")
        bounds.append((abs(t.coefficient) * _unit_bound_estimate(t, lo, 1e12),
                       t.alpha[0], t.beta[0]))
    y = start
    for _ in range(600):
        total = sum(c * tail_integral(a, b, y) for c, a, b in bounds)
        if total <= tol_tail:
            return y, total
        y *= 2.0
    raise ToleranceNotMet("tail truncation point not found")


def _substitution_order(terms) -> int:
    """Smallest integer q with q*(alpha_min + 1) - 1 >= 1."""
    alpha_min = min(t.alpha[0] for t in terms)
    if alpha_min <= -1:
        raise NotIntegrableError("amplitude is not integrable at its center")
    q = math.ceil(2 / (float(alpha_min) + 1.0) - 1e-12)
    return max(q, 1)


def _needs_substitution(terms) -> bool:
    for t in terms:
        a, b = t.alpha[0], t.beta[0]
        if b > 0 or a < 0 or a.denominator != 1:
            return True
    return False


def _cell_segments_1d(cell: Cell, terms, scalar: ScalarPhase | None, lam: float,
                      tol_piece: float, interval: tuple | None = None):
    """Build segments + breakpoints for one 1-D cell.  Returns
    (segments, breaklists, tail_bound) or None when the restriction is empty."""
    ax = cell.axes[0]
    lo, hi = ax.lower, ax.upper
    if interval is not None:
        ya, yb = interval
        ta, tb = sorted((float(ax.normalized(ya)), float(ax.normalized(yb))))
        lo, hi = max(lo, ta), min(hi, tb)
        if not lo < hi:
            return None

    tail_bound = 0.0
    if math.isinf(hi):
        hi, tail_bound = _truncation_point(terms, lo, tol_piece / 10.0)

    def amp_plain(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for term in terms:
            out = out + term.value_normalized((t,))
        return out

    psi_plain = None
    if scalar is not None:
        def psi_plain(t):
            return scalar.values(ax.original(np.asarray(t, dtype=float)))

    # Stationary points of the phase inside (lo, hi), in t coordinates.
    tstats: list = []
    if scalar is not None and lam != 0.0:
        grid = np.linspace(lo, hi, 2049)
        dv = scalar.derivative_values(ax.original(grid))
        tstats = _sign_change_roots(grid, dv,
                                    lambda t: scalar.derivative_values(ax.original(t)))

    segments = []
    breaklists = []
    if lo == 0.0 and _needs_substitution(terms):
        q = _substitution_order(terms)
        d = min([hi] + [t for t in tstats if t > 0]) if tstats else hi
        d = min(d, hi)

        def amp_sub(s, _q=q, _d=d):
            s = np.asarray(s, dtype=float)
            t = s ** _q
            out = np.zeros(s.shape)
            valid = t > 0.0
            if np.any(valid):
                tv = t[valid]
                inner = np.zeros(tv.shape)
                for term in terms:
                    inner = inner + term.value_normalized((tv,))
                out[valid] = inner * _q * s[valid] ** (_q - 1)
            return out

        psi_sub = None
        if scalar is not None:
            def psi_sub(s, _q=q):
                s = np.asarray(s, dtype=float)
                return scalar.values(ax.original(s ** _q))

        segments.append(_Segment(amp_sub, psi_sub, tag="sub"))
        sub_breaks = [0.0, d ** (1.0 / q)]
        breaklists.append(sub_breaks)
        rest = [t for t in tstats if t > d]
        if d < hi:
            segments.append(_Segment(amp_plain, psi_plain))
            breaklists.append(_geometric_refine([d] + rest + [hi]))
    else:
        if lo == 0.0:
            for t in terms:
                if t.alpha[0] < 0:
                    raise NotIntegrableError("non-integrable restriction at the center")
        segments.append(_Segment(amp_plain, psi_plain))
        breaklists.append(_geometric_refine(
            [lo] + [t for t in tstats if lo < t < hi] + [hi]))
    return segments, breaklists, tail_bound


def _geometric_refine(breaks: list) -> list:
    """Pre-split decade-spanning gaps geometrically so the adaptive heap
    starts from panels of sane aspect ratio (tails can span 10+ decades)."""
    out = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        if a > 0.0 and b > a and b / a > 16.0:
            k = int(math.ceil(math.log(b / a) / math.log(16.0)))
            out.extend(float(v) for v in np.geomspace(a, b, k + 1)[1:])
        else:
            out.append(b)
    return out


def _sign_change_roots(grid: np.ndarray, values: np.ndarray, fun: Callable,
                       tol: float = 1e-12) -> list:
    """Roots where `values` changes sign across `grid`, bisected to width tol."""
    roots = []
    for i in range(len(grid) - 1):
        v0, v1 = values[i], values[i + 1]
        if v0 == 0.0:
            if 0 < i:
                roots.append(float(grid[i]))
            continue
        if v0 * v1 < 0.0:
            a, b = float(grid[i]), float(grid[i + 1])
            fa = v0
            while b - a > tol:
                mid = 0.5 * (a + b)
                fm = float(fun(np.asarray([mid]))[0])
                if fm == 0.0:
                    a = b = mid
                    break
                if fa * fm < 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    dedup = []
    for r in roots:
        if not dedup or abs(r - dedup[-1]) > 10 * tol:
            dedup.append(r)
    return dedup


# --------------------------------------------------------------------------
# Public operations


def stationary_points(phase: PhaseModel, xi: Sequence[float], interval: tuple,
                      grid: int = 4096) -> list:
    """Sign changes of d(xi . phi)/dy on a grid of `grid` points, refined by
    bisection to width 1e-12.  Tangential (non-crossing) roots may be missed.
    """
    scalar = phase.scalar(xi)
    a, b = float(interval[0]), float(interval[1])
    ts = np.linspace(a, b, grid)
    dv = scalar.derivative_values(ts)
    return _sign_change_roots(ts, dv, lambda t: scalar.derivative_values(t))


def _check_xi(xi: Sequence[float]) -> tuple:
    xi = tuple(float(v) for v in xi)
    norm = math.sqrt(sum(v * v for v in xi))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"xi must be a unit vector (norm {norm})")
    return xi


def integrate_oscillatory(f: PiecewisePowerLog, phase: PhaseModel | None,
                          xi: Sequence[float], lam: float,
                          tol: float = 1e-9,
                          interval: tuple | None = None) -> OscillatoryResult:
    """F = int f(y) e^{i lam xi . phi(y)} dy for m in {1, 2} (m = 2 iterated).

    `interval` restricts a 1-D integration range in original coordinates.
    Deterministic for fixed inputs; the result carries an error estimate and
    a low-confidence flag instead of failing silently when the tolerance is
    unreachable within the panel budget.
    """
    xi = _check_xi(xi) if phase is not None else tuple(xi)
    if lam < 0.0:
        res = integrate_oscillatory(f, phase, xi, -lam, tol, interval)
        return OscillatoryResult(res.value.conjugate(), res.error, lam, xi,
                                 res.panel_count, res.methods, res.low_confidence)
    if f.dimension == 2:
        return _integrate_2d(f, phase, xi, lam, tol)
    if not f.pieces:
        return OscillatoryResult(0j, 0.0, lam, xi, 0, ())

    tol_piece = tol / len(f.pieces)
    values, errors, counts, methods = [], [], 0, []
    low = False
    for cell, terms in f.pieces:
        if not terms:
            continue
        scalar = phase.scalar(xi) if (phase is not None and lam != 0.0) else None
        plan = _cell_segments_1d(cell, terms, scalar, lam, tol_piece, interval)
        if plan is None:
            continue
        segments, breaklists, tail = plan
        val, err, cnt, tags, ok = _integrate_segments(
            segments, breaklists, lam, 0.9 * tol_piece)
        # d y = sign * d t; orientation is preserved by integrating on (lo, hi).
        values.append(val)
        errors.append(err + tail)
        counts += cnt
        methods.extend(tags)
        low = low or not ok
    value = _pairwise_sum(values) if values else 0j
    error = float(_pairwise_sum(errors)) if errors else 0.0
    return OscillatoryResult(complex(value), error, lam, xi, counts,
                             tuple(methods), low)


def integrate_signed(f: PiecewisePowerLog, interval: tuple | None = None,
                     tol: float = 1e-9) -> float:
    """Signed 1-D integral of f (kernel 1) over `interval` (default: all)."""
    if not f.pieces:
        return 0.0
    tol_piece = tol / len(f.pieces)
    total = []
    for cell, terms in f.pieces:
        if not terms:
            continue
        plan = _cell_segments_1d(cell, terms, None, 0.0, tol_piece, interval)
        if plan is None:
            continue
        segments, breaklists, tail = plan
        val, err, _, _, ok = _integrate_segments(segments, breaklists, 0.0,
                                                 0.9 * tol_piece)
        if not ok and err > tol_piece:
            raise ToleranceNotMet(f"signed integral error estimate {err}")
        total.append(val.real)
    return float(_pairwise_sum(total)) if total else 0.0


def integrate_abs(f: PiecewisePowerLog, interval: tuple | None = None,
                  tol: float = 1e-9) -> float:
    """Integral of |f| over `interval`; sign changes of f are isolated on a
    grid and each constant-sign stretch is integrated separately."""
    if not f.pieces:
        return 0.0
    tol_piece = tol / len(f.pieces)
    total = []
    for idx, (cell, terms) in enumerate(f.pieces):
        if not terms:
            continue
        plan = _cell_segments_1d(cell, terms, None, 0.0, tol_piece, interval)
        if plan is None:
            continue
        segments, breaklists, tail = plan
        piece_total = [tail]
        for seg, breaks in zip(segments, breaklists):
            cuts = _amplitude_sign_changes(seg.amp, breaks[0], breaks[-1],
                                           multi=len(terms) > 1)
            pts = sorted(set(breaks) | set(cuts))
            for a, b in zip(pts[:-1], pts[1:]):
                val, err, _, _, ok = _integrate_segments(
                    [seg], [_geometric_refine([a, b])], 0.0,
                    0.9 * tol_piece / max(1, len(pts) - 1))
                if not ok and err > tol_piece:
                    raise ToleranceNotMet(f"abs integral error estimate {err}")
                piece_total.append(abs(val.real))
        total.append(_pairwise_sum(piece_total))
    return float(_pairwise_sum(total)) if total else 0.0


def _amplitude_sign_changes(amp: Callable, a: float, b: float,
                            multi: bool, grid: int = 1025) -> list:
    if not multi or not b > a:
        return []
    if a <= 0.0:
        ts = np.geomspace(max(b * 1e-12, 1e-300), b, grid)
    else:
        ts = np.linspace(a, b, grid)
    vals = amp(ts)
    return _sign_change_roots(ts, vals, amp, tol=1e-13)


# --------------------------------------------------------------------------
# 2-D by iterated 1-D quadrature


def _integrate_2d(f: PiecewisePowerLog, phase: PhaseModel | None,
                  xi: tuple, lam: float, tol: float) -> OscillatoryResult:
    tol_piece = tol / len(f.pieces)
    values, errors, counts, methods = [], [], 0, []
    low = False
    for cell, terms in f.pieces:
        if not terms:
            continue
        val, err, cnt, tags, ok = _piece_2d(cell, terms, phase, xi, lam, tol_piece)
        values.append(val)
        errors.append(err)
        counts += cnt
        methods.extend(tags)
        low = low or not ok
    value = _pairwise_sum(values) if values else 0j
    error = float(_pairwise_sum(errors)) if errors else 0.0
    return OscillatoryResult(complex(value), error, lam, xi, counts,
                             tuple(methods), low)


def _piece_2d(cell: Cell, terms, phase, xi, lam, tol_piece):
    ax0, ax1 = cell.axes
    lo0, hi0 = ax0.lower, ax0.upper
    tail0 = 0.0
    if math.isinf(hi0):
        outer_terms = [PowerLogTerm(t.coefficient, (t.alpha[0],), (t.beta[0],))
                       for t in terms]
        hi0, tail0 = _truncation_point(outer_terms, lo0, tol_piece / 10.0)

    inner_tol = tol_piece / 64.0
    inner_panels = 0
    inner_methods: list = []
    inner_low = [False]

    def inner_value(t0: float, itol: float) -> complex:
        nonlocal inner_panels

        def amp1(t1):
            t1 = np.asarray(t1, dtype=float)
            t0a = np.full(t1.shape, t0)
            out = np.zeros(t1.shape)
            for term in terms:
                out = out + term.value_normalized((t0a, t1))
            return out

        psi1 = None
        if phase is not None and lam != 0.0:
            y0 = float(ax0.original(t0))

            def psi1(t1):
                t1 = np.asarray(t1, dtype=float)
                comps = phase.component_arrays((np.full(t1.shape, y0),
                                                ax1.original(t1)))
                out = np.zeros(t1.shape)
                for w, c in zip(xi, comps):
                    out = out + w * c
                return out

        lo1, hi1 = ax1.lower, ax1.upper
        # Slice magnitudes carry the frozen leading-axis factor so the tail
        # bound covers the actual inner integrand.
        slice_terms = []
        for t in terms:
            lead = abs(t.coefficient) * t0 ** float(t.alpha[0])
            if t.beta[0]:
                lead *= abs(math.log(t0)) ** t.beta[0]
            lead *= t.unit.bound if t.unit.bound is not None else (1.0 if t.unit.is_one else 2.0)
            slice_terms.append(PowerLogTerm(max(lead, 1e-300),
                                            (t.alpha[1],), (t.beta[1],)))
        if math.isinf(hi1):
            hi1, _ = _truncation_point(slice_terms, lo1, itol / 10.0)
        segments: list = []
        breaklists: list = []
        if lo1 == 0.0 and _needs_substitution(slice_terms):
            q = _substitution_order(slice_terms)

            def amp_sub(s, _q=q):
                s = np.asarray(s, dtype=float)
                t1 = s ** _q
                out = np.zeros(s.shape)
                valid = t1 > 0.0
                if np.any(valid):
                    out[valid] = amp1(t1[valid]) * _q * s[valid] ** (_q - 1)
                return out

            psi_sub = None
            if psi1 is not None:
                def psi_sub(s, _q=q):
                    return psi1(np.asarray(s, dtype=float) ** _q)

            segments.append(_Segment(amp_sub, psi_sub, tag="sub"))
            breaklists.append([0.0, hi1 ** (1.0 / q)])
        else:
            segments.append(_Segment(amp1, psi1))
            breaklists.append([lo1, hi1])
        val, err, cnt, tags, ok = _integrate_segments(segments, breaklists, lam, itol)
        inner_panels += cnt
        inner_methods.extend(tags)
        inner_low[0] = inner_low[0] or not ok
        return val

    outer_factor_terms = [PowerLogTerm(t.coefficient, (t.alpha[0],), (t.beta[0],))
                          for t in terms]
    outer_singular = lo0 == 0.0 and _needs_substitution(outer_factor_terms)

    def run_outer(itol: float):
        def outer_fun(t0s):
            t0s = np.asarray(t0s, dtype=float)
            return np.array([inner_value(float(t0), itol) for t0 in t0s])

        if outer_singular:
            q0 = _substitution_order(outer_factor_terms)

            def outer_sub(ss):
                ss = np.asarray(ss, dtype=float)
                out = np.zeros(ss.shape, dtype=complex)
                for i, s in enumerate(ss):
                    t0 = float(s) ** q0
                    if t0 > 0.0:
                        out[i] = inner_value(t0, itol) * q0 * float(s) ** (q0 - 1)
                return out

            seg = _Segment(outer_sub, None, tag="outer:sub")
            breaks = [0.0, hi0 ** (1.0 / q0)]
        else:
            seg = _Segment(outer_fun, None, tag="outer")
            breaks = _geometric_refine([lo0, hi0])
        return _integrate_segments([seg], [breaks], 0.0, 0.45 * tol_piece,
                                   max_panels=400)

    val, err, outer_count, outer_tags, ok = run_outer(inner_tol)
    needed = tol_piece / (2.0 * max(outer_count, 1))
    if needed < inner_tol:
        inner_panels = 0
        inner_methods = []
        inner_low[0] = False
        val, err, outer_count, outer_tags, ok = run_outer(needed)
    total_err = err + tail0 + max(outer_count, 1) * (needed if needed < inner_tol else inner_tol)
    return (val, total_err, outer_count + inner_panels,
            list(outer_tags) + inner_methods, ok and not inner_low[0])
