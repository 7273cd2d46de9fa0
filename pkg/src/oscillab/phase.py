"""Phase functions: exact multivariate polynomials and smooth expression
phases, with the symbolic derivatives the rest of the engine needs."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import expr as ex


class NotPolynomialError(Exception):
    """Expression cannot be expanded into a polynomial."""


class Polynomial:
    """Multivariate polynomial as a map {exponent tuple: coefficient}.

    Coefficients are floats (exact for the integer-coefficient phases the
    scenarios use); exponents are nonnegative integers.
    """

    __slots__ = ("m", "coeffs")

    def __init__(self, m: int, coeffs: dict | None = None):
        self.m = m
        clean = {}
        for mono, c in (coeffs or {}).items():
            if c != 0.0:
                clean[tuple(int(k) for k in mono)] = float(c)
        self.coeffs = clean

    @classmethod
    def zero(cls, m: int) -> "Polynomial":
        return cls(m, {})

    @classmethod
    def constant(cls, m: int, c: float) -> "Polynomial":
        return cls(m, {(0,) * m: c})

    @classmethod
    def variable(cls, m: int, axis: int) -> "Polynomial":
        mono = tuple(1 if j == axis else 0 for j in range(m))
        return cls(m, {mono: 1.0})

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.m == other.m and self.coeffs == other.coeffs

    def __repr__(self):
        return f"Polynomial(m={self.m}, {self.coeffs!r})"

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.coeffs)
        for mono, c in other.coeffs.items():
            out[mono] = out.get(mono, 0.0) + c
        return Polynomial(self.m, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.coeffs)
        for mono, c in other.coeffs.items():
            out[mono] = out.get(mono, 0.0) - c
        return Polynomial(self.m, out)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial(self.m, {mo: c * other for mo, c in self.coeffs.items()})
        out: dict = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                out[mono] = out.get(mono, 0.0) + c1 * c2
        return Polynomial(self.m, out)

    __rmul__ = __mul__

    def degree(self) -> int:
        if not self.coeffs:
            return 0
        return max(sum(mono) for mono in self.coeffs)

    def is_constant(self) -> bool:
        return all(sum(mono) == 0 for mono in self.coeffs)

    def evaluate(self, y: Sequence[float]) -> float:
        ys = tuple(np.asarray(float(v)) for v in y)
        return float(self.evaluate_array(ys))

    def evaluate_array(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        ys = [np.asarray(a, dtype=float) for a in axes]
        shape = ys[0].shape if ys else ()
        out = np.zeros(shape)
        for mono, c in sorted(self.coeffs.items()):
            term = np.full(shape, c)
            for j, k in enumerate(mono):
                if k:
                    term = term * ys[j] ** k
            out = out + term
        return out

    def partial(self, axis: int) -> "Polynomial":
        """d/dy_axis (axis 0-based)."""
        out: dict = {}
        for mono, c in self.coeffs.items():
            k = mono[axis]
            if k == 0:
                continue
            lowered = tuple(v - 1 if j == axis else v for j, v in enumerate(mono))
            out[lowered] = out.get(lowered, 0.0) + c * k
        return Polynomial(self.m, out)

    def partial_multi(self, alpha: Sequence[int]) -> "Polynomial":
        p = self
        for axis, k in enumerate(alpha):
            for _ in range(k):
                p = p.partial(axis)
        return p

    def directional_derivative(self, v: Sequence[float]) -> "Polynomial":
        """(v . grad) applied once."""
        out = Polynomial.zero(self.m)
        for axis, vj in enumerate(v):
            if vj != 0.0:
                out = out + self.partial(axis) * float(vj)
        return out

    @classmethod
    def from_expr(cls, e: ex.Expr, m: int, params: Sequence[float] = ()) -> "Polynomial":
        """Expand an expression into a polynomial; parameters are substituted
        numerically.  Raises NotPolynomialError on log/abs/piecewise or
        non-integer powers."""
        return _expand(e, m, tuple(params))


def _expand(e: ex.Expr, m: int, xs: tuple) -> Polynomial:
    if isinstance(e, ex.Const):
        return Polynomial.constant(m, float(e.value))
    if isinstance(e, ex.Param):
        if e.index > len(xs):
            raise NotPolynomialError(f"parameter x{e.index} unbound")
        return Polynomial.constant(m, float(xs[e.index - 1]))
    if isinstance(e, ex.Var):
        if e.index > m:
            raise NotPolynomialError(f"variable y{e.index} exceeds dimension {m}")
        return Polynomial.variable(m, e.index - 1)
    if isinstance(e, ex.Add):
        return _expand(e.left, m, xs) + _expand(e.right, m, xs)
    if isinstance(e, ex.Sub):
        return _expand(e.left, m, xs) - _expand(e.right, m, xs)
    if isinstance(e, ex.Mul):
        return _expand(e.left, m, xs) * _expand(e.right, m, xs)
    if isinstance(e, ex.Div):
        den = _expand(e.right, m, xs)
        if not den.is_constant():
            raise NotPolynomialError("division by a non-constant")
        c = den.coeffs.get((0,) * m, 0.0)
        if c == 0.0:
            raise NotPolynomialError("division by zero constant")
        return _expand(e.left, m, xs) * (1.0 / c)
    if isinstance(e, ex.Pow):
        r: Fraction = e.exponent
        if r.denominator != 1 or r < 0:
            raise NotPolynomialError(f"non-polynomial exponent {r}")
        base = _expand(e.base, m, xs)
        out = Polynomial.constant(m, 1.0)
        for _ in range(int(r)):
            out = out * base
        return out
    raise NotPolynomialError(f"non-polynomial node {type(e).__name__}")


@dataclass(frozen=True)
class PhaseModel:
    """Phase map phi: R^m -> R^n with a declared derivative-order bound N.

    Components are Polynomial (exact symbolic calculus) or Expr (power-log
    smooth fragment, differentiated symbolically).  For polynomial phases the
    bound defaults to the total degree.
    """

    components: tuple
    m: int
    derivative_bound: int
    params: tuple = field(default=())

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def is_polynomial(self) -> bool:
        return all(isinstance(c, Polynomial) for c in self.components)

    @classmethod
    def polynomial(cls, components: Sequence[Polynomial], derivative_bound: int | None = None) -> "PhaseModel":
        comps = tuple(components)
        m = comps[0].m
        if derivative_bound is None:
            derivative_bound = max(1, max(c.degree() for c in comps))
        return cls(comps, m, int(derivative_bound))

    @classmethod
    def from_exprs(cls, texts: Sequence[str], m: int, derivative_bound: int | None = None,
                   params: Sequence[float] = ()) -> "PhaseModel":
        """Parse components; use exact polynomials when the text expands."""
        comps = []
        polynomial_all = True
        for t in texts:
            node = ex.parse(t)
            try:
                comps.append(Polynomial.from_expr(node, m, params))
            except NotPolynomialError:
                comps.append(node)
                polynomial_all = False
        if derivative_bound is None:
            if not polynomial_all:
                raise ValueError("derivative_bound is required for non-polynomial phases")
            derivative_bound = max(1, max(c.degree() for c in comps))
        return cls(tuple(comps), m, int(derivative_bound), tuple(params))

    def evaluate(self, y: Sequence[float]) -> np.ndarray:
        return np.array([self._eval_component(c, y) for c in self.components])

    def _eval_component(self, comp, y: Sequence[float]) -> float:
        if isinstance(comp, Polynomial):
            return comp.evaluate(y)
        return ex.evaluate(comp, y, self.params)

    def component_arrays(self, axes: Sequence[np.ndarray]) -> list:
        out = []
        for comp in self.components:
            if isinstance(comp, Polynomial):
                out.append(comp.evaluate_array(axes))
            else:
                out.append(ex.evaluate_array(comp, axes, self.params))
        return out

    def scalar(self, xi: Sequence[float]) -> "ScalarPhase":
        """The 1-D phase t -> xi . phi(t); requires m == 1."""
        if self.m != 1:
            raise ValueError("scalar() requires a 1-D phase")
        return ScalarPhase(self, tuple(float(v) for v in xi))


class ScalarPhase:
    """xi . phi for m = 1, with symbolic derivatives of any order."""

    def __init__(self, model: PhaseModel, xi: tuple):
        if len(xi) != model.n:
            raise ValueError("xi length must match the number of phase components")
        self.model = model
        self.xi = xi
        self._deriv_cache: dict = {}

    def values(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for w, comp in zip(self.xi, self.model.components):
            if w == 0.0:
                continue
            if isinstance(comp, Polynomial):
                out = out + w * comp.evaluate_array((t,))
            else:
                out = out + w * ex.evaluate_array(comp, (t,), self.model.params)
        return out

    def __call__(self, t):
        return self.values(np.asarray(t, dtype=float))

    def _derivative_forms(self, order: int) -> list:
        if order in self._deriv_cache:
            return self._deriv_cache[order]
        forms = []
        for comp in self.model.components:
            if isinstance(comp, Polynomial):
                d = comp
                for _ in range(order):
                    d = d.partial(0)
                forms.append(d)
            else:
                d = comp
                for _ in range(order):
                    d = ex.differentiate(d, 1)
                forms.append(d)
        self._deriv_cache[order] = forms
        return forms

    def derivative_values(self, t: np.ndarray, order: int = 1) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        forms = self._derivative_forms(order)
        out = np.zeros(t.shape)
        for w, form in zip(self.xi, forms):
            if w == 0.0:
                continue
            if isinstance(form, Polynomial):
                out = out + w * form.evaluate_array((t,))
            else:
                out = out + w * ex.evaluate_array(form, (t,), self.model.params)
        return out
