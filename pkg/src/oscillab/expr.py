"""Expression language for amplitudes, phases, and units.

Grammar (infix, left-associative):

    expr     := ['-'] term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := NUMBER | 'y'INT | 'x'INT
              | 'pow(' expr ',' RATIONAL ')'
              | 'log(' expr ')'
              | 'abs(' expr ')'
              | 'piecewise(' cond ':' expr (';' cond ':' expr)* [';'] ')'
              | '(' expr ')'
    cond     := expr ('<' | '<=' | '>' | '>=' | '==') expr
    RATIONAL := ['-'] INT ['/' INT]

Power exponents are exact rationals (the integrability criterion needs them
exact); everything else evaluates in IEEE doubles.  The fragment is closed
under differentiation.  Oscillation never enters here: no sin/exp, only the
power-log class.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np
from scipy.stats import qmc


class ExprError(Exception):
    """Base class for expression-language failures."""


class ParseError(ExprError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class EvalDomainError(ExprError):
    """Evaluation hit log of a non-positive value, 0 to a negative power, or
    a negative base under a non-integer exponent."""


class PiecewiseError(ExprError):
    """A point satisfied zero or more than one piecewise condition."""


class NonDifferentiableError(ExprError):
    """abs() applied to an expression that changes sign inside a piece."""


class ValidationError(ExprError):
    """Sampling-based validation of an invariant failed."""


# --------------------------------------------------------------------------
# AST


class Expr:
    """Base node.  Trees are immutable after construction."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, _coerce(other))

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __str__(self):
        return render(self)


def _coerce(value) -> "Expr":
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    if isinstance(value, float):
        return Const(value)
    raise TypeError(f"cannot coerce {value!r} to Expr")


@dataclass(frozen=True)
class Const(Expr):
    value: Union[Fraction, float]


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based, as written: y1, y2, ...


@dataclass(frozen=True)
class Param(Expr):
    index: int  # 1-based: x1, x2, ...


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True)
class Log(Expr):
    arg: Expr


@dataclass(frozen=True)
class Abs(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cond:
    left: Expr
    op: str  # one of < <= > >= ==
    right: Expr


@dataclass(frozen=True)
class Piecewise(Expr):
    branches: tuple  # of (Cond, Expr)


ONE = Const(Fraction(1))
ZERO = Const(Fraction(0))


# --------------------------------------------------------------------------
# Domain boxes


@dataclass(frozen=True)
class AxisInterval:
    """One axis of a domain box.  Endpoints may be +-inf; open/closed flags
    only matter for finite endpoints."""

    lower: float
    upper: float
    lower_closed: bool = False
    upper_closed: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"empty axis interval [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class DomainBox:
    axes: tuple  # of AxisInterval

    @property
    def dimension(self) -> int:
        return len(self.axes)

    def sample(self, n: int) -> np.ndarray:
        """n quasi-random (Halton) points, shape (n, m).  Infinite ends are
        compactified (u/(1-u) half-line map, tan full-line map)."""
        m = self.dimension
        unit = qmc.Halton(d=m, scramble=False).random(n)
        cols = []
        for j, ax in enumerate(self.axes):
            u = np.clip(unit[:, j], 1e-6, 1.0 - 1e-6)
            lo, hi = ax.lower, ax.upper
            if math.isfinite(lo) and math.isfinite(hi):
                cols.append(lo + (hi - lo) * u)
            elif math.isfinite(lo):
                cols.append(lo + u / (1.0 - u))
            elif math.isfinite(hi):
                cols.append(hi - u / (1.0 - u))
            else:
                cols.append(np.tan(np.pi * (u - 0.5)))
        return np.stack(cols, axis=1)


# --------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<NUMBER>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<NAME>[A-Za-z_]\w*)
  | (?P<OP><=|>=|==|[-+*/(),:;<>])
  | (?P<WS>\s+)
""",
    re.VERBOSE,
)

_VAR_RE = re.compile(r"^y(\d+)$")
_PARAM_RE = re.compile(r"^x(\d+)$")


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind != "WS":
            tokens.append(_Token(kind, tok, line, col))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def fail(self, message: str):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    def parse_expr(self) -> Expr:
        if self.peek().text == "-":
            tok = self.next()
            node: Expr = Sub(ZERO, self.parse_term())
        else:
            node = self.parse_term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.parse_term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            rhs = self.parse_factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def parse_factor(self) -> Expr:
        tok = self.next()
        if tok.kind == "NUMBER":
            if re.fullmatch(r"\d+", tok.text):
                return Const(Fraction(int(tok.text)))
            return Const(float(tok.text))
        if tok.kind == "NAME":
            m = _VAR_RE.match(tok.text)
            if m:
                return Var(int(m.group(1)))
            m = _PARAM_RE.match(tok.text)
            if m:
                return Param(int(m.group(1)))
            if tok.text == "pow":
                self.expect("(")
                base = self.parse_expr()
                self.expect(",")
                exponent = self.parse_rational()
                self.expect(")")
                return Pow(base, exponent)
            if tok.text == "log":
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Log(arg)
            if tok.text == "abs":
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Abs(arg)
            if tok.text == "piecewise":
                return self.parse_piecewise()
            raise ParseError(f"unknown name {tok.text!r}", tok.line, tok.col)
        if tok.text == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)

    def parse_rational(self) -> Fraction:
        sign = 1
        tok = self.next()
        if tok.text == "-":
            sign = -1
            tok = self.next()
        if tok.kind != "NUMBER" or not re.fullmatch(r"\d+", tok.text):
            raise ParseError("malformed rational: expected integer", tok.line, tok.col)
        num = int(tok.text)
        den = 1
        if self.peek().text == "/":
            self.next()
            tok = self.next()
            if tok.kind != "NUMBER" or not re.fullmatch(r"\d+", tok.text):
                raise ParseError("malformed rational: expected integer denominator", tok.line, tok.col)
            den = int(tok.text)
            if den == 0:
                raise ParseError("malformed rational: zero denominator", tok.line, tok.col)
        return Fraction(sign * num, den)

    def parse_piecewise(self) -> Expr:
        self.expect("(")
        branches = []
        while True:
            cond = self.parse_cond()
            self.expect(":")
            branch = self.parse_expr()
            branches.append((cond, branch))
            if self.peek().text == ";":
                self.next()
                if self.peek().text == ")":  # trailing semicolon
                    break
                continue
            break
        self.expect(")")
        return Piecewise(tuple(branches))

    def parse_cond(self) -> Cond:
        left = self.parse_expr()
        tok = self.next()
        if tok.text not in ("<", "<=", ">", ">=", "=="):
            raise ParseError(f"expected comparison operator, found {tok.text!r}", tok.line, tok.col)
        right = self.parse_expr()
        return Cond(left, tok.text, right)


def parse(text: str, domain: DomainBox | None = None, params: Sequence[float] = ()) -> Expr:
    """Parse `text`; when `domain` is given, sampling-validate log positivity
    and piecewise disjointness on it (1000 quasi-random points)."""
    parser = _Parser(_tokenize(text))
    node = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    if domain is not None:
        validate(node, domain, params=params)
    return node


# --------------------------------------------------------------------------
# Rendering (round-trips through parse to a structurally identical tree)

_PRECEDENCE = {Add: 1, Sub: 1, Mul: 2, Div: 2}


def _render_const(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            if value.numerator < 0:
                return f"(0 - {-value.numerator})"
            return str(value.numerator)
        # Rational constants only arise programmatically; emit a quotient.
        s = f"{abs(value.numerator)} / {value.denominator}"
        return f"(0 - {s})" if value.numerator < 0 else f"({s})"
    if value < 0 or (value == 0 and math.copysign(1.0, value) < 0):
        return f"(0 - {repr(-value)})"
    return repr(value)


def render(e: Expr) -> str:
    """Deterministic textual form; parse(render(e)) equals e structurally
    whenever e came from parse."""
    if isinstance(e, Const):
        return _render_const(e.value)
    if isinstance(e, Var):
        return f"y{e.index}"
    if isinstance(e, Param):
        return f"x{e.index}"
    if isinstance(e, (Add, Sub, Mul, Div)):
        sym = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        prec = _PRECEDENCE[type(e)]
        left = render(e.left)
        right = render(e.right)
        if isinstance(e.left, (Add, Sub, Mul, Div)) and _PRECEDENCE[type(e.left)] < prec:
            left = f"({left})"
        # Right operand needs parens at equal precedence (left associativity).
        if isinstance(e.right, (Add, Sub, Mul, Div)) and _PRECEDENCE[type(e.right)] <= prec:
            right = f"({right})"
        return f"{left} {sym} {right}"
    if isinstance(e, Pow):
        r = e.exponent
        frac = f"{r.numerator}/{r.denominator}" if r.denominator != 1 else str(r.numerator)
        return f"pow({render(e.base)}, {frac})"
    if isinstance(e, Log):
        return f"log({render(e.arg)})"
    if isinstance(e, Abs):
        return f"abs({render(e.arg)})"
    if isinstance(e, Piecewise):
        parts = [f"{render(c.left)} {c.op} {render(c.right)} : {render(b)}" for c, b in e.branches]
        return "piecewise(" + "; ".join(parts) + ")"
    raise TypeError(f"cannot render {e!r}")


# --------------------------------------------------------------------------
# Evaluation (vectorized; deterministic elementwise IEEE doubles)

_COND_OPS: dict[str, Callable] = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
}


def _eval(e: Expr, ys: tuple, xs: tuple) -> np.ndarray:
    if isinstance(e, Const):
        shape = ys[0].shape if ys else ()
        return np.full(shape, float(e.value))
    if isinstance(e, Var):
        if e.index > len(ys):
            raise EvalDomainError(f"variable y{e.index} out of range (point has {len(ys)} axes)")
        return ys[e.index - 1]
    if isinstance(e, Param):
        if e.index > len(xs):
            raise EvalDomainError(f"parameter x{e.index} out of range ({len(xs)} supplied)")
        shape = ys[0].shape if ys else ()
        return np.full(shape, float(xs[e.index - 1]))
    if isinstance(e, Add):
        return _eval(e.left, ys, xs) + _eval(e.right, ys, xs)
    if isinstance(e, Sub):
        return _eval(e.left, ys, xs) - _eval(e.right, ys, xs)
    if isinstance(e, Mul):
        return _eval(e.left, ys, xs) * _eval(e.right, ys, xs)
    if isinstance(e, Div):
        num = _eval(e.left, ys, xs)
        den = _eval(e.right, ys, xs)
        if np.any(den == 0.0):
            raise EvalDomainError("division by zero")
        return num / den
    if isinstance(e, Pow):
        base = _eval(e.base, ys, xs)
        r = e.exponent
        if r.denominator == 1:
            if r < 0 and np.any(base == 0.0):
                raise EvalDomainError("0 raised to a negative power")
            return base ** float(r)
        if np.any(base < 0.0):
            raise EvalDomainError("negative base under non-integer exponent")
        if r < 0 and np.any(base == 0.0):
            raise EvalDomainError("0 raised to a negative power")
        return base ** float(r)
    if isinstance(e, Log):
        arg = _eval(e.arg, ys, xs)
        if np.any(arg <= 0.0):
            raise EvalDomainError("log of a non-positive value")
        return np.log(arg)
    if isinstance(e, Abs):
        return np.abs(_eval(e.arg, ys, xs))
    if isinstance(e, Piecewise):
        masks = []
        for cond, _ in e.branches:
            lhs = _eval(cond.left, ys, xs)
            rhs = _eval(cond.right, ys, xs)
            masks.append(_COND_OPS[cond.op](lhs, rhs))
        count = np.zeros(masks[0].shape, dtype=int) if masks[0].shape else np.array(0)
        for m in masks:
            count = count + m.astype(int)
        if np.any(count != 1):
            bad = "no branch" if np.any(count == 0) else "multiple branches"
            raise PiecewiseError(f"piecewise selection ambiguous: {bad} true at a point")
        shape = masks[0].shape
        if shape == ():
            for mask, (_, branch) in zip(masks, e.branches):
                if bool(mask):
                    return _eval(branch, ys, xs)
            raise PiecewiseError("no branch selected")  # unreachable
        out = np.empty(shape)
        for mask, (_, branch) in zip(masks, e.branches):
            if not np.any(mask):
                continue
            sub_ys = tuple(y[mask] for y in ys)
            out[mask] = _eval(branch, sub_ys, xs)
        return out
    raise TypeError(f"cannot evaluate {e!r}")


def evaluate(e: Expr, point: Sequence[float], params: Sequence[float] = ()) -> float:
    """Evaluate at a single point (sequence of per-axis coordinates)."""
    ys = tuple(np.asarray(float(p)) for p in point)
    return float(_eval(e, ys, tuple(params)))


def evaluate_array(e: Expr, axes: Sequence[np.ndarray], params: Sequence[float] = ()) -> np.ndarray:
    """Vectorized evaluation; `axes` holds one equal-shape array per axis."""
    ys = tuple(np.asarray(a, dtype=float) for a in axes)
    out = _eval(e, ys, tuple(params))
    shape = ys[0].shape if ys else ()
    return np.broadcast_to(out, shape).copy() if out.shape != shape else out


# --------------------------------------------------------------------------
# Differentiation

def _simplify_mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Mul(a, b)


def _simplify_add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Add(a, b)


def differentiate(e: Expr, axis: int, domain: DomainBox | None = None,
                  params: Sequence[float] = ()) -> Expr:
    """Symbolic d/dy_axis (axis is 1-based).  With a domain, sampling-checks
    that abs() arguments keep constant sign per piece first."""
    if domain is not None:
        _check_differentiable(e, domain, params)
    return _diff(e, axis)


def _diff(e: Expr, axis: int) -> Expr:
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == axis else ZERO
    if isinstance(e, Add):
        return _simplify_add(_diff(e.left, axis), _diff(e.right, axis))
    if isinstance(e, Sub):
        da, db = _diff(e.left, axis), _diff(e.right, axis)
        if db == ZERO:
            return da
        return Sub(da, db)
    if isinstance(e, Mul):
        return _simplify_add(
            _simplify_mul(_diff(e.left, axis), e.right),
            _simplify_mul(e.left, _diff(e.right, axis)),
        )
    if isinstance(e, Div):
        num = Sub(
            _simplify_mul(_diff(e.left, axis), e.right),
            _simplify_mul(e.left, _diff(e.right, axis)),
        )
        return Div(num, Pow(e.right, Fraction(2)))
    if isinstance(e, Pow):
        r = e.exponent
        if r == 0:
            return ZERO
        du = _diff(e.base, axis)
        if du == ZERO:
            return ZERO
        inner = Pow(e.base, r - 1) if r != 1 else ONE
        return _simplify_mul(_simplify_mul(Const(r), inner), du)
    if isinstance(e, Log):
        du = _diff(e.arg, axis)
        if du == ZERO:
            return ZERO
        return Div(du, e.arg)
    if isinstance(e, Abs):
        # d|u| = u*u' / |u|, exact wherever u has constant sign.
        du = _diff(e.arg, axis)
        if du == ZERO:
            return ZERO
        return Div(_simplify_mul(e.arg, du), Abs(e.arg))
    if isinstance(e, Piecewise):
        return Piecewise(tuple((c, _diff(b, axis)) for c, b in e.branches))
    raise TypeError(f"cannot differentiate {e!r}")


def _abs_arguments(e: Expr, path=()):
    """Yield (abs-argument, piecewise-branch-path) pairs."""
    if isinstance(e, Abs):
        yield e.arg, path
        yield from _abs_arguments(e.arg, path)
    elif isinstance(e, (Add, Sub, Mul, Div)):
        yield from _abs_arguments(e.left, path)
        yield from _abs_arguments(e.right, path)
    elif isinstance(e, Pow):
        yield from _abs_arguments(e.base, path)
    elif isinstance(e, Log):
        yield from _abs_arguments(e.arg, path)
    elif isinstance(e, Piecewise):
        for k, (cond, branch) in enumerate(e.branches):
            yield from _abs_arguments(branch, path + ((e, k),))


def _branch_mask(path, ys, xs):
    mask = np.ones(ys[0].shape if ys else (), dtype=bool)
    for node, k in path:
        cond = node.branches[k][0]
        lhs = _eval(cond.left, ys, xs)
        rhs = _eval(cond.right, ys, xs)
        mask = mask & _COND_OPS[cond.op](lhs, rhs)
    return mask


def _check_differentiable(e: Expr, domain: DomainBox, params: Sequence[float],
                          n: int = 1000) -> None:
    pts = domain.sample(n)
    ys = tuple(pts[:, j] for j in range(domain.dimension))
    xs = tuple(params)
    for arg, path in _abs_arguments(e):
        mask = _branch_mask(path, ys, xs)
        if not np.any(mask):
            continue
        sub = tuple(y[mask] for y in ys)
        vals = _eval(arg, sub, xs)
        if np.any(vals > 0.0) and np.any(vals < 0.0):
            raise NonDifferentiableError(
                "abs() argument changes sign inside a piece; derivative undefined there"
            )


# --------------------------------------------------------------------------
# Sampling validation (log positivity, piecewise disjointness)

def validate(e: Expr, domain: DomainBox, params: Sequence[float] = (),
             n: int = 1000) -> None:
    """Check, at n quasi-random points of the box, that every log argument on
    the active evaluation path is positive and that piecewise conditions
    select exactly one branch.  Raises ValidationError."""
    pts = domain.sample(n)
    ys = tuple(pts[:, j] for j in range(domain.dimension))
    try:
        _eval(e, ys, tuple(params))
    except EvalDomainError as err:
        raise ValidationError(f"domain validation failed: {err}") from err
    except PiecewiseError as err:
        raise ValidationError(f"piecewise validation failed: {err}") from err


def free_variables(e: Expr) -> set:
    """Indices of y-variables appearing in e."""
    out: set = set()
    _walk_vars(e, out, Var)
    return out


def free_parameters(e: Expr) -> set:
    out: set = set()
    _walk_vars(e, out, Param)
    return out


def _walk_vars(e: Expr, out: set, cls) -> None:
    if isinstance(e, cls):
        out.add(e.index)
    elif isinstance(e, (Add, Sub, Mul, Div)):
        _walk_vars(e.left, out, cls)
        _walk_vars(e.right, out, cls)
    elif isinstance(e, Pow):
        _walk_vars(e.base, out, cls)
    elif isinstance(e, (Log, Abs)):
        _walk_vars(e.arg, out, cls)
    elif isinstance(e, Piecewise):
        for cond, branch in e.branches:
            _walk_vars(cond.left, out, cls)
            _walk_vars(cond.right, out, cls)
            _walk_vars(branch, out, cls)
