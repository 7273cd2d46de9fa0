"""Unit-vector bases of homogeneous polynomials, monomial re-expression,
directional-derivative expansion, rotations, and the sphere-minimized
nondegeneracy function M."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import Sequence

import numpy as np

from .phase import PhaseModel, Polynomial

MAX_M = 3
MAX_D = 4
RANK_TOL = 1e-9


def homogeneous_dimension(m: int, d: int) -> int:
    return comb(m + d - 1, d)


def degree_monomials(m: int, d: int) -> tuple:
    """Exponent tuples of total degree d in m variables, lexicographically
    descending (y1-major)."""
    out = [tuple(mono) for mono in itertools.product(range(d + 1), repeat=m)
           if sum(mono) == d]
    out.sort(reverse=True)
    return tuple(out)


def _power_coefficients(v: Sequence[float], d: int, monomials: tuple) -> np.ndarray:
    """(v . y)^d expanded over the monomial list (multinomial theorem)."""
    out = np.zeros(len(monomials))
    for k, mono in enumerate(monomials):
        coef = factorial(d)
        for mu in mono:
            coef //= factorial(mu)
        val = float(coef)
        for vj, mu in zip(v, mono):
            val *= vj ** mu
        out[k] = val
    return out


def _candidate_directions(m: int):
    """Primitive integer directions: shells of increasing max-norm, then by
    number of nonzero entries, then lexicographically descending.  The first
    shell yields the standard basis vectors first."""
    seen = set()
    for shell in range(1, 8):
        batch = []
        for vec in itertools.product(range(-shell, shell + 1), repeat=m):
            if max(abs(c) for c in vec) != shell and shell != 1:
                continue
            if all(c == 0 for c in vec):
                continue
            g = math.gcd(*[abs(c) for c in vec])
            prim = tuple(c // g for c in vec)
            for c in prim:
                if c != 0:
                    if c < 0:
                        prim = tuple(-x for x in prim)
                    break
            if prim in seen:
                continue
            seen.add(prim)
            nnz = sum(1 for c in prim if c != 0)
            batch.append((nnz, tuple(-c for c in prim), prim))
        batch.sort()
        for _, _, prim in batch:
            yield prim


@dataclass(frozen=True)
class HomogBasis:
    m: int
    d: int
    vectors: tuple  # of unit-vector tuples, length ell
    monomials: tuple  # exponent tuples indexing the matrix rows
    matrix: np.ndarray  # matrix[k, j] = coeff of monomial k in (v_j . y)^d
    condition_number: float
    enumeration: str = "max-norm shells, fewest nonzeros first, lex descending"

    @property
    def size(self) -> int:
        return len(self.vectors)

    def monomial_index(self, alpha: Sequence[int]) -> int:
        return self.monomials.index(tuple(int(a) for a in alpha))


def basis_from_vectors(m: int, d: int, vectors: Sequence) -> HomogBasis:
    monomials = degree_monomials(m, d)
    ell = homogeneous_dimension(m, d)
    if len(vectors) != ell:
        raise ValueError(f"need {ell} vectors for (m={m}, d={d})")
    cols = []
    unit_vectors = []
    for v in vectors:
        arr = np.asarray(v, dtype=float)
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("basis vectors must be unit vectors")
        unit_vectors.append(tuple(arr))
        cols.append(_power_coefficients(arr, d, monomials))
    matrix = np.stack(cols, axis=1)
    if np.linalg.matrix_rank(matrix, tol=RANK_TOL) != ell:
        raise ValueError("vectors do not span the homogeneous space")
    cond = float(np.linalg.cond(matrix))
    return HomogBasis(m, d, tuple(unit_vectors), monomials, matrix, cond)


@lru_cache(maxsize=None)
def build_basis(m: int, d: int) -> HomogBasis:
    """ell = binom(m+d-1, d) unit vectors whose d-th powers of linear forms
    span the degree-d homogeneous polynomials; greedy over a deterministic
    enumeration of integer directions."""
    if not (1 <= m <= MAX_M):
        raise ValueError(f"m must be in 1..{MAX_M}")
    if not (1 <= d <= MAX_D):
        raise ValueError(f"d must be in 1..{MAX_D}")
    monomials = degree_monomials(m, d)
    ell = homogeneous_dimension(m, d)
    chosen = []
    cols = []
    for prim in _candidate_directions(m):
        arr = np.asarray(prim, dtype=float)
        arr = arr / np.linalg.norm(arr)
        col = _power_coefficients(arr, d, monomials)
        trial = np.stack(cols + [col], axis=1)
        if np.linalg.matrix_rank(trial, tol=RANK_TOL) == len(cols) + 1:
            chosen.append(tuple(arr))
            cols.append(col)
            if len(chosen) == ell:
                break
    if len(chosen) != ell:
        raise RuntimeError("enumeration exhausted before spanning (unreachable)")
    matrix = np.stack(cols, axis=1)
    return HomogBasis(m, d, tuple(chosen), monomials, matrix,
                      float(np.linalg.cond(matrix)))


def express_monomial(basis: HomogBasis, alpha: Sequence[int]) -> np.ndarray:
    """Coefficients c with y^alpha = sum_j c_j (v_j . y)^d; solved from the
    change-of-basis system, reconstruction residual checked at 1e-10."""
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) != basis.d:
        raise ValueError(f"|alpha| = {sum(alpha)} does not match degree {basis.d}")
    rhs = np.zeros(basis.size)
    rhs[basis.monomial_index(alpha)] = 1.0
    coeffs = np.linalg.solve(basis.matrix, rhs)
    residual = float(np.max(np.abs(basis.matrix @ coeffs - rhs)))
    if residual > 1e-10:
        raise ArithmeticError(f"reconstruction residual {residual:.3e}: basis corrupt")
    return coeffs


def directional_power(poly: Polynomial, v: Sequence[float], d: int) -> Polynomial:
    """(v . grad)^d applied to a polynomial, exactly."""
    out = poly
    for _ in range(d):
        out = out.directional_derivative(v)
    return out


def directional_derivative_expansion(poly: Polynomial, alpha: Sequence[int],
                                     y: Sequence[float],
                                     basis: HomogBasis | None = None) -> tuple:
    """lhs = d^alpha poly (y);  rhs = sum_j c_j (v_j . grad)^|alpha| poly (y).
    Both sides from exact symbolic calculus."""
    alpha = tuple(int(a) for a in alpha)
    d = sum(alpha)
    if basis is None:
        basis = build_basis(poly.m, d)
    coeffs = express_monomial(basis, alpha)
    lhs = poly.partial_multi(alpha).evaluate(y)
    rhs = 0.0
    for c, v in zip(coeffs, basis.vectors):
        rhs += c * directional_power(poly, v, d).evaluate(y)
    return lhs, rhs


def orthonormal_completion(v: Sequence[float]) -> np.ndarray:
    """Orthogonal matrix whose last column is v: Gram-Schmidt over v followed
    by the standard basis in index order, dropping near-parallel candidates
    (threshold 1e-8)."""
    v = np.asarray(v, dtype=float)
    m = v.size
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("v must be a unit vector")
    columns = [v]
    for j in range(m):
        if len(columns) == m:
            break
        cand = np.zeros(m)
        cand[j] = 1.0
        for w in columns:
            cand = cand - (cand @ w) * w
        norm = float(np.linalg.norm(cand))
        if norm <= 1e-8:
            continue
        columns.append(cand / norm)
    if len(columns) != m:
        raise RuntimeError("Gram-Schmidt failed to complete the basis")
    out = np.stack(columns[1:] + [columns[0]], axis=1)
    gram = out.T @ out
    if float(np.max(np.abs(gram - np.eye(m)))) > 1e-12:
        raise RuntimeError("completion is not orthonormal to 1e-12")
    return out


def rotation_map(v: Sequence[float]):
    """y -> T y with T = orthonormal_completion(v): the rotation taking the
    last coordinate axis to the direction v."""
    T = orthonormal_completion(v)

    def apply(y):
        return T @ np.asarray(y, dtype=float)

    return T, apply


@dataclass(frozen=True)
class NondegeneracyReport:
    point: tuple
    value: float
    argmin_xi: tuple
    argmax_pair: tuple  # (d, j)
    grid_resolution: float
    refined_value: float

    @property
    def positive(self) -> bool:
        """Positive only with margin surviving the refinement pass."""
        drop = max(0.0, self.value - self.refined_value)
        return self.refined_value > drop


def nondegeneracy_M(phase: PhaseModel, y: Sequence[float], N: int,
                    circle_points: int = 720) -> NondegeneracyReport:
    """M(y) = min over unit xi of max over (d <= N, j) of
    |xi . (v_{d,j} . grad)^d phi(y)|.  Exact for n = 1 (xi = +-1); for n = 2
    a 720-point circle grid with one local refinement pass."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not phase.is_polynomial:
        raise ValueError("nondegeneracy_M requires a polynomial phase")
    n = phase.n
    m = phase.m
    # w[(d, j)] = (v_{d,j}.grad)^d phi (y), one value per phase component.
    derivs = []
    for d in range(1, N + 1):
        basis = build_basis(m, d)
        for j, v in enumerate(basis.vectors):
            vec = np.array([directional_power(comp, v, d).evaluate(y)
                            for comp in phase.components])
            derivs.append(((d, j + 1), vec))

    if n == 1:
        best_pair, best_val = max(((pair, abs(float(w[0]))) for pair, w in derivs),
                                  key=lambda kv: kv[1])
        return NondegeneracyReport(tuple(float(c) for c in y), best_val,
                                   (1.0,), best_pair, 0.0, best_val)
    if n != 2:
        raise ValueError("sphere minimization implemented for n in {1, 2}")

    def value_at(theta: float) -> tuple:
        xi = (math.cos(theta), math.sin(theta))
        best = (-1.0, (0, 0))
        for pair, w in derivs:
            val = abs(xi[0] * w[0] + xi[1] * w[1])
            if val > best[0]:
                best = (val, pair)
        return best[0], best[1], xi

    # |xi . w| is antipodally symmetric: theta in [0, pi) suffices.
    step = math.pi / circle_points
    thetas = [k * step for k in range(circle_points)]
    coarse = [value_at(t) for t in thetas]
    k_min = min(range(circle_points), key=lambda k: coarse[k][0])
    coarse_val, pair, xi = coarse[k_min]
    # one refinement pass around the coarse argmin
    fine_lo = thetas[k_min] - step
    fine = [value_at(fine_lo + i * (2 * step / 64)) for i in range(65)]
    refined_val, r_pair, r_xi = min(fine, key=lambda v: v[0])
    return NondegeneracyReport(tuple(float(c) for c in y), coarse_val, r_xi,
                               r_pair, step, refined_val)
