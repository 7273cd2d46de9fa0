import math
from math import comb

import numpy as np
import pytest

from oscillab import expr as ex
from oscillab import homog
from oscillab.phase import PhaseModel, Polynomial


def test_basis_m1_d2():
    b = homog.build_basis(1, 2)
    assert b.size == 1
    assert b.vectors == ((1.0,),)


def test_basis_m2_d1_standard():
    b = homog.build_basis(2, 1)
    assert b.vectors == ((1.0, 0.0), (0.0, 1.0))


def test_basis_m2_d2():
    b = homog.build_basis(2, 2)
    assert b.size == 3
    assert b.vectors[0] == (1.0, 0.0)
    assert b.vectors[1] == (0.0, 1.0)
    s = 1 / math.sqrt(2)
    assert b.vectors[2] == pytest.approx((s, s))
    assert np.linalg.matrix_rank(b.matrix) == 3


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_basis_rank_all_supported(m, d):
    b = homog.build_basis(m, d)
    ell = comb(m + d - 1, d)
    assert b.size == ell
    assert np.linalg.matrix_rank(b.matrix, tol=1e-9) == ell


def test_basis_rejects_out_of_range():
    with pytest.raises(ValueError):
        homog.build_basis(4, 1)
    with pytest.raises(ValueError):
        homog.build_basis(1, 5)


def test_express_monomial_cross_term():
    s = 1 / math.sqrt(2)
    b = homog.basis_from_vectors(2, 2, [(1.0, 0.0), (0.0, 1.0), (s, s)])
    c = homog.express_monomial(b, (1, 1))
    assert c == pytest.approx([-0.5, -0.5, 1.0], abs=1e-12)


def test_express_monomial_basis_element():
    s = 1 / math.sqrt(2)
    b = homog.basis_from_vectors(2, 2, [(1.0, 0.0), (0.0, 1.0), (s, s)])
    c = homog.express_monomial(b, (2, 0))
    assert c == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)


def test_express_monomial_univariate():
    b = homog.build_basis(1, 3)
    assert homog.express_monomial(b, (3,)) == pytest.approx([1.0])


def test_express_monomial_degree_mismatch():
    b = homog.build_basis(2, 2)
    with pytest.raises(ValueError):
        homog.express_monomial(b, (1, 0))


@pytest.mark.parametrize("m,d", [(1, 2), (2, 2), (2, 3), (3, 2), (3, 4)])
def test_reconstruction_random_polynomials(m, d):
    rng = np.random.default_rng(hash((m, d)) % 2 ** 32)
    basis = homog.build_basis(m, d)
    for _ in range(20):
        coeffs = rng.uniform(-2, 2, size=basis.size)
        combo = np.zeros(basis.size)
        for k, mono in enumerate(basis.monomials):
            combo += coeffs[k] * homog.express_monomial(basis, mono)
        rebuilt = basis.matrix @ combo
        assert np.max(np.abs(rebuilt - coeffs)) <= 1e-10


def test_directional_expansion_cross():
    poly = Polynomial.from_expr(ex.parse("y1 * y1 * y2"), 2)
    for y in [(1.0, 0.5), (-0.3, 2.0)]:
        lhs, rhs = homog.directional_derivative_expansion(poly, (1, 1), y)
        assert lhs == pytest.approx(2 * y[0], rel=1e-12)
        assert abs(lhs - rhs) <= 1e-10


def test_directional_expansion_linear_vanishes():
    poly = Polynomial.from_expr(ex.parse("2 * y1 - y2"), 2)
    lhs, rhs = homog.directional_derivative_expansion(poly, (1, 1), (0.4, 0.4))
    assert lhs == 0.0
    assert abs(rhs) <= 1e-10


def test_directional_expansion_pure_cube():
    poly = Polynomial.from_expr(ex.parse("y1 * y1 * y1"), 2)
    lhs, rhs = homog.directional_derivative_expansion(poly, (3, 0), (0.2, -1.0))
    assert lhs == pytest.approx(6.0, rel=1e-12)
    assert rhs == pytest.approx(6.0, abs=1e-10)


def test_directional_expansion_randomized():
    rng = np.random.default_rng(99)
    for m in (1, 2):
        for total in range(1, 4):
            alphas = [a for a in homog.degree_monomials(m, total)]
            for _ in range(20):
                coeffs = {}
                for deg in range(total + 1):
                    for mono in homog.degree_monomials(m, deg):
                        if rng.random() < 0.6:
                            coeffs[mono] = float(rng.uniform(-2, 2))
                poly = Polynomial(m, coeffs)
                alpha = alphas[int(rng.integers(0, len(alphas)))]
                for _ in range(5):
                    y = tuple(rng.uniform(-1.5, 1.5, size=m))
                    lhs, rhs = homog.directional_derivative_expansion(poly, alpha, y)
                    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


def test_orthonormal_completion_axis():
    T = homog.orthonormal_completion((0.0, 1.0))
    assert T == pytest.approx(np.eye(2))


def test_orthonormal_completion_diagonal():
    s = 1 / math.sqrt(2)
    T = homog.orthonormal_completion((s, s))
    assert T[:, 1] == pytest.approx([s, s])
    assert T[:, 0] == pytest.approx([s, -s])


def test_orthonormal_completion_3d():
    T = homog.orthonormal_completion((0.0, 0.0, 1.0))
    expected = np.eye(3)
    assert T == pytest.approx(expected)
    v = np.array([1.0, 2.0, 2.0]) / 3.0
    T = homog.orthonormal_completion(v)
    assert T.T @ T == pytest.approx(np.eye(3), abs=1e-12)
    assert T[:, -1] == pytest.approx(v)


def test_rotation_map_aligns_last_axis():
    v = np.array([2.0, -1.0, 2.0]) / 3.0
    T, apply = homog.rotation_map(v)
    # the rotation takes e_m to v, so the last input coordinate moves along v
    out = apply((0.0, 0.0, 1.0))
    assert out == pytest.approx(v)
    assert T.T @ T == pytest.approx(np.eye(3), abs=1e-12)


def test_nondegeneracy_square_phase():
    phi = PhaseModel.from_exprs(["y1 * y1"], 1)
    rep = homog.nondegeneracy_M(phi, (1.0,), 2)
    assert rep.value == pytest.approx(2.0, rel=1e-12)
    assert rep.positive
    rep0 = homog.nondegeneracy_M(phi, (0.0,), 2)
    assert rep0.value == pytest.approx(2.0, rel=1e-12)


def test_nondegeneracy_constant_phase():
    phi = PhaseModel.from_exprs(["5"], 1)
    for N in (1, 2, 3):
        rep = homog.nondegeneracy_M(phi, (0.3,), N)
        assert rep.value == 0.0
        assert not rep.positive


def test_nondegeneracy_two_components():
    phi = PhaseModel.from_exprs(["y1", "y1 * y1"], 1)
    rep = homog.nondegeneracy_M(phi, (0.5,), 2)
    assert rep.value > 0.0
    assert rep.positive
    assert rep.grid_resolution > 0.0


def test_nondegeneracy_positive_on_hyperplane_passing_phase():
    # supports the proof's choice N = deg(phi) for passing polynomial phases
    phi = PhaseModel.from_exprs(["y1", "y1 * y1"], 1)
    rng = np.random.default_rng(5)
    for _ in range(10):
        y = (float(rng.uniform(-2, 2)),)
        rep = homog.nondegeneracy_M(phi, y, 2)
        assert rep.positive
