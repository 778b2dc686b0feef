import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opalg.errors import Inconsistent, NotPSD, ShapeMismatch, Underdetermined
from opalg.linalg import DEFAULT_TOL, Tolerance, commutant, gram_completion, solve_intertwiner
from opalg.opspace import (algebra_commutant, algebra_from_basis, diagonal_algebra, full_algebra,
                           generated_algebra, multiplier_algebra, span, space_adjoint,
                           space_intersection, space_product, space_sum, zero_space)
from tests.conftest import rand_c, unit

E11, E12, E21, E22 = unit(2, 0, 0), unit(2, 0, 1), unit(2, 1, 0), unit(2, 1, 1)
I2 = np.eye(2)


# ---- spans


def test_span_duplicate_generator():
    assert span([E11, E11], (2, 2)).dim == 1


def test_span_empty():
    S = span([], (2, 2))
    assert S.dim == 0 and S.basis.shape == (0, 2, 2)


def test_span_rank_matches_oracle(frozen):
    assert span([E11 + E22, E11 - E22, E11], (2, 2)).dim == frozen["span_three_generators"]


@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 4), st.integers(1, 4))
def test_span_basis_orthonormal_and_contains_inputs(seed, m, a, b):
    rng = np.random.default_rng(seed)
    mats = rand_c(rng, m, a, b)
    S = span(mats, (a, b))
    F = S.basis.reshape(S.dim, -1)
    assert S.dim == min(m, a * b)
    assert np.allclose(F.conj() @ F.T, np.eye(S.dim), atol=1e-10)
    assert S.max_residual_of(mats) < 1e-8


# ---- commutants


def test_commutant_matrix_units_is_scalars(frozen):
    C = commutant([unit(2, i, j) for i in range(2) for j in range(2)])
    assert len(C) == frozen["commutant_matrix_units"]
    assert span(C, (2, 2)).contains(I2)


def test_commutant_diag_matches_oracle(frozen):
    C = commutant([np.diag([1.0, 2.0])])
    assert len(C) == frozen["commutant_diag12"]
    assert span(C, (2, 2)).equals(diagonal_algebra(2).space)


def test_commutant_empty_is_everything():
    assert len(commutant([], n=3)) == 9


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_commutant_elements_commute(seed, n):
    rng = np.random.default_rng(seed)
    g = rand_c(rng, n, n)
    h = g @ g.conj().T
    for c in commutant([h]):
        assert np.abs(c @ h - h @ c).max() < 1e-8 * max(1.0, np.abs(h).max())


# ---- Gram completion


def test_gram_rank_one():
    assert gram_completion(np.ones((2, 2))).out_dim == 1


def test_gram_identity_is_unitary():
    g = gram_completion(np.eye(3))
    assert g.out_dim == 3
    assert np.allclose(g.coords @ g.coords.conj().T, np.eye(3), atol=1e-12)
    assert np.allclose(g.coords.conj().T @ g.coords, np.eye(3), atol=1e-12)


def test_gram_cutoff():
    assert gram_completion(np.diag([2.0, 1e-16]), Tolerance(rank_rel=1e-9)).out_dim == 1


def test_gram_rejects_indefinite():
    with pytest.raises(NotPSD):
        gram_completion(np.diag([1.0, -0.5]))
    with pytest.raises(NotPSD):
        gram_completion(np.array([[1.0, 1.0], [0.0, 1.0]]))


@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 6))
def test_gram_completion_reproduces_gram(seed, m, r):
    rng = np.random.default_rng(seed)
    X = rand_c(rng, m, r)
    G = X @ X.conj().T
    g = gram_completion(G)
    assert g.out_dim == min(m, r)
    assert np.abs(g.synthesis.conj().T @ g.synthesis - G).max() < 1e-8 * max(1.0, np.abs(G).max())
    assert np.allclose(g.synthesis @ g.synthesis_pinv, np.eye(g.out_dim), atol=1e-8)


# ---- intertwiner solver


def test_solve_identity_constraint():
    R = np.arange(6.0).reshape(2, 3)
    assert np.allclose(solve_intertwiner([(np.eye(3), R)], (2, 3)), R)


def test_solve_recovers_known_operator(rng):
    T = rand_c(rng, 4, 4)
    cons = [(L, T @ L) for L in rand_c(rng, 3, 4, 2)]
    assert np.abs(solve_intertwiner(cons, (4, 4)) - T).max() < 1e-10


def test_solve_errors(rng):
    with pytest.raises(Underdetermined):
        solve_intertwiner([(np.eye(3)[:, :1], np.ones((2, 1)))], (2, 3))
    L = np.eye(2)
    with pytest.raises(Inconsistent):
        solve_intertwiner([(L, np.eye(2)), (L, 2 * np.eye(2))], (2, 2))
    with pytest.raises(ShapeMismatch):
        solve_intertwiner([(np.eye(3), np.eye(2))], (2, 2))


# ---- space operations


def test_product_with_identity_span(rng):
    Y = span(rand_c(rng, 2, 3, 3), (3, 3))
    assert space_product(span([np.eye(3)], (3, 3)), Y).equals(Y)


def test_product_diagonals_matches_oracle(frozen):
    D = diagonal_algebra(2).space
    P = space_product(D, D)
    assert P.dim == frozen["product_D2_D2"] and P.equals(D)


def test_product_nilpotent_is_zero():
    X = span([E12], (2, 2))
    assert space_product(X, X).dim == 0


def test_intersection_matches_oracle(frozen):
    X = space_intersection(diagonal_algebra(2).space, span([I2, E12], (2, 2)))
    assert X.dim == frozen["intersection_D2_IdE12"]
    assert X.contains(I2)


@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 5))
def test_sum_and_intersection_dims(seed, a, b):
    rng = np.random.default_rng(seed)
    X = span(rand_c(rng, a, 3, 3), (3, 3))
    Y = span(rand_c(rng, b, 3, 3), (3, 3))
    S = space_sum(X, Y)
    assert X.is_subspace_of(S) and Y.is_subspace_of(S)
    assert space_intersection(X, X).equals(X)
    assert space_intersection(X, Y).dim == X.dim + Y.dim - S.dim


def test_adjoint_space():
    A = space_adjoint(span([E12], (2, 2)))
    assert A.equals(span([E21], (2, 2)))


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        space_sum(zero_space(2, 2), zero_space(3, 3))


# ---- algebras


def test_generated_nonunital_e12_matches_oracle(frozen):
    A = generated_algebra([E12])
    assert A.dim == frozen["generated_E12"]
    assert A.equals(full_algebra(2))


def test_generated_unital_diag_matches_oracle(frozen):
    A = generated_algebra([np.diag([1.0, 2.0])], unital=True)
    assert A.dim == frozen["generated_diag12_unital"]
    assert A.equals(diagonal_algebra(2))


def test_generated_empty_is_degenerate():
    A = generated_algebra([], n=2)
    assert A.dim == 0 and not A.nondegenerate


@pytest.mark.parametrize("A", [full_algebra(2), diagonal_algebra(3), full_algebra(3)])
def test_multiplier_of_unital_is_itself(A):
    assert multiplier_algebra(A).equals(A)


@given(st.integers(0, 10**6))
def test_bicommutant_of_generated(seed):
    rng = np.random.default_rng(seed)
    g = rand_c(rng, 3, 3)
    A = generated_algebra([g @ g.conj().T], unital=True)
    assert algebra_commutant(algebra_commutant(A)).space.equality_residual(A.space) < 1e-8


def test_algebra_from_basis_nondegenerate_flag():
    assert algebra_from_basis([E11], 2).nondegenerate is False
    assert algebra_from_basis([E11, E22], 2).nondegenerate is True


def test_default_tolerances():
    assert DEFAULT_TOL.rank_rel == 1e-9 and DEFAULT_TOL.residual_abs == 1e-8
