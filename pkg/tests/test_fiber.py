import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opalg.corpus import (commutative_instance, degenerate_ind_instance, morphism_instances, named_base,
                          negative_unit_instance, random_unitary)
from opalg.errors import NotBAlgebra, NotSpatiallyImplemented, PreconditionFailed, ShapeMismatch
from opalg.fiber import (ModuleAlgebra, algebra_direct_sum, assoc_compare, b_algebra_residual,
                         check_fiber_properties, check_ind, check_slice_cp, check_slice_spatial,
                         conjugation_morphism, fiber_bimodule, fiber_morphism, fiber_product,
                         identity_morphism, ind, ind_preconditions, ind_span, induced_hom, kraus_from_choi,
                         rho_I, sauvageot_crosscheck, slice_cp, slice_spatial, unitality_check)
from opalg.linalg import Tolerance
from opalg.module import base_module, morphism_space, trivial_bimodule, unit_bimodule
from opalg.opspace import (algebra_from_basis, diagonal_algebra, full_algebra, span, zero_algebra)
from opalg.rtp import rtp, unit_l
from tests.conftest import rand_c
from tests.test_rtp import kron_map

TIGHT = Tolerance(rank_rel=1e-9, residual_abs=1e-10)


def trivial_pair(A, B):
    return ModuleAlgebra(trivial_bimodule(A.n), A), ModuleAlgebra(trivial_bimodule(B.n), B)


# ---- Ind


def test_ind_scalar_span_is_identity_on_algebras(rng):
    A = full_algebra(2)
    res = ind(span([np.eye(2)], (2, 2)), diagonal_algebra(2))
    assert res.algebra.equals(diagonal_algebra(2))
    assert ind(span([np.eye(2)], (2, 2)), A).algebra.equals(A)


@given(st.integers(0, 10**6), st.integers(2, 4))
def test_ind_unitary_is_conjugation(seed, n):
    rng = np.random.default_rng(seed)
    U = random_unitary(n, rng)
    A = diagonal_algebra(n)
    res = ind(span([U], (n, n)), A)
    want = span([U @ a @ U.conj().T for a in A.basis], (n, n))
    assert res.algebra.space.equality_residual(want) < 1e-8
    assert ind_span(span([U], (n, n)), A).equality_residual(want) < 1e-8


def test_ind_equals_span_on_corpus(instances):
    for inst in instances:
        X = rtp(inst.A.right, inst.B.left)
        res = ind(X.ket2_space, inst.A.algebra)
        assert res.algebra.space.equality_residual(ind_span(X.ket2_space, inst.A.algebra)) < 1e-8, inst.name
        assert check_ind(res, inst.A.algebra).passed, inst.name


def test_ind_preconditions_reject_degenerate_I():
    I = span([np.diag([1.0, 0.0])], (2, 2))
    assert not ind_preconditions(I, full_algebra(2)).passed
    with pytest.raises(PreconditionFailed):
        ind(I, full_algebra(2))


def test_ind_of_degenerate_algebra_is_degenerate():
    inst = degenerate_ind_instance()
    X = rtp(inst.A.right, inst.B.left)
    res = ind(X.ket2_space, inst.A.algebra)
    assert res.algebra.space.equality_residual(ind_span(X.ket2_space, inst.A.algebra)) < 1e-8
    rep = check_ind(res, inst.A.algebra)
    assert rep.passed and not res.algebra.nondegenerate
    assert rep["ii.multipliers"].status == "skip"


def test_rho_I_identity():
    I = span([np.eye(3)], (3, 3))
    y = np.arange(9.0).reshape(3, 3)
    assert np.allclose(rho_I(I, y), y)


# ---- fiber products


def test_fiber_trivial_full_matches_oracle(frozen):
    A, B = trivial_pair(full_algebra(2), full_algebra(2))
    fp = fiber_product(A, B)
    assert fp.dim == frozen["fiber_trivial_full_2x2"]
    assert sauvageot_crosscheck(fp).passed


def test_fiber_trivial_functions_matches_oracle(frozen):
    A, B = trivial_pair(diagonal_algebra(2), diagonal_algebra(3))
    fp = fiber_product(A, B)
    assert fp.dim == frozen["fiber_functions_2x3"]
    U = kron_map(fp.rtp, 2, 3)
    want = span([U.conj().T @ np.diag(np.kron(a, b)) @ U for a in np.eye(2) for b in np.eye(3)], (6, 6))
    assert fp.space.equality_residual(want) < 1e-8


def test_fiber_zero_algebras():
    A, B = trivial_pair(zero_algebra(2), zero_algebra(2))
    assert fiber_product(A, B).dim == 0


def test_fiber_methods_agree(instances):
    for inst in instances[:6]:
        a = fiber_product(inst.A, inst.B, method="stacked")
        b = fiber_product(inst.A, inst.B, method="intersection")
        assert a.space.equality_residual(b.space) < 1e-8, inst.name


def test_corpus_dims_match_oracle(instances, frozen):
    for inst in instances:
        fp = fiber_product(inst.A, inst.B)
        assert fp.rtp.dim == frozen["corpus"][inst.name]["rtp"], inst.name
        assert fp.dim == frozen["corpus"][inst.name]["fiber"], inst.name
        assert fp.report.passed, inst.name


def test_fiber_requires_b_algebra():
    base = named_base("M2")
    U = unit_bimodule(base)
    A = ModuleAlgebra(U, algebra_from_basis([np.diag([1.0, 0, 0, 0])], 4))
    with pytest.raises(NotBAlgebra):
        fiber_product(A, ModuleAlgebra(U, base.b))


def test_absorption_on_c2_base():
    base = named_base("C2")
    U = unit_bimodule(base)
    D = ModuleAlgebra(U, diagonal_algebra(2))
    assert b_algebra_residual(D.algebra, D.right) < 1e-8
    fb = fiber_bimodule(D, D)
    assert fb.report.passed, fb.report.render()


def test_minimal_tensor_inside_trivial(rng):
    A, B = trivial_pair(diagonal_algebra(2), full_algebra(2))
    fp = fiber_product(A, B)
    U = kron_map(fp.rtp, 2, 2)
    for a in A.algebra.basis:
        for b in B.algebra.basis:
            assert fp.space.residual(U.conj().T @ np.kron(a, b) @ U) < 1e-8


def test_properties_on_corpus(instances):
    for inst in instances:
        rep = check_fiber_properties(fiber_product(inst.A, inst.B))
        assert rep.passed, inst.name + "\n" + rep.render()


def test_unit_membership_negative():
    inst = negative_unit_instance()
    fp = fiber_product(inst.A, inst.B)
    rep = check_fiber_properties(fp)
    assert rep["v.unit"].status == "pass"
    assert fp.report.data.get("unit_in_fiber") is False
    assert not fp.space.contains(np.eye(fp.rtp.dim))


def test_sauvageot_on_commutative():
    fp = fiber_product(*(lambda i: (i.A, i.B))(commutative_instance()))
    assert sauvageot_crosscheck(fp).passed


# ---- morphisms


def test_induced_identity_is_identity(instances):
    inst = instances[8]
    h = induced_hom(identity_morphism(inst.A), inst.B.left)
    X = h.src
    assert h.report.passed
    fp = fiber_product(inst.A, inst.B)
    for y in fp.space.basis:
        assert np.abs(h.rho(y) - y).max() < 1e-8
    assert np.allclose(h.rho(np.eye(X.dim)), np.eye(X.dim))


def test_induced_unitary_is_conjugation(rng):
    A, B = trivial_pair(full_algebra(2), full_algebra(3))
    U = random_unitary(2, rng)
    h = induced_hom(conjugation_morphism(A, A, U), B.left)
    X = h.src
    Q = kron_map(X, 2, 3)
    W = Q.conj().T @ np.kron(U, np.eye(3)) @ Q
    x = rand_c(rng, 6, 6)
    assert np.abs(h.rho(x) - W @ x @ W.conj().T).max() < 1e-8


def test_unitary_star_unitary_is_kron_conjugation(rng):
    A, B = trivial_pair(full_algebra(2), full_algebra(2))
    U, V = random_unitary(2, rng), random_unitary(2, rng)
    fm = fiber_morphism(conjugation_morphism(A, A, U), conjugation_morphism(B, B, V))
    assert fm.report.passed
    Q = kron_map(fm.src_fp.rtp, 2, 2)
    W = Q.conj().T @ np.kron(U, V) @ Q
    for x in fm.src_fp.space.basis:
        assert np.abs(fm.apply(x) - W @ x @ W.conj().T).max() < 1e-8


def test_identity_star_identity(instances):
    inst = instances[3]
    fm = fiber_morphism(identity_morphism(inst.A), identity_morphism(inst.B))
    for x in fm.src_fp.space.basis:
        assert np.abs(fm.apply(x) - x).max() < 1e-8


@pytest.mark.parametrize("idx", range(5))
def test_morphism_instances(idx):
    name, phi, psi = morphism_instances()[idx]
    fm = fiber_morphism(phi, psi)
    assert fm.report.passed, name + "\n" + fm.report.render()


# ---- slice maps


def test_kraus_from_choi_roundtrip(rng):
    Ks = [rand_c(rng, 3, 2) for _ in range(2)]
    choi = sum(np.kron(np.eye(3)[:, [j]] @ np.eye(3)[[k]], sum(V.conj().T @ (np.eye(3)[:, [j]] @ np.eye(3)[[k]]) @ V
                                                               for V in Ks))
               for j in range(3) for k in range(3))
    back = kraus_from_choi(choi, 3, 2)
    a = rand_c(rng, 3, 3)
    assert np.allclose(sum(V.conj().T @ a @ V for V in back), sum(V.conj().T @ a @ V for V in Ks))


def test_vector_state_slice_entries(rng):
    A, B = trivial_pair(full_algebra(2), full_algebra(3))
    fp = fiber_product(A, B)
    xi = rand_c(rng, 2, 1)
    xi /= np.linalg.norm(xi)
    sl = slice_cp(fp.rtp, [xi])
    Q = kron_map(fp.rtp, 2, 3)
    etas = fp.rtp.gamma.basis
    x = rand_c(rng, 6, 6)
    got = sl.entries(x)
    want = np.array([[(np.kron(xi, e)).conj().T @ Q @ x @ Q.conj().T @ np.kron(xi, f) for f in etas]
                     for e in etas]).reshape(3, 3)
    assert np.abs(got - want).max() < 1e-8


def test_identity_slice_preserves_spectrum(instances, rng):
    inst = instances[2]
    fp = fiber_product(inst.A, inst.B)
    sl = slice_cp(fp.rtp, [np.eye(inst.A.right.h_dim)])
    y = fp.space.element(rand_c(rng, fp.dim))
    x = y.conj().T @ y
    assert np.allclose(np.linalg.eigvalsh(sl(x)), np.linalg.eigvalsh(x), atol=1e-8)


def test_slice_cp_positive_on_corpus(instances, rng):
    for inst in instances[:11]:
        fp = fiber_product(inst.A, inst.B)
        Lm = base_module(inst.A.right.base)
        M = morphism_space(Lm, inst.A.right).space
        kraus = [M.element(rand_c(rng, M.dim)) for _ in range(2)]
        rep = check_slice_cp(slice_cp(fp.rtp, kraus), fp.space.basis, n_random=20)
        assert rep.passed, inst.name


def test_slice_spatial_identity_family(instances):
    inst = instances[4]
    fp = fiber_product(inst.A, inst.B)
    sl = slice_spatial(fp.rtp, fp.rtp, [np.eye(inst.A.right.h_dim)], [np.eye(inst.A.right.h_dim)])
    for x in fp.space.basis:
        assert np.abs(sl(x) - x).max() < 1e-8


def test_slice_spatial_beta_family(instances):
    for inst in instances[:11]:
        fp = fiber_product(inst.A, inst.B)
        H, K = inst.A.right, inst.B.left
        Lm = base_module(H.base)
        dst = rtp(Lm, K)
        S = list(H.alpha.basis)
        sl = slice_spatial(fp.rtp, dst, S, S)
        C = ModuleAlgebra(unit_bimodule(H.base), full_algebra(H.k_dim))
        rep = check_slice_spatial(sl, fp, C)
        assert rep.passed, inst.name
        # through l the slice is x -> sum <S_n|_1 x |S_n>_1
        lm = unit_l(K, X=dst).matrix
        for x in fp.space.basis:
            direct = sum(fp.rtp.bra1(s) @ x @ fp.rtp.ket1(s) for s in S)
            assert np.abs(lm @ sl(x) @ lm.conj().T - direct).max() < 1e-8


def test_slice_spatial_rejects_bad_family(instances):
    inst = instances[6]
    fp = fiber_product(inst.A, inst.B)
    with pytest.raises(NotSpatiallyImplemented):
        slice_spatial(fp.rtp, fp.rtp, [], [])
    bad = np.arange(16.0).reshape(4, 4)
    with pytest.raises(NotSpatiallyImplemented):
        slice_spatial(fp.rtp, fp.rtp, [bad], [bad])


# ---- unitality, associativity, direct sums


def test_unitality_full_trivial():
    rep = unitality_check(ModuleAlgebra(trivial_bimodule(3), full_algebra(3)))
    assert rep.passed


def test_unitality_d2_matches_oracle(frozen):
    base = named_base("C2")
    rep = unitality_check(ModuleAlgebra(unit_bimodule(base), diagonal_algebra(2)))
    assert rep.passed
    assert rep["B_unit"].dims["Ad_r"] == frozen["unit_D2"]


def test_unitality_skipped_for_noncommutative_base():
    base = named_base("M2w")
    rep = unitality_check(ModuleAlgebra(unit_bimodule(base), base.b_dag))
    assert rep["A_unit"].status == "skip"


@pytest.mark.parametrize("kind", ["full", "diag"])
def test_assoc_compare_trivial_equal(kind):
    alg = full_algebra if kind == "full" else diagonal_algebra
    A, B, C = (ModuleAlgebra(trivial_bimodule(n), alg(n)) for n in (2, 1, 2))
    rep = assoc_compare(A, B, C)
    assert rep["left_in_right"].status == "info"
    assert rep["left_in_right"].max_residual < 1e-8 and rep["right_in_left"].max_residual < 1e-8


def test_assoc_compare_needs_bimodule():
    A = ModuleAlgebra(trivial_bimodule(2), full_algebra(2))
    with pytest.raises(ShapeMismatch):
        assoc_compare(A, ModuleAlgebra(base_module(named_base("C2")), diagonal_algebra(2)), A)


def test_algebra_direct_sum_singleton(instances):
    inst = instances[6]
    res = algebra_direct_sum([inst.A], [inst.B], TIGHT)
    assert res.report.passed, res.report.render()


def test_algebra_direct_sum_diagonal_family():
    As = [ModuleAlgebra(trivial_bimodule(n), diagonal_algebra(n)) for n in (1, 2)]
    res = algebra_direct_sum(As, As, TIGHT)
    assert res.report.passed, res.report.render()
    assert res.big.dim == sum(p.dim for p in res.pieces.values()) == 9


def test_algebra_direct_sum_rejects_empty():
    with pytest.raises(ShapeMismatch):
        algebra_direct_sum([], [])
