import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opalg.commutative import (Bundle, DiscreteBase, FiberedSpace, bundle_module, check_bundle_module,
                               fiberwise_rtp_iso, fibered_measure, fibered_module, fibered_points,
                               fibered_unitary, fp_commutative_check, function_algebra, j_map, push_forward)
from opalg.errors import EmptyFiber
from opalg.fiber import ModuleAlgebra, fiber_product
from opalg.linalg import Tolerance
from opalg.module import check_module

TIGHT = Tolerance(rank_rel=1e-9, residual_abs=1e-10)


def test_bundle_all_dims_one_is_base():
    db = DiscreteBase((1.0, 2.0, 0.5))
    mod = bundle_module(db, Bundle((1, 1, 1)))
    assert mod.h_dim == 3 and mod.alpha.dim == 3
    assert mod.alpha.equals(db.base.b.space)


def test_bundle_alpha_matches_oracle(frozen):
    db = DiscreteBase((1.0, 2.0))
    mod = bundle_module(db, Bundle((1, 2)))
    assert mod.h_dim == 3
    assert mod.alpha.dim == frozen["bundle_12_alpha"]
    assert check_bundle_module(db, Bundle((1, 2))).passed


def test_empty_inputs_rejected():
    with pytest.raises(EmptyFiber):
        Bundle((1, 0))
    with pytest.raises(EmptyFiber):
        DiscreteBase((1.0, 0.0))
    with pytest.raises(EmptyFiber):
        fibered_module(FiberedSpace((0, 0), (1.0, 1.0)), DiscreteBase((1.0, 1.0)))


@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3)), min_size=1, max_size=4),
       st.lists(st.floats(0.25, 4.0), min_size=4, max_size=4))
def test_bundle_rtp_dim_and_unitary(dims, weights):
    db = DiscreteBase(tuple(weights[: len(dims)]))
    bH, bK = Bundle(tuple(d[0] for d in dims)), Bundle(tuple(d[1] for d in dims))
    iso = fiberwise_rtp_iso(db, bH, bK)
    assert iso.rtp.dim == sum(h * k for h, k in dims)
    assert iso.report.passed, iso.report.render()


def test_j_map_and_push_forward():
    fs = FiberedSpace((0, 0, 1), (1.0, 4.0, 2.0))
    db = DiscreteBase((1.0, 1.0))
    f = np.array([1.0, 2.0, 3.0])
    J = j_map(fs, f)
    # j(f)* j(g) is multiplication by the push-forward of conj(f) g
    assert np.allclose(J.conj().T @ J, np.diag(push_forward(fs, db, np.abs(f) ** 2)))
    assert check_module(fibered_module(fs, db)).passed


def test_fibered_points_and_measure():
    fx, fy = FiberedSpace((0, 0, 1), (1.0, 0.5, 2.0)), FiberedSpace((0, 1, 1), (3.0, 1.0, 0.25))
    db = DiscreteBase((1.0, 2.0))
    pts = fibered_points(fx, fy)
    assert pts == [(0, 0), (1, 0), (2, 1), (2, 2)]
    assert np.allclose(fibered_measure(fx, fy, db), [3.0, 1.5, 4.0, 1.0])


def test_fibered_dims_match_oracle(frozen):
    fx, fy = FiberedSpace((0, 0, 1), (1.0, 1.0, 1.0)), FiberedSpace((0, 1, 1), (1.0, 1.0, 1.0))
    db = DiscreteBase((1.0, 1.0))
    rep = fp_commutative_check(fx, fy, db)
    assert rep.passed, rep.render()
    A = ModuleAlgebra(fibered_module(fx, db), function_algebra(fx))
    B = ModuleAlgebra(fibered_module(fy, db, opposite=True), function_algebra(fy))
    assert fiber_product(A, B).dim == frozen["fiber_fibered_21_12"]


def test_fibered_diagonal(frozen):
    z = FiberedSpace((0, 1, 2), (1.0, 1.0, 1.0))
    db = DiscreteBase((1.0, 1.0, 1.0))
    fu = fibered_unitary(z, z, db)
    assert fu.report.passed and fu.rtp.dim == frozen["fiber_fibered_diagonal_3"]
    A = ModuleAlgebra(fibered_module(z, db), function_algebra(z))
    B = ModuleAlgebra(fibered_module(z, db, opposite=True), function_algebra(z))
    assert fiber_product(A, B).dim == 3


def test_single_point_base_is_product(frozen):
    fx, fy = FiberedSpace((0, 0), (1.0, 2.0)), FiberedSpace((0, 0, 0), (1.0, 1.0, 3.0))
    db = DiscreteBase((1.0,))
    assert fp_commutative_check(fx, fy, db).passed
    A = ModuleAlgebra(fibered_module(fx, db), function_algebra(fx))
    B = ModuleAlgebra(fibered_module(fy, db, opposite=True), function_algebra(fy))
    assert fiber_product(A, B).dim == frozen["fiber_functions_2x3"]


def test_single_points_everywhere():
    one = FiberedSpace((0,), (1.0,))
    db = DiscreteBase((2.0,))
    assert fibered_unitary(one, one, db).rtp.dim == 1
    assert fp_commutative_check(one, one, db).passed


def test_weighted_unitary_tight():
    fx, fy = FiberedSpace((0, 1, 1), (1.0, 0.5, 2.0)), FiberedSpace((0, 0, 1), (1.0, 1.0, 1.0))
    fu = fibered_unitary(fx, fy, DiscreteBase((1.0, 2.0)), TIGHT)
    assert fu.report.passed, fu.report.render()
