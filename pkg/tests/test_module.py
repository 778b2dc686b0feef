import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opalg.base import trivial_base
from opalg.commutative import Bundle, DiscreteBase, blockwise_scalars, bundle_module, check_bundle_module
from opalg.corpus import amplified_bimodule, amplified_module, named_base, random_unitary
from opalg.errors import NotInCommutant, ShapeMismatch
from opalg.module import (CStarModule, base_module, bimodule_morphism_space, check_bimodule, check_module,
                          direct_sum, full_module, module_intertwiner_space, morphism_residual,
                          morphism_space, rho, unit_bimodule)
from opalg.opspace import zero_space
from opalg.rtp import rtp


@pytest.mark.parametrize("name", ["C2", "C3", "M2", "M2w", "CM2"])
def test_base_module_is_module(name):
    base = named_base(name)
    assert check_module(base_module(base)).passed
    assert check_bimodule(unit_bimodule(base)).passed


def test_zero_leg_fails():
    mod = CStarModule(trivial_base(), 2, zero_space(2, 1))
    assert not check_module(mod).passed


def test_full_module_over_trivial_base():
    assert check_module(full_module(3)).passed


def test_shape_checked():
    with pytest.raises(ShapeMismatch):
        CStarModule(trivial_base(), 3, zero_space(2, 1))


@pytest.mark.parametrize("name", ["C2", "M2", "CM2"])
def test_rho_on_base_module_is_identity_map(name, rng):
    base = named_base(name)
    mod = base_module(base)
    for y in base.b_dag.basis:
        assert np.abs(rho(mod, y) - y).max() < 1e-10
    assert np.abs(rho(mod, np.eye(base.k_dim)) - np.eye(base.k_dim)).max() < 1e-10


def test_rho_rejects_non_commutant():
    base = named_base("M2")
    with pytest.raises(NotInCommutant):
        rho(base_module(base), base.b.basis[1])


@given(st.integers(0, 10**6), st.sampled_from(["C2w", "M2w", "CM2"]), st.integers(1, 3))
def test_rho_is_a_representation(seed, name, m):
    rng = np.random.default_rng(seed)
    base = named_base(name)
    mod = amplified_module(base, m, random_unitary(base.k_dim * m, rng))
    c = rng.standard_normal((2, base.b_dag.dim)) + 1j * rng.standard_normal((2, base.b_dag.dim))
    x, y = (np.tensordot(ci, base.b_dag.basis, axes=(0, 0)) for ci in c)
    assert np.abs(rho(mod, x @ y) - rho(mod, x) @ rho(mod, y)).max() < 1e-8
    assert np.abs(rho(mod, x.conj().T) - rho(mod, x).conj().T).max() < 1e-8
    for xi in mod.alpha.basis:
        assert np.abs(rho(mod, x) @ xi - xi @ x).max() < 1e-8


def test_bundle_rho_is_blockwise_scalars():
    db, bun = DiscreteBase((1.0, 2.0)), Bundle((1, 2))
    mod = bundle_module(db, bun)
    assert check_bundle_module(db, bun).passed
    f = np.array([2.0, -3.0])
    # f acts on K = C^2 as a diagonal in the orthonormal coordinates
    assert np.abs(rho(mod, np.diag(f)) - blockwise_scalars(bun, f)).max() < 1e-10
    assert np.allclose(blockwise_scalars(bun, f), np.diag([2.0, -3.0, -3.0]))


def test_morphisms_contain_identity():
    mod = base_module(named_base("CM2"))
    assert morphism_space(mod, mod).space.contains(np.eye(mod.h_dim))


def test_morphisms_match_oracle(frozen):
    base = named_base("C2")
    H, K = base_module(base), amplified_module(base, 2)
    semi = morphism_space(H, K).space
    full = morphism_space(H, K, "full").space
    assert semi.dim == frozen["morphisms_base_to_amplified"]
    assert full.is_subspace_of(semi)
    assert max(morphism_residual(T, H, K) for T in semi.basis) < 1e-8


def test_bimodule_morphisms_contain_identity():
    bim = amplified_bimodule(named_base("M2w"), 2)
    assert bimodule_morphism_space(bim, bim).space.contains(np.eye(bim.h_dim))


def test_direct_sum_matches_oracle(frozen):
    base = named_base("C2")
    mod = base_module(base)
    ds = direct_sum([mod, mod])
    assert ds.report.passed
    assert ds.module.h_dim == 4
    assert ds.module.alpha.dim == frozen["direct_sum_D2_alpha"]
    for i, p in zip(ds.injections, ds.projections):
        assert np.allclose(p @ i, np.eye(2))


def test_direct_sum_single():
    mod = base_module(named_base("M2"))
    ds = direct_sum([mod])
    assert ds.module.alpha.equals(mod.alpha)


def test_intertwiners_on_double_match_oracle(frozen):
    mod = base_module(named_base("C2"))
    ds = direct_sum([mod, mod])
    assert module_intertwiner_space(ds.module).dim == frozen["intertwiners_KK_diag"]
    assert module_intertwiner_space(ds.module).dim == 2 * module_intertwiner_space(mod).dim


@pytest.mark.parametrize("name,m,n", [("C2w", 2, 1), ("M2w", 1, 2), ("CM2", 2, 2)])
def test_enlarged_leg_keeps_rtp_dim(name, m, n, rng):
    base = named_base(name)
    H = amplified_module(base, m, random_unitary(base.k_dim * m, rng))
    K = amplified_module(base.opposite, n, random_unitary(base.k_dim * n, rng))
    big = CStarModule(base, H.h_dim, module_intertwiner_space(H))
    assert H.alpha.is_subspace_of(big.alpha)
    assert rtp(big, K).dim == rtp(H, K).dim == base.k_dim * m * n
