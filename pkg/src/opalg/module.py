"""C*-modules H_alpha over a base, bimodules, the representation rho_alpha,
morphism spaces, direct sums and intertwiner spaces."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .base import CStarBase, trivial_base
from .errors import DegenerateRep, NotInCommutant, ShapeMismatch
from .linalg import DEFAULT_TOL, Tolerance, solve_intertwiner, stack_matrices, stacked_nullspace
from .opspace import (OperatorSpace, full_space, nondegeneracy_rank, orthonormal_basis,
                      space_adjoint, space_product, span)
from .report import Report


@dataclass(frozen=True, eq=False)
class CStarModule:
    base: CStarBase
    h_dim: int
    alpha: OperatorSpace

    def __post_init__(self):
        if self.alpha.shape != (self.h_dim, self.base.k_dim):
            raise ShapeMismatch(f"alpha has shape {self.alpha.shape}, expected {(self.h_dim, self.base.k_dim)}")

    @property
    def k_dim(self) -> int:
        return self.base.k_dim

    def __repr__(self):
        return f"CStarModule(h={self.h_dim}, k={self.k_dim}, dim alpha={self.alpha.dim})"

    @cached_property
    def _stacked(self) -> np.ndarray:
        # [xi_1 ... xi_p] : the columns span H when [alpha K] = H
        return np.hstack(list(self.alpha.basis)) if self.alpha.dim else np.zeros((self.h_dim, 0))


@dataclass(frozen=True, eq=False)
class CStarBimodule:
    """H with alpha over alpha_base and beta over beta_base.

    For an (a†, b)-bimodule alpha_base is a† and beta_base is b; the algebra
    acting through rho_alpha on beta is then alpha_base.b_dag.
    """

    alpha_base: CStarBase
    beta_base: CStarBase
    h_dim: int
    alpha: OperatorSpace
    beta: OperatorSpace

    @cached_property
    def alpha_module(self) -> CStarModule:
        return CStarModule(self.alpha_base, self.h_dim, self.alpha)

    @cached_property
    def beta_module(self) -> CStarModule:
        return CStarModule(self.beta_base, self.h_dim, self.beta)

    def __repr__(self):
        return f"CStarBimodule(h={self.h_dim}, dim alpha={self.alpha.dim}, dim beta={self.beta.dim})"


def base_module(base: CStarBase) -> CStarModule:
    """K with alpha = B, a module over its own base."""
    return CStarModule(base, base.k_dim, base.b.space)


def unit_bimodule(base: CStarBase) -> CStarBimodule:
    """K with legs B† (over the opposite base) and B (over the base)."""
    return CStarBimodule(base.opposite, base, base.k_dim, base.b_dag.space, base.b.space)


def full_module(h_dim: int, base: CStarBase | None = None) -> CStarModule:
    """H with alpha = L(C, H) over the trivial base."""
    base = base or trivial_base()
    return CStarModule(base, h_dim, full_space(h_dim, 1))


def trivial_bimodule(h_dim: int, base: CStarBase | None = None) -> CStarBimodule:
    base = base or trivial_base()
    L = full_space(h_dim, 1)
    return CStarBimodule(base, base, h_dim, L, L)


def check_module(mod: CStarModule, tol: Tolerance = DEFAULT_TOL, prefix: str = "") -> Report:
    rep = Report("module axioms")
    a = mod.alpha
    r = nondegeneracy_rank(a, tol)
    rep.add_flag(prefix + "alpha_K", "[alpha K] = H", r == mod.h_dim, dims={"rank": r, "h": mod.h_dim})
    aB = space_product(a, mod.base.b.space, tol)
    rep.add(prefix + "alpha_B", "[alpha B] = alpha", aB.equality_residual(a), tol.residual_abs,
            {"alpha": a.dim, "alphaB": aB.dim})
    aa = space_product(space_adjoint(a, tol), a, tol)
    rep.add(prefix + "alpha_star_alpha", "[alpha* alpha] = B", aa.equality_residual(mod.base.b.space),
            tol.residual_abs, {"alpha*alpha": aa.dim, "B": mod.base.b.dim})
    return rep


def rho(mod: CStarModule, x, tol: Tolerance = DEFAULT_TOL, check: bool = True) -> np.ndarray:
    """The operator R on H with R xi zeta = xi x zeta for xi in alpha, x in B'."""
    x = np.asarray(x, dtype=np.complex128)
    if check:
        B = mod.base.b.basis
        if B.shape[0]:
            comm = np.abs(np.einsum("ij,bjk->bik", x, B) - np.einsum("bij,jk->bik", B, x)).max()
            if comm > tol.residual_abs * max(1.0, np.linalg.norm(x)):
                raise NotInCommutant(f"x does not commute with B (residual {comm:.3e})")
    L = mod._stacked
    R = np.hstack([xi @ x for xi in mod.alpha.basis]) if mod.alpha.dim else L
    return solve_intertwiner([(L, R)], (mod.h_dim, mod.h_dim), tol)


def rho_space(mod: CStarModule, algebra_space: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """[rho_alpha(X)] for a subspace X of B'."""
    return span([rho(mod, x, tol) for x in algebra_space.basis], (mod.h_dim, mod.h_dim), tol)


def check_bimodule(bim: CStarBimodule, tol: Tolerance = DEFAULT_TOL) -> Report:
    rep = Report("bimodule axioms")
    rep.extend(check_module(bim.alpha_module, tol), "alpha.")
    rep.extend(check_module(bim.beta_module, tol), "beta.")
    if not rep.passed:
        return rep
    rA = rho_space(bim.alpha_module, bim.alpha_base.b_dag.space, tol)
    rB = rho_space(bim.beta_module, bim.beta_base.b_dag.space, tol)
    rAb = space_product(rA, bim.beta, tol)
    rBa = space_product(rB, bim.alpha, tol)
    rep.add("rho_alpha_beta", "[rho_alpha(A) beta] = beta", rAb.equality_residual(bim.beta), tol.residual_abs)
    rep.add("rho_beta_alpha", "[rho_beta(B†) alpha] = alpha", rBa.equality_residual(bim.alpha), tol.residual_abs)
    comm = 0.0
    for x in rA.basis:
        for y in rB.basis:
            comm = max(comm, np.abs(x @ y - y @ x).max())
    rep.add("rho_commute", "rho_alpha(A) commutes with rho_beta(B†)", comm, tol.residual_abs)
    return rep


@dataclass(frozen=True, eq=False)
class MorphismSpace:
    kind: str
    space: OperatorSpace


def morphism_space(H: CStarModule, K: CStarModule, kind: str = "semi",
                   tol: Tolerance = DEFAULT_TOL) -> MorphismSpace:
    """{T : H -> K with T alpha ⊆ beta} (semi), additionally T* beta ⊆ alpha (full)."""
    if kind not in ("semi", "full"):
        raise ValueError("kind must be 'semi' or 'full'")
    if H.k_dim != K.k_dim:
        raise ShapeMismatch("modules over different bases")
    h, kk = H.h_dim, K.h_dim
    eye_k, eye_h = np.eye(kk), np.eye(h)

    def blocks():
        for xi in H.alpha.basis:
            yield K.alpha.complement_apply(np.kron(eye_k, xi.T))
        if kind == "full":
            a_adj = space_adjoint(H.alpha, tol)
            for eta in K.alpha.basis:
                yield a_adj.complement_apply(np.kron(eta.conj().T, eye_h))
    N = stacked_nullspace(blocks(), kk * h, tol)
    sp = OperatorSpace(kk, h, orthonormal_basis(N.T.reshape(-1, kk, h), tol, shape=(kk, h)))
    return MorphismSpace(kind, sp)


def bimodule_morphism_space(H: CStarBimodule, K: CStarBimodule, kind: str = "semi",
                            tol: Tolerance = DEFAULT_TOL) -> MorphismSpace:
    from .opspace import space_intersection
    a = morphism_space(H.alpha_module, K.alpha_module, kind, tol).space
    b = morphism_space(H.beta_module, K.beta_module, kind, tol).space
    return MorphismSpace(kind, space_intersection(a, b, tol=tol))


def morphism_residual(T, H: CStarModule, K: CStarModule, kind: str = "semi") -> float:
    """Residual of T alpha ⊆ beta (and T* beta ⊆ alpha for kind full)."""
    T = np.asarray(T, dtype=np.complex128)
    r = K.alpha.max_residual_of(np.einsum("ij,bjk->bik", T, H.alpha.basis)) if H.alpha.dim else 0.0
    if kind == "full" and K.alpha.dim:
        r = max(r, H.alpha.max_residual_of(np.einsum("ij,bjk->bik", T.conj().T, K.alpha.basis)))
    return r


@dataclass
class DirectSum:
    module: object
    injections: list
    projections: list
    report: Report


def _block_columns(spaces: Sequence[OperatorSpace], dims: Sequence[int], k: int) -> OperatorSpace:
    h = int(sum(dims))
    vecs = []
    off = 0
    for sp, d in zip(spaces, dims):
        for xi in sp.basis:
            v = np.zeros((h, k), dtype=np.complex128)
            v[off:off + d] = xi
            vecs.append(v)
        off += d
    return OperatorSpace(h, k, stack_matrices(vecs, (h, k)) if vecs else np.zeros((0, h, k)))


def _inj_proj(dims):
    h = int(sum(dims))
    inj, proj = [], []
    off = 0
    for d in dims:
        i = np.zeros((h, d), dtype=np.complex128)
        i[off:off + d] = np.eye(d)
        inj.append(i)
        proj.append(i.conj().T)
        off += d
    return inj, proj


def direct_sum(items: Sequence, tol: Tolerance = DEFAULT_TOL) -> DirectSum:
    """Direct sum of modules or bimodules over common bases, with injections and projections."""
    items = list(items)
    if not items:
        raise ValueError("empty family")
    dims = [m.h_dim for m in items]
    inj, proj = _inj_proj(dims)
    rep = Report("direct sum")
    if isinstance(items[0], CStarBimodule):
        k_a, k_b = items[0].alpha_base.k_dim, items[0].beta_base.k_dim
        alpha = _block_columns([m.alpha for m in items], dims, k_a)
        beta = _block_columns([m.beta for m in items], dims, k_b)
        out = CStarBimodule(items[0].alpha_base, items[0].beta_base, sum(dims), alpha, beta)
        for j, m in enumerate(items):
            r = max(morphism_residual(inj[j], m.alpha_module, out.alpha_module, "full"),
                    morphism_residual(inj[j], m.beta_module, out.beta_module, "full"),
                    morphism_residual(proj[j], out.alpha_module, m.alpha_module, "full"),
                    morphism_residual(proj[j], out.beta_module, m.beta_module, "full"))
            rep.add(f"iota_pi_{j}", "iota_j, pi_j are morphisms", r, tol.residual_abs)
    else:
        k = items[0].k_dim
        alpha = _block_columns([m.alpha for m in items], dims, k)
        out = CStarModule(items[0].base, sum(dims), alpha)
        for j, m in enumerate(items):
            r = max(morphism_residual(inj[j], m, out, "full"), morphism_residual(proj[j], out, m, "full"))
            rep.add(f"iota_pi_{j}", "iota_j, pi_j are morphisms", r, tol.residual_abs)
    total = sum(i @ p for i, p in zip(inj, proj))
    rep.add("biproduct", "sum iota_j pi_j = Id", np.abs(total - np.eye(sum(dims))).max(), tol.residual_abs)
    return DirectSum(out, inj, proj, rep)


def intertwiner_space(src_ops, dst_ops, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """{T : K -> H with T s_i = d_i T} for paired generators s_i on K, d_i on H."""
    S = stack_matrices(src_ops)
    D = stack_matrices(dst_ops)
    if S.shape[0] != D.shape[0]:
        raise ShapeMismatch("source and target generators must be paired")
    k, h = S.shape[1], D.shape[1]
    for ops, dim, name in ((S, k, "source"), (D, h, "target")):
        r = nondegeneracy_rank(OperatorSpace(dim, dim, ops / np.maximum(
            1e-300, np.linalg.norm(ops.reshape(ops.shape[0], -1), axis=1))[:, None, None]), tol)
        if r < dim:
            raise DegenerateRep(f"{name} representation is degenerate (rank {r} < {dim})")
    eye_h, eye_k = np.eye(h), np.eye(k)
    blocks = (np.kron(eye_h, s.T) - np.kron(d, eye_k) for s, d in zip(S, D))
    scale = max(np.abs(S).max(), np.abs(D).max())
    N = stacked_nullspace(blocks, h * k, tol, scale=scale)
    return OperatorSpace(h, k, orthonormal_basis(N.T.reshape(-1, h, k), tol, shape=(h, k)))


def module_intertwiner_space(mod: CStarModule, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """L((K, id on B'), (H, rho_alpha)): all T with T y = rho_alpha(y) T for y in B'."""
    Bc = mod.base.b_commutant.basis
    return intertwiner_space(Bc, [rho(mod, y, tol) for y in Bc], tol)
