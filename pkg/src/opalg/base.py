"""C*-bases (K, B, B†): the trivial base, opposites, GNS bases and
bimodules coming from conditional expectations."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import NonFaithful, NotCompatible, NotConditionalExpectation, ShapeMismatch
from .linalg import DEFAULT_TOL, Tolerance, gram_completion, hermitize
from .opspace import (ConcreteAlgebra, OperatorSpace, algebra_commutant, algebra_from_basis,
                      closure_residuals, generated_algebra,
                      nondegeneracy_rank, span)
from .report import Report


@dataclass(frozen=True, eq=False)
class CStarBase:
    k_dim: int
    b: ConcreteAlgebra
    b_dag: ConcreteAlgebra

    def __post_init__(self):
        if self.b.n != self.k_dim or self.b_dag.n != self.k_dim:
            raise ShapeMismatch("base algebras must act on C^k_dim")

    def __repr__(self):
        return f"CStarBase(k={self.k_dim}, dim B={self.b.dim}, dim B†={self.b_dag.dim})"

    @cached_property
    def b_commutant(self) -> ConcreteAlgebra:
        """B', the domain of rho for modules over this base."""
        return algebra_commutant(self.b)

    @cached_property
    def b_dag_commutant(self) -> ConcreteAlgebra:
        return algebra_commutant(self.b_dag)

    @cached_property
    def opposite(self) -> "CStarBase":
        opp = CStarBase(self.k_dim, self.b_dag, self.b)
        object.__setattr__(opp, "opposite", self)
        return opp

    def same_as(self, other: "CStarBase", tol: Tolerance = DEFAULT_TOL) -> bool:
        return (self is other or (self.k_dim == other.k_dim and self.b.equals(other.b, tol)
                                  and self.b_dag.equals(other.b_dag, tol)))


def trivial_base() -> CStarBase:
    one = algebra_from_basis([np.ones((1, 1))], 1)
    return CStarBase(1, one, one)


def opposite_base(base: CStarBase) -> CStarBase:
    return base.opposite


def check_base(base: CStarBase, tol: Tolerance = DEFAULT_TOL) -> Report:
    rep = Report("C*-base axioms")
    k = base.k_dim
    comm = 0.0
    for x in base.b.basis:
        if base.b_dag.dim:
            d = np.einsum("ij,bjk->bik", x, base.b_dag.basis) - np.einsum("bij,jk->bik", base.b_dag.basis, x)
            comm = max(comm, float(np.abs(d).max()))
    rep.add("commute", "xy = yx for x in B, y in B†", comm, tol.residual_abs,
            {"k": k, "B": base.b.dim, "B_dag": base.b_dag.dim})
    for name, alg in (("B", base.b), ("B_dag", base.b_dag)):
        adj, prod = closure_residuals(alg.space)
        rep.add(f"{name}_closed", f"{name} closed under * and products", max(adj, prod), tol.residual_abs)
        r = nondegeneracy_rank(alg.space, tol)
        rep.add_flag(f"{name}_nondegenerate", f"[{name} K] = K", r == k, dims={"rank": r, "k": k})
    return rep


def check_equivalent(b1: CStarBase, b2: CStarBase, V: np.ndarray,
                     tol: Tolerance = DEFAULT_TOL) -> Report:
    """Verify a user-supplied unitary V with Ad_V(B1) = B2 and Ad_V(B1†) = B2†."""
    rep = Report("base equivalence")
    V = np.asarray(V, dtype=np.complex128)
    rep.add("unitary", "V*V = Id, VV* = Id",
            max(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max(),
                np.abs(V @ V.conj().T - np.eye(V.shape[0])).max()), tol.residual_abs)
    for name, a1, a2 in (("B", b1.b, b2.b), ("B_dag", b1.b_dag, b2.b_dag)):
        img = span([V @ x @ V.conj().T for x in a1.basis], (b2.k_dim, b2.k_dim), tol)
        rep.add(f"Ad_V({name})", f"V {name}1 V* = {name}2", img.equality_residual(a2.space), tol.residual_abs)
    return rep


# ---------------------------------------------------------------- GNS


@dataclass(frozen=True, eq=False)
class GNSData:
    """GNS data of a faithful state mu(a) = trace(density a) on a concrete algebra.

    lambda_ maps algebra-basis coefficients to H_mu coordinates.  The modular
    conjugation acts as v -> j @ conj(v).
    """

    algebra: ConcreteAlgebra
    state_density: np.ndarray
    lambda_: np.ndarray
    pi: np.ndarray      # (m, g, g): pi(e_i) for the algebra basis e_i
    j: np.ndarray
    pi_op: np.ndarray   # (m, g, g): J pi(e_i)* J

    @property
    def algebra_dim(self) -> int:
        return self.algebra.dim

    @property
    def gns_dim(self) -> int:
        return self.lambda_.shape[0]

    def coeffs(self, a) -> np.ndarray:
        return self.algebra.space.coeffs(np.asarray(a, dtype=np.complex128))

    def lam(self, a) -> np.ndarray:
        return self.lambda_ @ self.coeffs(a)

    def rep(self, a) -> np.ndarray:
        return np.tensordot(self.coeffs(a), self.pi, axes=(0, 0))

    def rep_op(self, a) -> np.ndarray:
        """pi_op(a) = J pi(a)* J; linear in a."""
        return np.tensordot(self.coeffs(a), self.pi_op, axes=(0, 0))

    def apply_j(self, v) -> np.ndarray:
        return self.j @ np.conj(v)

    def conj_by_j(self, X) -> np.ndarray:
        """Matrix of the linear map J X J."""
        return self.j @ np.conj(X) @ np.conj(self.j)

    def state(self, a) -> complex:
        return complex(np.trace(self.state_density @ a))

    @cached_property
    def pi_algebra(self) -> ConcreteAlgebra:
        return algebra_from_basis(self.pi, self.gns_dim)

    @cached_property
    def pi_op_algebra(self) -> ConcreteAlgebra:
        return algebra_from_basis(self.pi_op, self.gns_dim)

    @cached_property
    def base(self) -> CStarBase:
        return CStarBase(self.gns_dim, self.pi_algebra, self.pi_op_algebra)


def gns(algebra: ConcreteAlgebra, density, tol: Tolerance = DEFAULT_TOL) -> GNSData:
    """GNS representation of the state trace(density . ) restricted to the algebra.

    H_mu is the separated completion of the algebra for <a, b> = mu(a* b); the
    conjugation J is the antiunitary part of the polar decomposition of the
    closed map Lambda(a) -> Lambda(a*).
    """
    E = algebra.basis
    m, n = E.shape[0], algebra.n
    delta = np.asarray(density, dtype=np.complex128)
    if delta.shape != (n, n):
        raise ShapeMismatch(f"density must be {n}x{n}")
    EH = E.conj().transpose(0, 2, 1)
    G = np.einsum("ij,ajk,bki->ab", delta, EH, E)
    try:
        gc = gram_completion(G, tol)
    except Exception as exc:
        raise NonFaithful(f"state is not positive: {exc}") from exc
    if gc.out_dim < m:
        raise NonFaithful(f"state is not faithful: GNS rank {gc.out_dim} < {m}")
    W = gc.synthesis                      # (m, m): columns Lambda(e_i)
    Winv = np.linalg.inv(W)
    # left multiplication and adjoint on algebra coefficients
    prods = np.einsum("aij,bjk->abik", E, E)                 # e_a e_b
    Lmul = np.einsum("abik,cik->acb", prods, E.conj())        # [a][c, b] = <e_c, e_a e_b>
    pi = np.einsum("ij,ajk,kl->ail", W, Lmul, Winv)
    P = np.einsum("aij,bij->ba", EH, E.conj())                # coefficients of e_a*
    S = W @ P @ np.conj(Winv)
    Delta = hermitize(S.T @ np.conj(S))
    w, V = np.linalg.eigh(Delta)
    if w[0] <= 0:
        raise NonFaithful("modular operator is singular")
    Dm12 = (V / np.sqrt(w)[None, :]) @ V.conj().T
    J = S @ np.conj(Dm12)
    pi_op = np.einsum("ij,akj,kl->ail", J, pi, np.conj(J))   # J pi(a)* J as a linear map
    return GNSData(algebra, delta, W, pi, J, pi_op)


def block_algebra(blocks: Sequence[int]) -> ConcreteAlgebra:
    """⊕ M_{n_i} as block-diagonal matrices, basis = matrix units in block order."""
    n = int(sum(blocks))
    units = []
    off = 0
    for b in blocks:
        for r in range(b):
            for c in range(b):
                E = np.zeros((n, n), dtype=np.complex128)
                E[off + r, off + c] = 1.0
                units.append(E)
        off += b
    return ConcreteAlgebra(OperatorSpace(n, n, np.array(units).reshape(-1, n, n)), True)


def block_density(blocks: Sequence[int], state_weights) -> np.ndarray:
    """Density of a state on ⊕ M_{n_i}.

    Each weight is the mass of its block: a scalar (tracial inside the block),
    a vector of diagonal entries, or a full positive matrix.  The result is
    normalized to trace one.
    """
    if len(state_weights) != len(blocks):
        raise ShapeMismatch("one weight entry per block is required")
    n = int(sum(blocks))
    delta = np.zeros((n, n), dtype=np.complex128)
    off = 0
    for b, w in zip(blocks, state_weights):
        w = np.asarray(w, dtype=np.complex128)
        if w.ndim == 0:
            d = np.eye(b) * w / b
        elif w.ndim == 1:
            if w.size != b:
                raise ShapeMismatch(f"block of size {b} got {w.size} diagonal weights")
            d = np.diag(w)
        else:
            if w.shape != (b, b):
                raise ShapeMismatch(f"block of size {b} got a {w.shape} density")
            d = w
        delta[off:off + b, off:off + b] = d
        off += b
    delta = hermitize(delta)
    ev = np.linalg.eigvalsh(delta)
    if ev[0] <= 0:
        raise NonFaithful("state weights must be strictly positive")
    return delta / np.trace(delta).real


def gns_base(blocks: Sequence[int], state_weights, tol: Tolerance = DEFAULT_TOL):
    """(base, gns data) for A = ⊕ M_{n_i} with the given faithful state."""
    A = block_algebra(blocks)
    g = gns(A, block_density(blocks, state_weights), tol)
    return g.base, g


def check_gns(g: GNSData, tol: Tolerance = DEFAULT_TOL) -> Report:
    """State reproduction, J^2 = Id, J antiunitary and the Tomita relation."""
    rep = Report("GNS data")
    E = g.algebra.basis
    lam = g.lambda_
    mu = np.array([[g.state(a.conj().T @ b) for b in E] for a in E])
    rep.add("state", "<Lambda(a), Lambda(b)> = mu(a* b)", np.abs(lam.conj().T @ lam - mu).max(),
            tol.residual_abs)
    J = g.j
    rep.add("J_involution", "J^2 = Id", np.abs(J @ np.conj(J) - np.eye(g.gns_dim)).max(), tol.residual_abs)
    rep.add("J_antiunitary", "<Jx, Jy> = <y, x>", np.abs(J.conj().T @ J - np.eye(g.gns_dim)).max(),
            tol.residual_abs)
    # J pi(a)* J = pi_op(a), checked against an independent evaluation
    res = 0.0
    for a, pa, po in zip(E, g.pi, g.pi_op):
        res = max(res, np.abs(g.conj_by_j(pa.conj().T) - po).max())
    rep.add("J_pi_J", "J pi(a)* J = pi_op(a)", res, tol.residual_abs)
    # Tomita relation J Lambda(d^1/2 a d^-1/2) = Lambda(a*), with Delta = Ad(density)
    d = g.state_density
    if g.algebra.contains(d, tol):
        w, V = np.linalg.eigh(hermitize(d))
        dh = (V * np.sqrt(w)) @ V.conj().T
        dmh = (V / np.sqrt(w)) @ V.conj().T
        t_res = max(np.abs(g.apply_j(g.lam(dh @ a @ dmh)) - g.lam(a.conj().T)).max() for a in E)
        rep.add("tomita", "J Delta^1/2 Lambda(a) = Lambda(a*)", t_res, tol.residual_abs)
    else:
        rep.skip("tomita", "J Delta^1/2 Lambda(a) = Lambda(a*)", "density outside the algebra")
    rep.add("pi_hom", "pi(ab) = pi(a) pi(b)",
            max(np.abs(g.rep(a @ b) - g.rep(a) @ g.rep(b)).max() for a in E for b in E),
            tol.residual_abs)
    rep.add("pi_star", "pi(a*) = pi(a)*", max(np.abs(g.rep(a.conj().T) - g.rep(a).conj().T).max() for a in E),
            tol.residual_abs)
    comm = max(np.abs(p @ q - q @ p).max() for p in g.pi for q in g.pi_op)
    rep.add("commute", "pi(a) pi_op(b) = pi_op(b) pi(a)", comm, tol.residual_abs)
    return rep


# ---------------------------------------------------------------- conditional expectations


def kraus_map(kraus: Sequence[np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """phi(a) = sum_n K_n* a K_n."""
    Ks = [np.asarray(k, dtype=np.complex128) for k in kraus]

    def phi(a):
        return sum(k.conj().T @ a @ k for k in Ks)
    return phi


def _choi_on_algebra(phi, A: ConcreteAlgebra) -> np.ndarray:
    """Choi matrix of phi composed with the trace-preserving projection onto A."""
    n = A.n
    blocks = np.zeros((n, n, n, n), dtype=np.complex128)
    for j in range(n):
        for k in range(n):
            E = np.zeros((n, n), dtype=np.complex128)
            E[j, k] = 1.0
            blocks[j, k] = phi(A.space.project(E))
    # rows (j, r), cols (k, s): sum_jk E_jk ⊗ phi(P(E_jk))
    return blocks.transpose(0, 2, 1, 3).reshape(n * n, n * n)


def conditional_expectation_bimodule(A: ConcreteAlgebra, B_gens, phi, mu_density,
                                     tol: Tolerance = DEFAULT_TOL):
    """Bimodule H_nu built from a conditional expectation phi: A -> B and a state mu on B.

    Returns (bimodule, pi_nu(A), pi_nu_op(A), report, data) where data holds the
    two GNS constructions and the isometry zeta: H_mu -> H_nu.
    """
    from .module import CStarBimodule, rho

    n = A.n
    if callable(phi) is False:
        phi = kraus_map(phi)
    eye = np.eye(n)
    rep = Report("conditional expectation bimodule")
    if not A.contains(eye, tol):
        raise NotConditionalExpectation("A must be unital")
    B = generated_algebra(B_gens, unital=True, tol=tol, n=n)
    sub = B.space.inside(A.space)
    if sub > tol.residual_abs:
        raise NotConditionalExpectation(f"B is not contained in A (residual {sub:.3e})")
    EA, EB = A.basis, B.basis
    phiA = np.array([phi(a) for a in EA])
    r_range = B.space.max_residual_of(phiA)
    r_proj = max(np.abs(phi(b) - b).max() for b in EB)
    r_bimod = 0.0
    for a, pa in zip(EA, phiA):
        for b1 in EB:
            for b2 in EB:
                r_bimod = max(r_bimod, np.abs(phi(b1 @ a @ b2) - b1 @ pa @ b2).max())
    choi_min = float(np.linalg.eigvalsh(hermitize(_choi_on_algebra(phi, A)))[0])
    rep.add("phi_range", "phi(A) ⊆ B", r_range, tol.residual_abs)
    rep.add("phi_projection", "phi(b) = b", r_proj, tol.residual_abs)
    rep.add("phi_bimodular", "phi(b a b') = b phi(a) b'", r_bimod, tol.residual_abs)
    rep.add("phi_positive", "Choi(phi) >= 0", max(0.0, -choi_min), tol.residual_abs)
    if not rep.passed:
        raise NotConditionalExpectation(rep.render())

    dmu = B.space.project(np.asarray(mu_density, dtype=np.complex128))
    dmu = dmu / np.trace(dmu)
    if np.linalg.eigvalsh(hermitize(dmu))[0] <= tol.residual_abs:
        raise NonFaithful("mu is not faithful on B")
    nu_vals = np.array([np.trace(dmu @ pa) for pa in phiA])
    dnu = hermitize(np.tensordot(np.conj(nu_vals), EA, axes=(0, 0)))
    if np.linalg.eigvalsh(dnu)[0] <= tol.residual_abs:
        raise NonFaithful("nu = mu o phi is not faithful")
    dnu_inv, dmu_inv = np.linalg.inv(dnu), np.linalg.inv(dmu)
    r_mod = max(np.abs(phi(dnu @ a @ dnu_inv) - dmu @ pa @ dmu_inv).max() for a, pa in zip(EA, phiA))
    rep.add("modular_compatible", "phi(d_nu a d_nu^-1) = d_mu phi(a) d_mu^-1", r_mod, tol.residual_abs)
    if r_mod > tol.residual_abs:
        raise NotCompatible(f"modular compatibility fails (residual {r_mod:.3e})")

    g_mu = gns(B, dmu, tol)
    g_nu = gns(A, dnu, tol)
    base = g_mu.base
    CB = np.array([A.space.coeffs(b) for b in EB]).T          # A-coefficients of B basis
    zeta = g_nu.lambda_ @ CB @ np.linalg.inv(g_mu.lambda_)
    rep.add("zeta_isometry", "zeta* zeta = Id", np.abs(zeta.conj().T @ zeta - np.eye(g_mu.gns_dim)).max(),
            tol.residual_abs)
    hn, km = g_nu.gns_dim, g_mu.gns_dim
    beta = span([p @ zeta for p in g_nu.pi], (hn, km), tol)
    # J_nu pi(a) zeta J_mu as a linear map
    alpha = span([g_nu.j @ np.conj(p) @ np.conj(zeta) @ np.conj(g_mu.j) for p in g_nu.pi], (hn, km), tol)
    alpha_op = span([p @ zeta for p in g_nu.pi_op], (hn, km), tol)
    rep.add("alpha_is_op_side", "[J pi(A) zeta J] = [pi_op(A) zeta]", alpha.equality_residual(alpha_op),
            tol.residual_abs)
    bim = CStarBimodule(base.opposite, base, hn, alpha, beta)
    from .module import CStarModule
    amod, bmod = CStarModule(base.opposite, hn, alpha), CStarModule(base, hn, beta)
    r_a = max(np.abs(rho(amod, g_mu.rep(b), tol) - g_nu.rep(b)).max() for b in EB)
    r_b = max(np.abs(rho(bmod, g_mu.rep_op(b), tol) - g_nu.rep_op(b)).max() for b in EB)
    rep.add("rho_alpha", "rho_alpha(pi_mu(b)) = pi_nu(b)", r_a, tol.residual_abs)
    rep.add("rho_beta", "rho_beta(pi_mu_op(b)) = pi_nu_op(b)", r_b, tol.residual_abs)
    piA = algebra_from_basis(g_nu.pi, hn, tol)
    piA_op = algebra_from_basis(g_nu.pi_op, hn, tol)
    absorb = beta.max_residual_of(np.einsum("aij,bjk->abik", piA.basis, beta.basis).reshape(-1, hn, km))
    rep.add("pi_A_beta", "pi_nu(A) beta ⊆ beta", absorb, tol.residual_abs)
    data = {"gns_mu": g_mu, "gns_nu": g_nu, "zeta": zeta, "B": B}
    return bim, piA, piA_op, rep, data
