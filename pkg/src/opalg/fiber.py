"""Induced algebras Ind_I(A), the spatial fiber product A * B over a base, and
its structure: property checks, the commutant description, functoriality,
slice maps, unitality and finite direct sums.

All closures [.] are plain spans: every vector topology on a finite-dimensional
space is the same, so the I-strong-* closure adds nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (DegenerateInput, NotBAlgebra, NotCP, NotInCommutant, NotMorphism,
                     NotSpatiallyImplemented, PreconditionFailed, ShapeMismatch)
from .linalg import (DEFAULT_TOL, Tolerance, commutant, hermitize, min_eig, op_norm, orthonormal_basis,
                     solve_intertwiner, stacked_nullspace)
from .module import (CStarBimodule, CStarModule, base_module, direct_sum, morphism_space, rho,
                     rho_space)
from .opspace import (ConcreteAlgebra, OperatorSpace, algebra_commutant, algebra_from_space,
                      closure_residuals, multiplier_algebra, nondegeneracy_rank,
                      space_adjoint, space_intersection, space_product, span)
from .report import Report
from .rtp import (InternalTensor, RelativeTensorProduct, assoc_iso, internal_tensor, op_tensor,
                  rtp, rtp_bimodule, unit_r)


# ---------------------------------------------------------------- module algebras


@dataclass(frozen=True, eq=False)
class ModuleAlgebra:
    """A concrete algebra on the Hilbert space of a module or bimodule."""

    module: object
    algebra: ConcreteAlgebra

    def __post_init__(self):
        if self.algebra.n != self.module.h_dim:
            raise ShapeMismatch("algebra and module act on spaces of different dimension")

    @property
    def right(self) -> CStarModule:
        """The leg used when this algebra is the left factor of a fiber product."""
        m = self.module
        return m.beta_module if isinstance(m, CStarBimodule) else m

    @property
    def left(self) -> CStarModule:
        """The leg used when this algebra is the right factor of a fiber product."""
        m = self.module
        return m.alpha_module if isinstance(m, CStarBimodule) else m

    def __repr__(self):
        return f"ModuleAlgebra(h={self.module.h_dim}, dim={self.algebra.dim})"


def base_action(mod: CStarModule, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """rho_leg of the second algebra of the base, e.g. rho_beta(B†) for beta over b."""
    return rho_space(mod, mod.base.b_dag.space, tol)


def _absorb_residual(R: OperatorSpace, A: OperatorSpace) -> float:
    if R.dim == 0 or A.dim == 0:
        return 0.0
    n = A.cod_dim
    return A.max_residual_of(np.einsum("aij,bjk->abik", R.basis, A.basis).reshape(-1, n, n))


def b_algebra_residual(alg: ConcreteAlgebra, mod: CStarModule, tol: Tolerance = DEFAULT_TOL) -> float:
    """Residual of rho(B†) A ⊆ A."""
    return _absorb_residual(base_action(mod, tol), alg.space)


def _products_in(F: OperatorSpace, X: np.ndarray, Y: np.ndarray) -> float:
    if len(X) == 0 or len(Y) == 0:
        return 0.0
    n = F.cod_dim
    return F.max_residual_of(np.einsum("aij,bjk->abik", X, Y).reshape(-1, n, n))


# ---------------------------------------------------------------- Ind_I(A)


@dataclass
class IndResult:
    algebra: ConcreteAlgebra
    i_space: OperatorSpace
    target: OperatorSpace
    report: Report


def ind_preconditions(I: OperatorSpace, A: ConcreteAlgebra, tol: Tolerance = DEFAULT_TOL) -> Report:
    rep = Report("induction preconditions")
    K, H = I.shape
    if A.n != H:
        raise ShapeMismatch("A must act on the domain of I")
    miss_k = K - nondegeneracy_rank(I, tol)
    Ia = space_adjoint(I, tol)
    miss_h = H - nondegeneracy_rank(Ia, tol)
    rep.add("[IH]=K", "[I H] = K", float(miss_k), 0.5, {"rank_defect": miss_k})
    rep.add("[I*K]=H", "[I* K] = H", float(miss_h), 0.5, {"rank_defect": miss_h})
    III = space_product(space_product(I, Ia, tol), I, tol)
    rep.add("[II*I]=I", "[I I* I] = I", III.equality_residual(I), tol.residual_abs)
    IIA = space_product(space_product(Ia, I, tol), A.space, tol)
    rep.add("I*IA⊆A", "I* I A ⊆ A", IIA.inside(A.space), tol.residual_abs)
    return rep


def _ind_blocks(I: OperatorSpace, Y: OperatorSpace, Ys: OperatorSpace):
    # T I ⊆ Y and I* T ⊆ Y*, the second being the adjoint of T* I ⊆ Y
    K = I.cod_dim
    eye = np.eye(K)
    for S in I.basis:
        yield Y.complement_apply(np.kron(eye, S.T))
        yield Ys.complement_apply(np.kron(S.conj().T, eye))


def _solution_space(blocks, n: int, tol: Tolerance) -> OperatorSpace:
    N = stacked_nullspace(blocks, n * n, tol)
    return OperatorSpace(n, n, orthonormal_basis(N.T.reshape(-1, n, n), tol, shape=(n, n)))


def _closure_checks(rep: Report, space: OperatorSpace, tol: Tolerance, prefix: str = ""):
    adj, prod = closure_residuals(space)
    rep.add(prefix + "star_closed", "X* ⊆ X", adj, tol.residual_abs, {"dim": space.dim})
    rep.add(prefix + "product_closed", "X X ⊆ X", prod, tol.residual_abs)


def ind(I: OperatorSpace, A, tol: Tolerance = DEFAULT_TOL, check: bool = True) -> IndResult:
    """Ind_I(A) = {T : T I + T* I ⊆ [I A]} on the codomain of I."""
    A = A if isinstance(A, ConcreteAlgebra) else algebra_from_space(A, tol)
    rep = Report("induced algebra")
    if check:
        pre = ind_preconditions(I, A, tol)
        rep.extend(pre, "pre.")
        for c in pre.checks:
            if c.status == "fail":
                raise PreconditionFailed(c.name, c.max_residual)
    Y = space_product(I, A.space, tol)
    sol = _solution_space(_ind_blocks(I, Y, space_adjoint(Y, tol)), I.cod_dim, tol)
    _closure_checks(rep, sol, tol)
    return IndResult(algebra_from_space(sol, tol), I, Y, rep)


def ind_span(I: OperatorSpace, A, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """[I A I*], the finite-dimensional form of the closure [I A I*]_I."""
    S = A.space if isinstance(A, ConcreteAlgebra) else A
    return space_product(space_product(I, S, tol), space_adjoint(I, tol), tol)


def rho_I(I: OperatorSpace, y, tol: Tolerance = DEFAULT_TOL, check: bool = True) -> np.ndarray:
    """The operator R on the codomain with R S = S y for all S in I, for y in (I*I)'."""
    y = np.asarray(y, dtype=np.complex128)
    if check:
        r = 0.0
        for S in I.basis:
            for T in I.basis:
                m = S.conj().T @ T
                r = max(r, np.abs(m @ y - y @ m).max())
        if r > tol.residual_abs * max(1.0, np.abs(y).max()):
            raise NotInCommutant(f"y does not commute with I*I (residual {r:.3e})")
    L = np.hstack(list(I.basis))
    R = np.hstack([S @ y for S in I.basis])
    return solve_intertwiner([(L, R)], (I.cod_dim, I.cod_dim), tol)


def check_ind(res: IndResult, A: ConcreteAlgebra, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Properties of Ind_I(A): slices, span form, multipliers, nondegeneracy, commutant."""
    rep = Report("induced algebra properties")
    I, F = res.i_space, res.algebra.space
    slices = np.array([S.conj().T @ x @ T for S in I.basis for x in F.basis for T in I.basis])
    rep.add("i.slices", "[I* Ind(A) I] ⊆ A", A.space.max_residual_of(slices) if len(slices) else 0.0,
            tol.residual_abs)
    sp = ind_span(I, A, tol)
    rep.add("i.span", "Ind(A) = [I A I*]", sp.equality_residual(F), tol.residual_abs,
            {"ind": F.dim, "span": sp.dim})
    a_nd = A.nondegenerate
    i_nd = res.algebra.nondegenerate
    rep.add_flag("iii.nondegenerate", "Ind(A) nondegenerate ⇔ A nondegenerate", a_nd == i_nd,
                 note=f"A {'non' if a_nd else ''}degenerate, Ind(A) {'non' if i_nd else ''}degenerate")
    if a_nd:
        MA = multiplier_algebra(A, tol)
        MI = ind(I, MA, tol, check=False).algebra.space
        r = max(_products_in(F, MI.basis, F.basis), _products_in(F, F.basis, MI.basis))
        rep.add("ii.multipliers", "Ind(M(A)) ⊆ M(Ind(A))", r, tol.residual_abs, {"ind_MA": MI.dim})
        Ac = algebra_commutant(A, tol)
        II = space_product(space_adjoint(I, tol), I, tol)
        r1 = max((np.abs(y @ m - m @ y).max() for y in Ac.basis for m in II.basis), default=0.0)
        rep.add("iv.commutant", "A' ⊆ (I*I)'", r1, tol.residual_abs)
        r2 = 0.0
        for y in Ac.basis:
            R = rho_I(I, y, tol, check=False)
            r2 = max(r2, max((np.abs(R @ x - x @ R).max() for x in F.basis), default=0.0))
        rep.add("iv.rho_commutant", "Ind(A) ⊆ rho_I(A')'", r2, tol.residual_abs)
    else:
        rep.skip("ii.multipliers", "Ind(M(A)) ⊆ M(Ind(A))", "A degenerate")
        rep.skip("iv.commutant", "A' ⊆ (I*I)'", "A degenerate")
    return rep


# ---------------------------------------------------------------- fiber products


@dataclass
class FiberProduct:
    algebra: ConcreteAlgebra
    rtp: RelativeTensorProduct
    A: ModuleAlgebra
    B: ModuleAlgebra
    report: Report
    legs: object = None

    @property
    def space(self) -> OperatorSpace:
        return self.algebra.space

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def __repr__(self):
        return f"FiberProduct(rtp dim={self.rtp.dim}, dim={self.dim})"


def fiber_product(A: ModuleAlgebra, B: ModuleAlgebra, tol: Tolerance = DEFAULT_TOL,
                  X: RelativeTensorProduct | None = None, method: str = "stacked") -> FiberProduct:
    """A * B = Ind_{|gamma>_2}(A) ∩ Ind_{|beta>_1}(B) on H ⊗_b K.

    method 'stacked' solves all four constraint families at once; 'intersection'
    computes both induced algebras and intersects them.
    """
    mA, mB = A.right, B.left
    rep = Report("fiber product")
    ra = b_algebra_residual(A.algebra, mA, tol)
    rb = b_algebra_residual(B.algebra, mB, tol)
    rep.add("A_b_algebra", "rho_beta(B†) A ⊆ A", ra, tol.residual_abs)
    rep.add("B_b_algebra", "rho_gamma(B) B ⊆ B", rb, tol.residual_abs)
    if ra > tol.residual_abs:
        raise NotBAlgebra(f"rho_beta(B†) A ⊄ A (residual {ra:.3e})")
    if rb > tol.residual_abs:
        raise NotBAlgebra(f"rho_gamma(B) B ⊄ B (residual {rb:.3e})")
    X = X or rtp(mA, mB, tol)
    I2, I1 = X.ket2_space, X.ket1_space
    if method == "stacked":
        Y2 = space_product(I2, A.algebra.space, tol)
        Y1 = space_product(I1, B.algebra.space, tol)

        def blocks():
            yield from _ind_blocks(I2, Y2, space_adjoint(Y2, tol))
            yield from _ind_blocks(I1, Y1, space_adjoint(Y1, tol))
        sol = _solution_space(blocks(), X.dim, tol)
    elif method == "intersection":
        s2 = ind(I2, A.algebra, tol, check=False).algebra.space
        s1 = ind(I1, B.algebra, tol, check=False).algebra.space
        sol = space_intersection(s2, s1, tol=tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    _closure_checks(rep, sol, tol)
    legs = None
    if isinstance(A.module, CStarBimodule) and isinstance(B.module, CStarBimodule):
        legs = rtp_bimodule(A.module, B.module, tol, X=X, verify=False)
    return FiberProduct(algebra_from_space(sol, tol), X, A, B, rep, legs)


def fiber_bimodule(A: ModuleAlgebra, B: ModuleAlgebra, tol: Tolerance = DEFAULT_TOL,
                   X: RelativeTensorProduct | None = None) -> FiberProduct:
    """Fiber product of bimodule algebras with the absorption of the outer base actions checked."""
    if not (isinstance(A.module, CStarBimodule) and isinstance(B.module, CStarBimodule)):
        raise ShapeMismatch("fiber_bimodule needs algebras on bimodules")
    fp = fiber_product(A, B, tol, X)
    rb = rtp_bimodule(A.module, B.module, tol, X=fp.rtp, verify=True)
    fp.legs = rb
    fp.report.extend(rb.report, "legs.")
    outer_a = base_action(A.module.alpha_module, tol)
    outer_c = base_action(B.module.beta_module, tol)
    rep = fp.report
    rep.add("A_outer_algebra", "rho_alpha(A) A ⊆ A", _absorb_residual(outer_a, A.algebra.space), tol.residual_abs)
    rep.add("B_outer_algebra", "rho_delta(C†) B ⊆ B", _absorb_residual(outer_c, B.algebra.space), tol.residual_abs)
    la = base_action(rb.bimodule.alpha_module, tol)
    lc = base_action(rb.bimodule.beta_module, tol)
    rep.add("absorb_left", "rho_(alpha◁gamma)(A) (A*B) ⊆ A*B", _absorb_residual(la, fp.space),
            tol.residual_abs, {"fp": fp.dim})
    rep.add("absorb_right", "rho_(beta▷delta)(C†) (A*B) ⊆ A*B", _absorb_residual(lc, fp.space),
            tol.residual_abs)
    return fp


def fiber_algebra(fp: FiberProduct, side: str) -> ModuleAlgebra:
    """A * B as an algebra on the rtp bimodule (both factors must be bimodule algebras)."""
    if fp.legs is None:
        raise ShapeMismatch("fiber product was not formed from bimodule algebras")
    return ModuleAlgebra(fp.legs.bimodule, fp.algebra)


def full_morphism_part(alg: ConcreteAlgebra, mod: CStarModule, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """A^(leg) = A ∩ L(H_leg)."""
    L = morphism_space(mod, mod, "full", tol).space
    return space_intersection(alg.space, L, tol=tol)


def _ms_space(Y: OperatorSpace, Xs: OperatorSpace, tol: Tolerance) -> OperatorSpace:
    n = Y.cod_dim
    eye = np.eye(n)

    def blocks():
        for x in Xs.basis:
            yield Y.complement_apply(np.kron(eye, x.T))
            yield Y.complement_apply(np.kron(x, eye))
    return _solution_space(blocks(), n, tol)


def check_fiber_properties(fp: FiberProduct, tol: Tolerance = DEFAULT_TOL, ms_limit: int = 24) -> Report:
    """Structural properties of A * B, item by item.

    Items with an unmet premise are recorded as skipped; item v is an
    equivalence and is checked in whichever direction applies.
    """
    rep = Report("fiber product properties")
    X, F = fp.rtp, fp.space
    A, B = fp.A.algebra, fp.B.algebra
    mA, mB = fp.A.right, fp.B.left
    d = X.dim
    eye = np.eye(d)
    K1, K2 = X._ket1_basis, X._ket2_basis

    # i: slices land in the factors
    s1 = np.array([k.conj().T @ x @ l for k in K1 for x in F.basis for l in K1]).reshape(-1, mB.h_dim, mB.h_dim)
    s2 = np.array([k.conj().T @ x @ l for k in K2 for x in F.basis for l in K2]).reshape(-1, mA.h_dim, mA.h_dim)
    rep.add("i.beta_slice", "<beta|_1 (A*B) |beta>_1 ⊆ B", B.space.max_residual_of(s1) if len(s1) else 0.0,
            tol.residual_abs)
    rep.add("i.gamma_slice", "<gamma|_2 (A*B) |gamma>_2 ⊆ A", A.space.max_residual_of(s2) if len(s2) else 0.0,
            tol.residual_abs)
    if A.nondegenerate and B.nondegenerate:
        MA, MB = multiplier_algebra(A, tol), multiplier_algebra(B, tol)
        fpM = fiber_product(ModuleAlgebra(fp.A.module, MA), ModuleAlgebra(fp.B.module, MB), tol, X=X)
        r = max(_products_in(F, fpM.space.basis, F.basis), _products_in(F, F.basis, fpM.space.basis))
        rep.add("i.multipliers", "M(A)*M(B) ⊆ M(A*B)", r, tol.residual_abs, {"M(A)*M(B)": fpM.dim})
    else:
        rep.skip("i.multipliers", "M(A)*M(B) ⊆ M(A*B)", "A or B degenerate")

    # ii: minimal tensor products of the morphism parts
    Ab = full_morphism_part(A, mA, tol)
    Bg = full_morphism_part(B, mB, tol)
    La = np.array([X.left_op(a) for a in Ab.basis]).reshape(-1, d, d)
    Rb = np.array([X.right_op(b) for b in Bg.basis]).reshape(-1, d, d)
    comm = max((np.abs(l @ r - r @ l).max() for l in La for r in Rb), default=0.0)
    rep.add("ii.commute", "(a ⊲ Id)(Id ⊳ b) = (Id ⊳ b)(a ⊲ Id)", comm, tol.residual_abs)
    rep.add("ii.min_tensor", "A^(beta) ⊗ B^(gamma) ⊆ A*B", _products_in(F, La, Rb), tol.residual_abs,
            {"A^(beta)": Ab.dim, "B^(gamma)": Bg.dim})

    # iii: nondegeneracy and the strict multipliers, under the premise
    prem3 = (space_product(Ab, mA.alpha, tol).equality_residual(mA.alpha) <= tol.residual_abs
             and space_product(Bg, mB.alpha, tol).equality_residual(mB.alpha) <= tol.residual_abs)
    if prem3:
        rep.add_flag("iii.nondegenerate", "A*B nondegenerate", fp.algebra.nondegenerate)
        if d <= ms_limit:
            Y = span(np.einsum("aij,bjk->abik", La, Rb).reshape(-1, d, d), (d, d), tol)
            Xs = span(np.concatenate([La, Rb]), (d, d), tol)
            Ms = _ms_space(Y, Xs, tol)
            rep.add("iii.strict_multipliers", "M_s(A^(beta) ⊗ B^(gamma)) ⊆ A*B", Ms.inside(F), tol.residual_abs,
                    {"M_s": Ms.dim})
        else:
            rep.skip("iii.strict_multipliers", "M_s(A^(beta) ⊗ B^(gamma)) ⊆ A*B", f"rtp dim {d} > {ms_limit}")
    else:
        rep.skip("iii.nondegenerate", "A*B nondegenerate", "[A^(beta) beta] or [B^(gamma) gamma] too small")

    # iv and v
    rb_ = base_action(mA, tol)
    rg_ = base_action(mB, tol)
    prem_a = rb_.inside(A.space) <= tol.residual_abs
    prem_b = rg_.inside(B.space) <= tol.residual_abs
    if prem_a:
        rep.add("iv.id_tensor_B", "Id ⊗ B^(gamma) ⊆ A*B", F.max_residual_of(Rb) if len(Rb) else 0.0,
                tol.residual_abs)
    else:
        rep.skip("iv.id_tensor_B", "Id ⊗ B^(gamma) ⊆ A*B", "rho_beta(B†) ⊄ A")
    if prem_b:
        rep.add("iv.A_tensor_id", "A^(beta) ⊗ Id ⊆ A*B", F.max_residual_of(La) if len(La) else 0.0,
                tol.residual_abs)
    else:
        rep.skip("iv.A_tensor_id", "A^(beta) ⊗ Id ⊆ A*B", "rho_gamma(B) ⊄ B")
    id_res = F.residual(eye) / np.sqrt(d)
    id_in = id_res <= tol.residual_abs
    rep.add_flag("v.unit", "Id ∈ A*B ⇔ rho_beta(B†) ⊆ A and rho_gamma(B) ⊆ B", id_in == (prem_a and prem_b),
                 residual=0.0 if id_in == (prem_a and prem_b) else 1.0,
                 note=f"Id {'in' if id_in else 'not in'} A*B; premises {prem_a and prem_b}")
    fp.report.data["unit_in_fiber"] = bool(id_in)

    # vi: outer base actions
    if isinstance(fp.A.module, CStarBimodule) and isinstance(fp.B.module, CStarBimodule):
        ra = base_action(fp.A.module.alpha_module, tol)
        rd = base_action(fp.B.module.beta_module, tol)
        if (prem_a and prem_b and ra.inside(A.space) <= tol.residual_abs
                and rd.inside(B.space) <= tol.residual_abs):
            imgs = [X.left_op(x) for x in ra.basis] + [X.right_op(y) for y in rd.basis]
            rep.add("vi.outer_actions", "rho_(alpha◁gamma)(A) + rho_(beta▷delta)(C†) ⊆ A*B",
                    F.max_residual_of(imgs) if imgs else 0.0, tol.residual_abs)
        else:
            rep.skip("vi.outer_actions", "rho_(alpha◁gamma)(A) + rho_(beta▷delta)(C†) ⊆ A*B", "premise not met")
    else:
        rep.skip("vi.outer_actions", "rho_(alpha◁gamma)(A) + rho_(beta▷delta)(C†) ⊆ A*B", "no outer legs")

    # vii
    bab = space_product(space_product(space_adjoint(mA.alpha, tol), A.space, tol), mA.alpha, tol)
    gbg = space_product(space_product(space_adjoint(mB.alpha, tol), B.space, tol), mB.alpha, tol)
    C = space_intersection(bab, gbg, tol=tol)
    c_nd = nondegeneracy_rank(C, tol) == C.cod_dim
    if fp.algebra.nondegenerate:
        rep.add_flag("vii.base_nondegenerate", "A*B nondegenerate ⇒ [β*Aβ] ∩ [γ*Bγ] nondegenerate", c_nd,
                     dims={"C": C.dim})
    else:
        rep.skip("vii.base_nondegenerate", "A*B nondegenerate ⇒ [β*Aβ] ∩ [γ*Bγ] nondegenerate",
                 "A*B degenerate")

    # viii
    if A.nondegenerate and B.nondegenerate:
        Ac, Bc = algebra_commutant(A, tol), algebra_commutant(B, tol)
        r1 = max((np.abs(a @ y - y @ a).max() for a in Ac.basis for y in rb_.basis), default=0.0)
        r2 = max((np.abs(b @ y - y @ b).max() for b in Bc.basis for y in rg_.basis), default=0.0)
        rep.add("viii.A_commutant", "A' ⊆ rho_beta(B†)'", r1, tol.residual_abs)
        rep.add("viii.B_commutant", "B' ⊆ rho_gamma(B)'", r2, tol.residual_abs)
        ops = [X.left_op(a) for a in Ac.basis] + [X.right_op(b) for b in Bc.basis]
        r3 = max((np.abs(o @ x - x @ o).max() for o in ops for x in F.basis), default=0.0)
        rep.add("viii.commutant_bound", "A*B ⊆ (A' ⊗ Id)' ∩ (Id ⊗ B')'", r3, tol.residual_abs)
    else:
        rep.skip("viii.commutant_bound", "A*B ⊆ (A' ⊗ Id)' ∩ (Id ⊗ B')'", "A or B degenerate")
    return rep


def sauvageot_crosscheck(fp: FiberProduct, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Compare A * B with (A' ⊗ Id)' ∩ (Id ⊗ B')' computed as a commutant on H ⊗_b K."""
    A, B, X = fp.A.algebra, fp.B.algebra, fp.rtp
    if not (A.nondegenerate and B.nondegenerate):
        raise DegenerateInput("the commutant description needs nondegenerate A and B")
    Ac, Bc = algebra_commutant(A, tol), algebra_commutant(B, tol)
    gens = [X.left_op(a) for a in Ac.basis] + [X.right_op(b) for b in Bc.basis]
    C = OperatorSpace(X.dim, X.dim, commutant(gens, tol, n=X.dim))
    rep = Report("commutant description of the fiber product")
    rep.add("fp_in_commutant", "A*B ⊆ (A' ⊗ Id)' ∩ (Id ⊗ B')'", fp.space.inside(C), tol.residual_abs,
            {"fiber": fp.dim, "commutant": C.dim})
    rep.add("commutant_in_fp", "(A' ⊗ Id)' ∩ (Id ⊗ B')' ⊆ A*B", C.inside(fp.space), tol.residual_abs)
    rep.data["commutant_dim"] = C.dim
    return rep


# ---------------------------------------------------------------- morphisms and functoriality


@dataclass(frozen=True, eq=False)
class AlgebraMorphism:
    """A *-homomorphism pi: src -> dst given by the images of the src algebra basis."""

    src: ModuleAlgebra
    dst: ModuleAlgebra
    images: np.ndarray
    kind: str = "semi"

    def __call__(self, a) -> np.ndarray:
        c = self.src.algebra.space.coeffs(np.asarray(a, dtype=np.complex128))
        return np.tensordot(c, self.images, axes=(0, 0))


def morphism_from_map(src: ModuleAlgebra, dst: ModuleAlgebra, f: Callable, kind: str = "semi") -> AlgebraMorphism:
    return AlgebraMorphism(src, dst, np.array([f(a) for a in src.algebra.basis]).reshape(
        -1, dst.algebra.n, dst.algebra.n), kind)


def conjugation_morphism(src: ModuleAlgebra, dst: ModuleAlgebra, V, kind: str = "semi") -> AlgebraMorphism:
    """pi(a) = V a V*."""
    V = np.asarray(V, dtype=np.complex128)
    return morphism_from_map(src, dst, lambda a: V @ a @ V.conj().T, kind)


def identity_morphism(A: ModuleAlgebra, kind: str = "semi") -> AlgebraMorphism:
    return AlgebraMorphism(A, A, A.algebra.basis.copy(), kind)


def pi_intertwiners(pi: AlgebraMorphism, H: CStarModule, L: CStarModule,
                    tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """L^pi(H, L) = {T : T leg_H ⊆ leg_L (and T* leg_L ⊆ leg_H for full), T a = pi(a) T}."""
    h, l = H.h_dim, L.h_dim
    eye_h, eye_l = np.eye(h), np.eye(l)

    def blocks():
        for xi in H.alpha.basis:
            yield L.alpha.complement_apply(np.kron(eye_l, xi.T))
        if pi.kind == "full":
            adj = space_adjoint(H.alpha, tol)
            for eta in L.alpha.basis:
                yield adj.complement_apply(np.kron(eta.conj().T, eye_h))
        for a, pa in zip(pi.src.algebra.basis, pi.images):
            yield np.kron(eye_l, a.T) - np.kron(pa, eye_h)
    N = stacked_nullspace(blocks(), l * h, tol)
    return OperatorSpace(l, h, orthonormal_basis(N.T.reshape(-1, l, h), tol, shape=(l, h)))


def check_morphism(pi: AlgebraMorphism, H: CStarModule, L: CStarModule, tol: Tolerance = DEFAULT_TOL):
    """Report on pi and its intertwiner space; raises NotMorphism on failure."""
    rep = Report("algebra morphism")
    E, P = pi.src.algebra.basis, pi.images
    hom = 0.0
    for i, a in enumerate(E):
        for j, b in enumerate(E):
            hom = max(hom, np.abs(pi(a @ b) - P[i] @ P[j]).max())
    star = max((np.abs(pi(a.conj().T) - p.conj().T).max() for a, p in zip(E, P)), default=0.0)
    into = pi.dst.algebra.space.max_residual_of(P) if len(P) else 0.0
    rep.add("multiplicative", "pi(ab) = pi(a) pi(b)", hom, tol.residual_abs)
    rep.add("star", "pi(a*) = pi(a)*", star, tol.residual_abs)
    rep.add("into", "pi(A) ⊆ C", into, tol.residual_abs)
    Lpi = pi_intertwiners(pi, H, L, tol)
    gen = space_product(Lpi, H.alpha, tol)
    rep.add("leg", "[L^pi leg] = leg'", gen.equality_residual(L.alpha), tol.residual_abs, {"L^pi": Lpi.dim})
    if not rep.passed:
        raise NotMorphism(rep.render())
    return Lpi, rep


@dataclass
class InducedHom:
    """rho_I for I = L^pi ⊗ Id (side 'left') or Id ⊗ L^pi (side 'right')."""

    pi: AlgebraMorphism
    side: str
    src: RelativeTensorProduct
    dst: RelativeTensorProduct
    I: OperatorSpace
    report: Report
    _j: np.ndarray = None
    _j_dom: OperatorSpace = None

    def rho(self, x, check: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if check:
            r = 0.0
            for S in self.I.basis:
                for T in self.I.basis:
                    m = S.conj().T @ T
                    r = max(r, np.abs(m @ x - x @ m).max())
            if r > self.src.tol.residual_abs * max(1.0, np.abs(x).max()):
                raise NotInCommutant(f"x is not in (I*I)' (residual {r:.3e})")
        L = np.hstack(list(self.I.basis))
        R = np.hstack([S @ x for S in self.I.basis])
        return solve_intertwiner([(L, R)], (self.dst.dim, self.dst.dim), self.src.tol)

    def j(self, v) -> np.ndarray:
        """j_pi on [|gamma>_2 A] (left) or [|beta>_1 B] (right)."""
        v = np.asarray(v, dtype=np.complex128)
        dom = self._j_dom
        if dom.residual(v) > self.src.tol.residual_abs * max(1.0, np.linalg.norm(v)):
            raise NotInCommutant("v is outside the domain of j")
        out = self._j @ dom.coeffs(v)
        return out.reshape(self.dst.dim, -1)


def induced_hom(pi: AlgebraMorphism, other, side: str = "left", tol: Tolerance = DEFAULT_TOL,
                src: RelativeTensorProduct | None = None, dst: RelativeTensorProduct | None = None,
                samples: int = 8, seed: int = 0) -> InducedHom:
    """Homomorphism induced by pi on relative tensor products with a fixed second factor."""
    if side == "left":
        H, L = pi.src.right, pi.dst.right
        O = other.alpha_module if isinstance(other, CStarBimodule) else other
        src = src or rtp(H, O, tol)
        dst = dst or rtp(L, O, tol)
    elif side == "right":
        H, L = pi.src.left, pi.dst.left
        O = other.beta_module if isinstance(other, CStarBimodule) else other
        src = src or rtp(O, H, tol)
        dst = dst or rtp(O, L, tol)
    else:
        raise ValueError("side must be 'left' or 'right'")
    Lpi, rep = check_morphism(pi, H, L, tol)
    if side == "left":
        mats = [op_tensor(src, T, np.eye(O.h_dim), "semi_left", dst=dst, tol=tol) for T in Lpi.basis]
    else:
        mats = [op_tensor(src, np.eye(O.h_dim), T, "semi_right", dst=dst, tol=tol) for T in Lpi.basis]
    I = span(mats, (dst.dim, src.dim), tol)
    rank = nondegeneracy_rank(I, tol)
    rep.add("I_nondegenerate", "[I (H ⊗ K)] = L ⊗ K", float(dst.dim - rank), 0.5, {"I": I.dim})
    # j_pi on generators |eta>_2 a -> |eta>_2 pi(a)   (right side: |xi>_1 b -> |xi>_1 psi(b))
    if side == "left":
        ks, kd = src._ket2_basis, dst._ket2_basis
    else:
        ks, kd = src._ket1_basis, dst._ket1_basis
    E, P = pi.src.algebra.basis, pi.images
    S = np.array([k @ a for k in ks for a in E]).reshape(-1, src.dim, H.h_dim)
    T = np.array([k @ p for k in kd for p in P]).reshape(len(S), -1)
    dom = span(S, (src.dim, H.h_dim), tol)
    Cs = dom.coeffs(S)                       # (m, dim dom)
    Jm = T.T @ np.linalg.pinv(Cs.T) if len(S) else np.zeros((dst.dim * L.h_dim, 0))
    wd = np.abs(Jm @ Cs.T - T.T).max() if len(S) else 0.0
    rep.add("j_well_defined", "j(|eta>_2 a) = |eta>_2 pi(a) is well defined", wd,
            tol.residual_abs * max(1.0, np.abs(T).max() if T.size else 1.0))
    hom = InducedHom(pi, side, src, dst, I, rep, Jm, dom)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples if dom.dim else 0):
        c = rng.standard_normal(dom.dim) + 1j * rng.standard_normal(dom.dim)
        v = dom.element(c)
        worst = max(worst, op_norm(hom.j(v)) - op_norm(v))
    rep.add("j_contraction", "‖j(v)‖ ≤ ‖v‖", max(0.0, worst), tol.residual_abs, {"samples": samples})
    return hom


@dataclass
class FiberMorphism:
    phi: AlgebraMorphism
    psi: AlgebraMorphism
    I_K: InducedHom
    I_M: InducedHom
    J_H: InducedHom
    J_L: InducedHom
    src_fp: FiberProduct
    dst_fp: FiberProduct
    report: Report

    def apply(self, x, order: int = 1) -> np.ndarray:
        if order == 1:
            return self.I_M.rho(self.J_H.rho(x))
        return self.J_L.rho(self.I_K.rho(x))


def fiber_morphism(phi: AlgebraMorphism, psi: AlgebraMorphism, tol: Tolerance = DEFAULT_TOL) -> FiberMorphism:
    """phi * psi : A * B -> C * D through both composition orders."""
    H, L = phi.src.right, phi.dst.right
    K, M = psi.src.left, psi.dst.left
    HK, LK, HM, LM = rtp(H, K, tol), rtp(L, K, tol), rtp(H, M, tol), rtp(L, M, tol)
    I_K = induced_hom(phi, K, "left", tol, src=HK, dst=LK)
    I_M = induced_hom(phi, M, "left", tol, src=HM, dst=LM)
    J_H = induced_hom(psi, H, "right", tol, src=HK, dst=HM)
    J_L = induced_hom(psi, L, "right", tol, src=LK, dst=LM)
    AB = fiber_product(phi.src, psi.src, tol, X=HK)
    CD = fiber_product(phi.dst, psi.dst, tol, X=LM)
    rep = Report("fiber product of morphisms")
    for name, h in (("I_K", I_K), ("I_M", I_M), ("J_H", J_H), ("J_L", J_L)):
        rep.extend(h.report, name + ".")
    fm = FiberMorphism(phi, psi, I_K, I_M, J_H, J_L, AB, CD, rep)
    agree, into, rel, hom = 0.0, 0.0, 0.0, 0.0
    R = [im @ jh for im in I_M.I.basis for jh in J_H.I.basis] + \
        [jl @ ik for jl in J_L.I.basis for ik in I_K.I.basis]
    imgs = []
    for x in AB.space.basis:
        y1, y2 = fm.apply(x, 1), fm.apply(x, 2)
        imgs.append(y1)
        agree = max(agree, np.abs(y1 - y2).max())
        rel = max(rel, max((np.abs(y1 @ r - r @ x).max() for r in R), default=0.0))
    if imgs:
        into = CD.space.max_residual_of(imgs)
        for i, x in enumerate(AB.space.basis):
            for j, y in enumerate(AB.space.basis[: i + 1]):
                hom = max(hom, np.abs(fm.apply(x @ y) - imgs[i] @ imgs[j]).max())
    rep.add("orders_agree", "rho_I_M rho_J_H = rho_J_L rho_I_K on A*B", agree, tol.residual_abs,
            {"A*B": AB.dim, "C*D": CD.dim})
    rep.add("defining_relation", "(phi*psi)(x) R = R x", rel, tol.residual_abs)
    rep.add("image", "(phi*psi)(A*B) ⊆ C*D", into, tol.residual_abs)
    rep.add("multiplicative", "(phi*psi)(xy) = (phi*psi)(x)(phi*psi)(y)", hom, tol.residual_abs)
    if imgs:
        nd = nondegeneracy_rank(span(imgs, (LM.dim, LM.dim), tol), tol) == LM.dim
        rep.info("image_nondegenerate", "[(phi*psi)(A*B) (L ⊗ M)] = L ⊗ M", 0.0,
                 note="nondegenerate" if nd else "degenerate")
    return fm


# ---------------------------------------------------------------- slice maps


def kraus_from_choi(choi, n_in: int, n_out: int, tol: Tolerance = DEFAULT_TOL) -> list:
    """Kraus operators V (n_in x n_out) with phi(a) = sum V* a V from the Choi matrix
    sum_jk E_jk ⊗ phi(E_jk)."""
    C = np.asarray(choi, dtype=np.complex128)
    if C.shape != (n_in * n_out, n_in * n_out):
        raise ShapeMismatch("Choi matrix has the wrong size")
    if np.abs(C - C.conj().T).max() > tol.residual_abs * max(1.0, np.abs(C).max()):
        raise NotCP("Choi matrix is not hermitian")
    w, U = np.linalg.eigh(hermitize(C))
    if w[0] < -tol.residual_abs * max(1.0, w[-1]):
        raise NotCP(f"Choi matrix has eigenvalue {w[0]:.3e}")
    keep = w > tol.rank_rel * max(w[-1], 0.0)
    return [np.sqrt(lam) * np.conj(u).reshape(n_in, n_out) for lam, u in zip(w[keep], U[:, keep].T)]


def _check_kraus(kraus, h: int) -> list:
    Ks = [np.asarray(k, dtype=np.complex128) for k in kraus]
    if not Ks:
        raise NotCP("empty Kraus family")
    l = Ks[0].shape[1] if Ks[0].ndim == 2 else -1
    for k in Ks:
        if k.ndim != 2 or k.shape != (h, l):
            raise NotCP(f"Kraus operators must all have shape ({h}, {l})")
    return Ks


@dataclass
class SliceCP:
    rtp: RelativeTensorProduct
    kraus: list
    tensor: InternalTensor

    @property
    def dim(self) -> int:
        return self.tensor.dim

    def phi(self, a) -> np.ndarray:
        return sum(k.conj().T @ a @ k for k in self.kraus)

    def entries(self, x) -> np.ndarray:
        """The matrix <zeta_k ⊲ eta_b | (phi*Id)(x) | zeta_k' ⊲ eta_b'> on generators."""
        K2 = self.rtp._ket2_basis
        q, l = K2.shape[0], self.kraus[0].shape[1]
        P = np.array([[self.phi(K2[b].conj().T @ x @ K2[c]) for c in range(q)] for b in range(q)])
        return P.reshape(q, q, l, l).transpose(2, 0, 3, 1).reshape(l * q, l * q)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        E = self.entries(x)
        P = self.tensor.completion.synthesis_pinv
        W = self.tensor.completion.synthesis
        Y = P.conj().T @ E @ P
        res = np.abs(W.conj().T @ Y @ W - E).max() if E.size else 0.0
        if res > self.rtp.tol.residual_abs * max(1.0, np.abs(E).max()):
            raise NotCP(f"slice entries are not defined on the completion (residual {res:.3e})")
        return Y


def slice_cp(X: RelativeTensorProduct, kraus, tol: Tolerance = DEFAULT_TOL) -> SliceCP:
    """phi * Id : Ind_{|gamma>_2}(A) -> L(L ⊲_theta gamma) for phi(a) = sum V* a V."""
    Ks = _check_kraus(kraus, X.H.h_dim)
    l = Ks[0].shape[1]

    def theta(y):
        r = rho(X.H, y, tol, check=False)
        return sum(k.conj().T @ r @ k for k in Ks)
    T = internal_tensor(X.gamma, l, theta, flipped=True, tol=tol)
    return SliceCP(X, Ks, T)


def check_slice_cp(sl: SliceCP, elements: np.ndarray, tol: Tolerance = DEFAULT_TOL, n_random: int = 20,
                   seed: int = 0) -> Report:
    """Positivity of phi*Id on random positive elements of the span of the given elements,
    and on 2x2 positive block matrices."""
    rep = Report("completely positive slice map")
    rng = np.random.default_rng(seed)
    worst, worst2 = 0.0, 0.0
    E = np.asarray(elements)
    for _ in range(n_random):
        c = rng.standard_normal(len(E)) + 1j * rng.standard_normal(len(E))
        y = np.tensordot(c, E, axes=(0, 0))
        x = y.conj().T @ y
        worst = max(worst, -min_eig(sl(x)) / max(1.0, op_norm(x)))
    for _ in range(max(1, n_random // 4)):
        ys = [np.tensordot(rng.standard_normal(len(E)) + 1j * rng.standard_normal(len(E)), E, axes=(0, 0))
              for _ in range(2)]
        blocks = [[sl(ys[i].conj().T @ ys[j]) for j in range(2)] for i in range(2)]
        M = np.block(blocks)
        worst2 = max(worst2, -min_eig(M) / max(1.0, max(op_norm(y) ** 2 for y in ys)))
    rep.add("positive", "x >= 0 ⇒ (phi*Id)(x) >= 0", max(0.0, worst), tol.residual_abs, {"samples": n_random})
    rep.add("two_positive", "(x_ij) >= 0 ⇒ ((phi*Id)(x_ij)) >= 0", max(0.0, worst2), tol.residual_abs)
    return rep


@dataclass
class SliceSpatial:
    src: RelativeTensorProduct        # H ⊗ K
    dst: RelativeTensorProduct        # L ⊗ K
    S: list
    T: list
    S_t: list
    T_t: list

    def phi(self, a) -> np.ndarray:
        return sum(s.conj().T @ a @ t for s, t in zip(self.S, self.T))

    def __call__(self, x) -> np.ndarray:
        return sum(s.conj().T @ x @ t for s, t in zip(self.S_t, self.T_t))


def slice_spatial(src: RelativeTensorProduct, dst: RelativeTensorProduct, S_list, T_list,
                  tol: Tolerance = DEFAULT_TOL) -> SliceSpatial:
    """phi * Id for phi(a) = sum S_n* a T_n with S_n, T_n in L(L_lambda, H_beta)."""
    if len(S_list) != len(T_list) or not S_list:
        raise NotSpatiallyImplemented("need two nonempty families of equal length")
    S_list = [np.asarray(s, dtype=np.complex128) for s in S_list]
    T_list = [np.asarray(t, dtype=np.complex128) for t in T_list]
    for Z in S_list + T_list:
        if Z.shape != (src.H.h_dim, dst.H.h_dim):
            raise NotSpatiallyImplemented("family members must map L into H")
        r1 = src.beta.max_residual_of(np.einsum("ij,bjk->bik", Z, dst.beta.basis)) if dst.beta.dim else 0.0
        r2 = dst.beta.max_residual_of(np.einsum("ij,bjk->bik", Z.conj().T, src.beta.basis)) if src.beta.dim else 0.0
        if max(r1, r2) > tol.residual_abs:
            raise NotSpatiallyImplemented(f"family member is not in L(L_lambda, H_beta) (residual {max(r1, r2):.3e})")
    eye = np.eye(src.K.h_dim)
    St = [op_tensor(dst, s, eye, "semi_left", dst=src, tol=tol) for s in S_list]
    Tt = [op_tensor(dst, t, eye, "semi_left", dst=src, tol=tol) for t in T_list]
    return SliceSpatial(src, dst, S_list, T_list, St, Tt)


def check_slice_spatial(sl: SliceSpatial, fp: FiberProduct, C: ModuleAlgebra | None = None,
                        tol: Tolerance = DEFAULT_TOL) -> Report:
    rep = Report("spatially implemented slice map")
    ks, kd = sl.src._ket2_basis, sl.dst._ket2_basis
    slice_res, bound_res = 0.0, 0.0
    nS = op_norm(sum(s.conj().T @ s for s in sl.S)) ** 0.5
    nT = op_norm(sum(t.conj().T @ t for t in sl.T)) ** 0.5
    imgs = []
    for x in fp.space.basis:
        y = sl(x)
        imgs.append(y)
        for b in range(len(ks)):
            for c in range(len(ks)):
                lhs = kd[b].conj().T @ y @ kd[c]
                rhs = sl.phi(ks[b].conj().T @ x @ ks[c])
                slice_res = max(slice_res, np.abs(lhs - rhs).max())
        bound_res = max(bound_res, op_norm(y) - nS * nT * op_norm(x))
    rep.add("slice_identity", "<eta|_2 (phi*Id)(x) |eta'>_2 = phi(<eta|_2 x |eta'>_2)", slice_res,
            tol.residual_abs, {"A*B": fp.dim})
    rep.add("norm_bound", "‖(phi*Id)(x)‖ ≤ ‖ΣS*S‖^½ ‖ΣT*T‖^½ ‖x‖", max(0.0, bound_res), tol.residual_abs)
    if C is not None:
        CB = fiber_product(C, fp.B, tol, X=sl.dst)
        rep.add("image", "(phi*Id)(A*B) ⊆ C*B", CB.space.max_residual_of(imgs) if imgs else 0.0,
                tol.residual_abs, {"C*B": CB.dim})
    return rep


# ---------------------------------------------------------------- unitality


def _unit_algebra(base, tol: Tolerance) -> ModuleAlgebra:
    """B† on K with leg B†, a module over the opposite base."""
    return ModuleAlgebra(CStarModule(base.opposite, base.k_dim, base.b_dag.space), base.b_dag)


def unitality_check(A: ModuleAlgebra, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Ad_r(A * B†) against A ∩ L(H_beta), and Ad_r(B * B†) against M(B) ∩ M(B†)."""
    mA = A.right
    base = mA.base
    rep = Report("unitality")
    k = base.k_dim
    if not (base.b_dag.is_unital(tol) and base.b.is_unital(tol)):
        rep.skip("unital_base", "Id ∈ B and Id ∈ B†", "base algebras are not unital")
        return rep
    U = _unit_algebra(base, tol)
    ru = b_algebra_residual(U.algebra, U.left, tol)
    if ru > tol.residual_abs:
        rep.skip("A_unit", "Ad_r(A * B†) = A ∩ L(H_beta)", f"B† is not a module algebra (B B† ⊄ B†, residual {ru:.2e})")
        rep.skip("B_unit", "Ad_r(B * B†) = M(B) ∩ M(B†)", "B† is not a module algebra")
        return rep
    fp = fiber_product(A, U, tol)
    r = unit_r(mA, tol, X=fp.rtp)
    rep.extend(r.report, "r.")
    R = r.matrix
    ad = span([R @ x @ R.conj().T for x in fp.space.basis], (mA.h_dim, mA.h_dim), tol)
    Ab = full_morphism_part(A.algebra, mA, tol)
    rep.add("A_unit", "Ad_r(A * B†) = A ∩ L(H_beta)", ad.equality_residual(Ab), tol.residual_abs,
            {"Ad_r": ad.dim, "A^(beta)": Ab.dim})
    # the same set written as Ind_beta(B†) ∩ Ind_{rho_beta(B†)}(A)
    i1 = ind(mA.alpha, base.b_dag, tol, check=False).algebra.space
    i2 = ind(base_action(mA, tol), A.algebra, tol, check=False).algebra.space
    both = space_intersection(i1, i2, tol=tol)
    rep.add("ind_form", "Ad_r(A * B†) = Ind_beta(B†) ∩ Ind_rho(B†)(A)", ad.equality_residual(both),
            tol.residual_abs)
    Lb = morphism_space(mA, mA, "full", tol).space
    rep.add("ind_beta", "Ind_beta(B†) = L(H_beta)", i1.equality_residual(Lb), tol.residual_abs)
    # base algebra B with leg B
    Bm = ModuleAlgebra(base_module(base), base.b)
    if b_algebra_residual(Bm.algebra, Bm.right, tol) > tol.residual_abs:
        rep.skip("B_unit", "Ad_r(B * B†) = M(B) ∩ M(B†)", "B is not a module algebra over the base")
        return rep
    fpB = fiber_product(Bm, U, tol)
    rB = unit_r(Bm.right, tol, X=fpB.rtp).matrix
    adB = span([rB @ x @ rB.conj().T for x in fpB.space.basis], (k, k), tol)
    MB = space_intersection(multiplier_algebra(base.b, tol).space, multiplier_algebra(base.b_dag, tol).space,
                            tol=tol)
    rep.add("B_unit", "Ad_r(B * B†) = M(B) ∩ M(B†)", adB.equality_residual(MB), tol.residual_abs,
            {"Ad_r": adB.dim, "M(B)∩M(B†)": MB.dim})
    Lboth = space_intersection(morphism_space(base_module(base), base_module(base), "full", tol).space,
                               morphism_space(U.left, U.left, "full", tol).space, tol=tol)
    rep.add("B_unit_morphisms", "L(K_B) ∩ L(K_B†) = M(B) ∩ M(B†)", Lboth.equality_residual(MB), tol.residual_abs)
    return rep


# ---------------------------------------------------------------- associativity (report only)


def assoc_compare(A: ModuleAlgebra, B: ModuleAlgebra, C: ModuleAlgebra, tol: Tolerance = DEFAULT_TOL) -> Report:
    """Containments between Ad_a((A*B)*C) and A*(B*C); measured, never asserted."""
    if not isinstance(B.module, CStarBimodule):
        raise ShapeMismatch("the middle algebra must live on a bimodule")
    a = assoc_iso(A.right, B.module, C.left, tol)
    AB = fiber_product(A, ModuleAlgebra(B.module.alpha_module, B.algebra), tol, X=a.inner_left)
    BC = fiber_product(ModuleAlgebra(B.module.beta_module, B.algebra), C, tol, X=a.inner_right)
    left = fiber_product(ModuleAlgebra(a.src.H, AB.algebra), C, tol, X=a.src)
    right = fiber_product(A, ModuleAlgebra(a.dst.K, BC.algebra), tol, X=a.dst)
    U = a.matrix
    ad = span([U @ x @ U.conj().T for x in left.space.basis], right.space.shape, tol)
    rep = Report("associativity of fiber products")
    rep.extend(a.report, "assoc.")
    dims = {"(A*B)*C": left.dim, "A*(B*C)": right.dim}
    rep.info("left_in_right", "Ad_a((A*B)*C) ⊆ A*(B*C)", ad.inside(right.space), dims)
    rep.info("right_in_left", "A*(B*C) ⊆ Ad_a((A*B)*C)", right.space.inside(ad))
    return rep


# ---------------------------------------------------------------- finite direct sums


@dataclass
class AlgebraDirectSum:
    forward: Callable
    backward: Callable
    big: FiberProduct
    pieces: dict
    isometries: dict
    report: Report


def _block_algebra_sum(items: Sequence[ModuleAlgebra], inj) -> ConcreteAlgebra:
    n = inj[0].shape[0]
    mats = [V @ a @ V.conj().T for it, V in zip(items, inj) for a in it.algebra.basis]
    return algebra_from_space(span(mats, (n, n)))


def algebra_direct_sum(As: Sequence[ModuleAlgebra], Bs: Sequence[ModuleAlgebra],
                       tol: Tolerance = DEFAULT_TOL) -> AlgebraDirectSum:
    """Mutually inverse maps ⊞_ij (A^i * B^j) <-> (⊞A^i) * (⊞B^j) for finite families."""
    if not As or not Bs:
        raise ShapeMismatch("families must be nonempty and finite")
    DH = direct_sum([a.right for a in As], tol)
    DK = direct_sum([b.left for b in Bs], tol)
    SA = ModuleAlgebra(DH.module, _block_algebra_sum(As, DH.injections))
    SB = ModuleAlgebra(DK.module, _block_algebra_sum(Bs, DK.injections))
    big = fiber_product(SA, SB, tol)
    pieces, isos = {}, {}
    for i, Ai in enumerate(As):
        for j, Bj in enumerate(Bs):
            fp = fiber_product(Ai, Bj, tol)
            pieces[(i, j)] = fp
            isos[(i, j)] = op_tensor(fp.rtp, DH.injections[i], DK.injections[j], "semi_left", dst=big.rtp, tol=tol)
    keys = sorted(pieces)

    def forward(xs: dict) -> np.ndarray:
        return sum(isos[k] @ xs[k] @ isos[k].conj().T for k in keys if k in xs)

    def backward(y) -> dict:
        return {k: isos[k].conj().T @ y @ isos[k] for k in keys}

    rep = Report("direct sums of fiber products")
    iso_res = 0.0
    for k1 in keys:
        for k2 in keys:
            G = isos[k1].conj().T @ isos[k2]
            target = np.eye(G.shape[0]) if k1 == k2 else np.zeros_like(G)
            iso_res = max(iso_res, np.abs(G - target).max())
    rep.add("isometries", "(iota_i ⊗ iota_j)* (iota_k ⊗ iota_l) = delta", iso_res, tol.residual_abs)
    fb, bf, img_f, img_b = 0.0, 0.0, 0.0, 0.0
    for k in keys:
        for x in pieces[k].space.basis:
            y = forward({k: x})
            img_f = max(img_f, big.space.residual(y) / max(1.0, np.linalg.norm(y)))
            back = backward(y)
            for k2 in keys:
                want = x if k2 == k else np.zeros_like(back[k2])
                bf = max(bf, np.abs(back[k2] - want).max())
    for y in big.space.basis:
        parts = backward(y)
        for k in keys:
            img_b = max(img_b, pieces[k].space.residual(parts[k]) / max(1.0, np.linalg.norm(parts[k])))
        fb = max(fb, np.abs(forward(parts) - y).max())
    total = sum(pieces[k].dim for k in keys)
    dims = {"sum_of_pieces": total, "big": big.dim}
    rep.add("forward_image", "sum (iota*iota)(x_ij) ∈ (⊞A)*(⊞B)", img_f, tol.residual_abs, dims)
    rep.add("backward_image", "(pi*pi)(y) ∈ A^i*B^j", img_b, tol.residual_abs)
    rep.add("back_forth", "backward ∘ forward = Id", bf, tol.residual_abs)
    rep.add("forth_back", "forward ∘ backward = Id", fb, tol.residual_abs)
    return AlgebraDirectSum(forward, backward, big, pieces, isos, rep)
