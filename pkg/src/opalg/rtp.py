"""The relative tensor product H ⊗_b K = beta ⊳ K ⊲ gamma and its structure maps.

Generators xi_a ⊗ e_k ⊗ eta_b run over HS-orthonormal bases of beta and gamma and
the standard basis of the base space, in lexicographic order (a, k, b).  The
space itself is the separated completion of their Gram matrix; every operator
on it is produced as an explicit matrix in the completion coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .errors import (AxiomFailure, CaseViolated, Inconsistent, NonCommuting, NotInSpace,
                     ShapeMismatch)
from .linalg import DEFAULT_TOL, GramCompletion, Tolerance, gram_completion, solve_intertwiner
from .module import (CStarBimodule, CStarModule, check_module, direct_sum, rho, unit_bimodule)
from .opspace import OperatorSpace, span
from .report import Report


def _wd_check(X, W, R, what, tol):
    # well-definedness of an operator prescribed on generators
    if R.size == 0:
        return
    res = np.abs(X @ W - R).max()
    if res > tol.residual_abs * max(1.0, np.abs(R).max()):
        raise Inconsistent(f"{what} is not well defined on the completion (residual {res:.3e})")


@dataclass(frozen=True, eq=False)
class RelativeTensorProduct:
    H: CStarModule        # module over b, leg beta = H.alpha
    K: CStarModule        # module over b†, leg gamma = K.alpha
    completion: GramCompletion
    tol: Tolerance = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.completion.out_dim

    @property
    def beta(self) -> OperatorSpace:
        return self.H.alpha

    @property
    def gamma(self) -> OperatorSpace:
        return self.K.alpha

    @property
    def k_dim(self) -> int:
        return self.H.k_dim

    @property
    def gen_index(self) -> list:
        p, n, q = self.beta.dim, self.k_dim, self.gamma.dim
        return [(a, k, b) for a in range(p) for k in range(n) for b in range(q)]

    def __repr__(self):
        return f"RelativeTensorProduct(dim={self.dim}, generators={self.completion.input_count})"

    @cached_property
    def W(self) -> np.ndarray:
        """Synthesis map: column (a,k,b) holds the coordinates of xi_a ⊗ e_k ⊗ eta_b."""
        return self.completion.synthesis

    @cached_property
    def W_pinv(self) -> np.ndarray:
        return self.completion.synthesis_pinv

    @cached_property
    def _Wh(self) -> np.ndarray:
        # columns (a,k): xi_a e_k, spanning H
        return np.hstack(list(self.beta.basis)) if self.beta.dim else np.zeros((self.H.h_dim, 0))

    @cached_property
    def _Wk(self) -> np.ndarray:
        # columns (k,b): eta_b e_k, spanning K
        g = self.gamma.basis
        return g.transpose(1, 2, 0).reshape(self.K.h_dim, -1)

    @cached_property
    def _ket1_basis(self) -> np.ndarray:
        p, n, q, d = self.beta.dim, self.k_dim, self.gamma.dim, self.dim
        Wr = self.W.reshape(d, p, n * q)
        pinv = np.linalg.pinv(self._Wk)
        out = np.einsum("dai,ih->adh", Wr, pinv)
        for a in range(p):
            _wd_check(out[a], self._Wk, Wr[:, a], "|xi>_1", self.tol)
        return out

    @cached_property
    def _ket2_basis(self) -> np.ndarray:
        p, n, q, d = self.beta.dim, self.k_dim, self.gamma.dim, self.dim
        Wr = self.W.reshape(d, p * n, q)
        pinv = np.linalg.pinv(self._Wh)
        out = np.einsum("dib,ih->bdh", Wr, pinv)
        for b in range(q):
            _wd_check(out[b], self._Wh, Wr[:, :, b], "|eta>_2", self.tol)
        return out

    def _coeffs(self, space: OperatorSpace, v, what: str) -> np.ndarray:
        v = np.asarray(v, dtype=np.complex128)
        if space.residual(v) > self.tol.residual_abs * max(1.0, np.linalg.norm(v)):
            raise NotInSpace(f"{what} is not an element of the leg")
        return space.coeffs(v)

    def ket1(self, xi) -> np.ndarray:
        """|xi>_1 : K -> H ⊗ K, omega -> xi ⊗ omega."""
        c = self._coeffs(self.beta, xi, "xi")
        return np.tensordot(c, self._ket1_basis, axes=(0, 0))

    def ket2(self, eta) -> np.ndarray:
        """|eta>_2 : H -> H ⊗ K, omega -> omega ⊲ eta."""
        c = self._coeffs(self.gamma, eta, "eta")
        return np.tensordot(c, self._ket2_basis, axes=(0, 0))

    def bra1(self, xi) -> np.ndarray:
        return self.ket1(xi).conj().T

    def bra2(self, eta) -> np.ndarray:
        return self.ket2(eta).conj().T

    def vector(self, xi, zeta, eta) -> np.ndarray:
        """Coordinates of xi ⊗ zeta ⊗ eta."""
        c = self._coeffs(self.beta, xi, "xi")
        d = self._coeffs(self.gamma, eta, "eta")
        return self.W @ np.kron(np.kron(c, np.asarray(zeta, dtype=np.complex128)), d)

    @cached_property
    def ket1_space(self) -> OperatorSpace:
        """|beta>_1 as a subspace of L(K, H ⊗ K)."""
        return span(self._ket1_basis, (self.dim, self.K.h_dim), self.tol)

    @cached_property
    def ket2_space(self) -> OperatorSpace:
        return span(self._ket2_basis, (self.dim, self.H.h_dim), self.tol)

    def left_op(self, S) -> np.ndarray:
        """S ⊲ Id for S in rho_beta(B†)': omega ⊲ eta -> S omega ⊲ eta."""
        S = np.asarray(S, dtype=np.complex128)
        d, N = self.dim, self.completion.input_count
        R = np.einsum("bdh,hj->djb", self._ket2_basis, S @ self._Wh).reshape(d, N)
        X = R @ self.W_pinv
        _wd_check(X, self.W, R, "S ⊲ Id", self.tol)
        return X

    def right_op(self, T) -> np.ndarray:
        """Id ⊳ T for T in rho_gamma(B)': xi ⊗ omega -> xi ⊗ T omega."""
        T = np.asarray(T, dtype=np.complex128)
        d, N = self.dim, self.completion.input_count
        R = np.einsum("adh,hj->daj", self._ket1_basis, T @ self._Wk).reshape(d, N)
        X = R @ self.W_pinv
        _wd_check(X, self.W, R, "Id ⊳ T", self.tol)
        return X

    def check(self) -> Report:
        rep = Report("relative tensor product")
        G = self.gram
        C = self.completion.coords
        rep.add("gram", "coords coords^H = Gram", np.abs(C @ C.conj().T - G).max() if G.size else 0.0,
                self.tol.residual_abs, {"dim": self.dim, "generators": G.shape[0]})
        return rep

    @cached_property
    def gram(self) -> np.ndarray:
        return _rtp_gram(self.beta, self.gamma)


def _rtp_gram(beta: OperatorSpace, gamma: OperatorSpace) -> np.ndarray:
    Bb, Gb = beta.basis, gamma.basis
    B4 = np.ascontiguousarray(np.einsum("aji,bjk->abik", Bb.conj(), Bb))
    C4 = np.ascontiguousarray(np.einsum("aji,bjk->abik", Gb.conj(), Gb))
    if B4.size == 0 or C4.size == 0:
        n = beta.dom_dim
        N = beta.dim * n * gamma.dim
        return np.zeros((N, N), dtype=np.complex128)
    return np.asarray(_backend.rtp_gram(B4, C4))


def rtp(H, K, tol: Tolerance = DEFAULT_TOL, validate: bool = True) -> RelativeTensorProduct:
    """H ⊗_b K for a module H over b and a module K over b†.

    Bimodules may be passed: the beta leg of H and the alpha leg of K are used.
    """
    if isinstance(H, CStarBimodule):
        H = H.beta_module
    if isinstance(K, CStarBimodule):
        K = K.alpha_module
    if H.k_dim != K.k_dim:
        raise ShapeMismatch("modules over bases of different dimension")
    if validate:
        if not (H.base.b.equals(K.base.b_dag, tol) and H.base.b_dag.equals(K.base.b, tol)):
            raise AxiomFailure("second module must live over the opposite base")
        for name, m in (("H", H), ("K", K)):
            r = check_module(m, tol)
            if not r.passed:
                raise AxiomFailure(f"{name} violates the module axioms:\n{r.render()}")
    G = _rtp_gram(H.alpha, K.alpha)
    gc = gram_completion(G, tol)
    return RelativeTensorProduct(H, K, gc, tol)


# ---------------------------------------------------------------- operator tensors


def _commutes_with(X, ops, tol) -> float:
    if len(ops) == 0:
        return 0.0
    return max(float(np.abs(X @ y - y @ X).max()) for y in ops)


def _rho_images(mod: CStarModule, xs, tol):
    return [rho(mod, x, tol) for x in xs]


def op_tensor(src: RelativeTensorProduct, S, T, case: str = "auto",
              dst: RelativeTensorProduct | None = None, tol: Tolerance | None = None) -> np.ndarray:
    """Matrix of S ⊗_b T from src to dst (dst defaults to src).

    semi_left: S beta ⊆ beta', T intertwines rho_gamma(B); (S⊗T)(xi⊗w) = S xi ⊗ T w.
    semi_right: T gamma ⊆ gamma', S intertwines rho_beta(B†); (S⊗T)(w⊲eta) = S w ⊲ T eta.
    commuting: same space only, requires (B†)' = B''; the product (S⊲Id)(Id⊳T).
    """
    tol = tol or src.tol
    same = dst is None
    dst = src if dst is None else dst
    S = np.asarray(S, dtype=np.complex128)
    T = np.asarray(T, dtype=np.complex128)
    if S.shape != (dst.H.h_dim, src.H.h_dim) or T.shape != (dst.K.h_dim, src.K.h_dim):
        raise ShapeMismatch("S or T does not match the tensor factors")
    base = src.H.base
    Bx = base.b.basis          # acts through rho_gamma
    Bdx = base.b_dag.basis     # acts through rho_beta
    r_left = dst.beta.max_residual_of(np.einsum("ij,bjk->bik", S, src.beta.basis)) if src.beta.dim else 0.0
    r_right = dst.gamma.max_residual_of(np.einsum("ij,bjk->bik", T, src.gamma.basis)) if src.gamma.dim else 0.0
    if case == "auto":
        if r_left <= tol.residual_abs:
            case = "semi_left"
        elif r_right <= tol.residual_abs:
            case = "semi_right"
        else:
            case = "commuting"
    # both factors must intertwine the base actions
    rg_src, rg_dst = _rho_images(src.K, Bx, tol), _rho_images(dst.K, Bx, tol)
    rb_src, rb_dst = _rho_images(src.H, Bdx, tol), _rho_images(dst.H, Bdx, tol)
    t_int = max([np.abs(T @ a - b @ T).max() for a, b in zip(rg_src, rg_dst)], default=0.0)
    s_int = max([np.abs(S @ a - b @ S).max() for a, b in zip(rb_src, rb_dst)], default=0.0)
    scale = max(1.0, np.abs(S).max(), np.abs(T).max())
    if case == "semi_left":
        if r_left > tol.residual_abs * scale:
            raise CaseViolated(f"S beta ⊄ beta (residual {r_left:.3e})")
        if t_int > tol.residual_abs * scale:
            raise CaseViolated(f"T does not intertwine rho_gamma(B) (residual {t_int:.3e})")
        d, N = dst.dim, src.completion.input_count
        kets = np.array([dst.ket1(S @ xi) for xi in src.beta.basis]).reshape(-1, dst.dim, dst.K.h_dim)
        R = np.einsum("adh,hj->daj", kets, T @ src._Wk).reshape(d, N)
        X = R @ src.W_pinv
        _wd_check(X, src.W, R, "S ⊗ T", tol)
    elif case == "semi_right":
        if r_right > tol.residual_abs * scale:
            raise CaseViolated(f"T gamma ⊄ gamma (residual {r_right:.3e})")
        if s_int > tol.residual_abs * scale:
            raise CaseViolated(f"S does not intertwine rho_beta(B†) (residual {s_int:.3e})")
        d, N = dst.dim, src.completion.input_count
        kets = np.array([dst.ket2(T @ eta) for eta in src.gamma.basis]).reshape(-1, dst.dim, dst.H.h_dim)
        R = np.einsum("bdh,hj->djb", kets, S @ src._Wh).reshape(d, N)
        X = R @ src.W_pinv
        _wd_check(X, src.W, R, "S ⊗ T", tol)
    elif case == "commuting":
        if not same:
            raise CaseViolated("the commuting case is only defined on one tensor product")
        if not base.b_dag_commutant.equals(base.b, tol):
            raise CaseViolated("(B†)' differs from B''")
        if max(s_int, t_int) > tol.residual_abs * scale:
            raise CaseViolated("S or T leaves the relevant commutant")
        X = src.left_op(S) @ src.right_op(T)
    else:
        raise ValueError(f"unknown case {case!r}")
    if same and max(s_int, t_int) <= tol.residual_abs * scale:
        L, R = src.left_op(S), src.right_op(T)
        c = np.abs(L @ R - R @ L).max()
        if c > tol.residual_abs * max(1.0, np.abs(L).max() * np.abs(R).max()):
            raise NonCommuting(f"S ⊲ Id and Id ⊳ T do not commute (residual {c:.3e})")
        diff = np.abs(L @ R - X).max()
        if diff > tol.residual_abs * max(1.0, np.abs(X).max()):
            raise NonCommuting(f"S ⊗ T differs from (S ⊲ Id)(Id ⊳ T) (residual {diff:.3e})")
    return X


# ---------------------------------------------------------------- bimodule structure


@dataclass
class RTPBimodule:
    rtp: RelativeTensorProduct
    bimodule: CStarBimodule
    report: Report

    @property
    def left_leg(self) -> OperatorSpace:
        return self.bimodule.alpha

    @property
    def right_leg(self) -> OperatorSpace:
        return self.bimodule.beta


def left_leg(X: RelativeTensorProduct, alpha: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """alpha ◁ gamma = [|gamma>_2 alpha]."""
    cands = np.einsum("bdh,ahk->badk", X._ket2_basis, alpha.basis).reshape(-1, X.dim, alpha.dom_dim)
    return span(cands, (X.dim, alpha.dom_dim), tol)


def right_leg(X: RelativeTensorProduct, delta: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """beta ▷ delta = [|beta>_1 delta]."""
    cands = np.einsum("adh,bhk->abdk", X._ket1_basis, delta.basis).reshape(-1, X.dim, delta.dom_dim)
    return span(cands, (X.dim, delta.dom_dim), tol)


def rtp_bimodule(aHb: CStarBimodule, cKd: CStarBimodule, tol: Tolerance = DEFAULT_TOL,
                 X: RelativeTensorProduct | None = None, verify: bool = True) -> RTPBimodule:
    X = X or rtp(aHb.beta_module, cKd.alpha_module, tol)
    ag = left_leg(X, aHb.alpha, tol)
    bd = right_leg(X, cKd.beta, tol)
    bim = CStarBimodule(aHb.alpha_base, cKd.beta_base, X.dim, ag, bd)
    rep = Report("relative tensor product of bimodules")
    if verify:
        r1 = 0.0
        for x in aHb.alpha_base.b_commutant.basis:
            r1 = max(r1, np.abs(rho(bim.alpha_module, x, tol) - X.left_op(rho(aHb.alpha_module, x, tol))).max())
        rep.add("rho_left_leg", "rho_(alpha◁gamma)(x) = rho_alpha(x) ⊲ Id", r1, tol.residual_abs,
                {"alpha◁gamma": ag.dim})
        r2 = 0.0
        for y in cKd.beta_base.b_commutant.basis:
            r2 = max(r2, np.abs(rho(bim.beta_module, y, tol) - X.right_op(rho(cKd.beta_module, y, tol))).max())
        rep.add("rho_right_leg", "rho_(beta▷delta)(y) = Id ⊳ rho_delta(y)", r2, tol.residual_abs,
                {"beta▷delta": bd.dim})
        from .module import check_bimodule
        rep.extend(check_bimodule(bim, tol), "result.")
    return RTPBimodule(X, bim, rep)


# ---------------------------------------------------------------- associativity and units


@dataclass
class AssocResult:
    matrix: np.ndarray
    src: RelativeTensorProduct        # (H ⊗ K) ⊗ L
    dst: RelativeTensorProduct        # H ⊗ (K ⊗ L)
    inner_left: RelativeTensorProduct   # H ⊗ K
    inner_right: RelativeTensorProduct  # K ⊗ L
    report: Report


def assoc_iso(H, K: CStarBimodule, L, tol: Tolerance = DEFAULT_TOL) -> AssocResult:
    """Unitary (H ⊗_b K) ⊗_c L -> H ⊗_b (K ⊗_c L) fixed on elementary tensors.

    H is a module over b (or a bimodule, using its beta leg), K a (b†, c)-bimodule
    and L a module over c† (or a bimodule, using its alpha leg).
    """
    Hb = H.beta_module if isinstance(H, CStarBimodule) else H
    Lm = L.alpha_module if isinstance(L, CStarBimodule) else L
    HK = rtp(Hb, K.alpha_module, tol)
    bd = right_leg(HK, K.beta, tol)
    src = rtp(CStarModule(K.beta_base, HK.dim, bd), Lm, tol)
    KL = rtp(K.beta_module, Lm, tol)
    ge = left_leg(KL, K.alpha, tol)
    dst = rtp(Hb, CStarModule(K.alpha_base, KL.dim, ge), tol)
    l_dim = Lm.k_dim
    srcs, tgts = [], []
    eye_l = np.eye(l_dim)
    for a in range(Hb.alpha.dim):
        for j, dj in enumerate(K.beta.basis):
            theta = HK._ket1_basis[a] @ dj
            for c, eps in enumerate(Lm.alpha.basis):
                inner = KL._ket2_basis[c] @ dj            # dj e_m ⊲ eps_c, column m
                for m in range(l_dim):
                    srcs.append(src.vector(theta, eye_l[m], eps))
                    tgts.append((a, inner[:, m]))
    # target: xi_a ⊗ (dj e_m ⊲ eps_c) = |xi_a>_1 (KL coordinates of dj e_m ⊲ eps_c)
    T_cols = np.array([dst._ket1_basis[a] @ v for a, v in tgts]).T
    S_cols = np.array(srcs).T
    A = solve_intertwiner([(S_cols, T_cols)], (dst.dim, src.dim), tol)
    rep = Report("associativity isomorphism")
    rep.add("unitary", "a* a = Id, a a* = Id",
            max(np.abs(A.conj().T @ A - np.eye(src.dim)).max(), np.abs(A @ A.conj().T - np.eye(dst.dim)).max()),
            tol.residual_abs, {"dim_src": src.dim, "dim_dst": dst.dim})
    if isinstance(H, CStarBimodule):
        # (alpha ◁ gamma) ◁ eps  ->  alpha ◁ (gamma ◁ eps)
        ag = left_leg(HK, H.alpha, tol)
        lhs = left_leg(src, ag, tol)
        rhs = left_leg(dst, H.alpha, tol)
        img = span(np.einsum("ij,bjk->bik", A, lhs.basis), rhs.shape, tol)
        rep.add("left_legs", "a((alpha◁gamma)◁eps) = alpha◁(gamma◁eps)", img.equality_residual(rhs),
                tol.residual_abs, {"leg": rhs.dim})
    if isinstance(L, CStarBimodule):
        lhs = right_leg(src, L.beta, tol)
        dphi = right_leg(KL, L.beta, tol)
        rhs = right_leg(dst, dphi, tol)
        img = span(np.einsum("ij,bjk->bik", A, lhs.basis), rhs.shape, tol)
        rep.add("right_legs", "a((beta▷delta)▷phi) = beta▷(delta▷phi)", img.equality_residual(rhs),
                tol.residual_abs, {"leg": rhs.dim})
    return AssocResult(A, src, dst, HK, KL, rep)


@dataclass
class UnitResult:
    matrix: np.ndarray
    rtp: RelativeTensorProduct
    report: Report


def unit_r(H: CStarBimodule, tol: Tolerance = DEFAULT_TOL, X: RelativeTensorProduct | None = None) -> UnitResult:
    """r : H ⊗_b U -> H, xi ⊗ zeta ⊲ y -> xi y zeta, where U is K with legs (B†, B).

    H may be a plain module over b; the alpha-leg check is then left out.
    """
    Hb = H.beta_module if isinstance(H, CStarBimodule) else H
    b = Hb.base
    U = unit_bimodule(b)
    X = X or rtp(Hb, U.alpha_module, tol)
    p, n, q = X.beta.dim, X.k_dim, X.gamma.dim
    img = np.einsum("aij,bjk->aikb", X.beta.basis, X.gamma.basis)      # xi_a y_b, columns k
    R = img.transpose(1, 0, 2, 3).reshape(H.h_dim, p * n * q)
    r = R @ X.W_pinv
    _wd_check(r, X.W, R, "r", tol)
    rep = Report("right unit")
    rep.add("unitary", "r* r = Id, r r* = Id",
            max(np.abs(r.conj().T @ r - np.eye(X.dim)).max(), np.abs(r @ r.conj().T - np.eye(H.h_dim)).max()),
            tol.residual_abs, {"dim": X.dim, "h": H.h_dim})
    if isinstance(H, CStarBimodule):
        al = left_leg(X, H.alpha, tol)
        rep.add("alpha_leg", "r(alpha ◁ B†) = alpha",
                span(np.einsum("ij,bjk->bik", r, al.basis), H.alpha.shape, tol).equality_residual(H.alpha),
                tol.residual_abs)
    bl = right_leg(X, U.beta, tol)
    rep.add("beta_leg", "r(beta ▷ B) = beta",
            span(np.einsum("ij,bjk->bik", r, bl.basis), Hb.alpha.shape, tol).equality_residual(Hb.alpha),
            tol.residual_abs)
    return UnitResult(r, X, rep)


def unit_l(K: CStarBimodule, tol: Tolerance = DEFAULT_TOL, X: RelativeTensorProduct | None = None) -> UnitResult:
    """l : U ⊗_b K -> K, y ⊗ zeta ⊲ eta -> eta y zeta (K may be a plain module over b†)."""
    Ka = K.alpha_module if isinstance(K, CStarBimodule) else K
    b = Ka.base.opposite
    U = unit_bimodule(b)
    X = X or rtp(U.beta_module, Ka, tol)
    p, n, q = X.beta.dim, X.k_dim, X.gamma.dim
    img = np.einsum("bij,ajk->aikb", X.gamma.basis, X.beta.basis)      # eta_b y_a, columns k
    R = img.transpose(1, 0, 2, 3).reshape(K.h_dim, p * n * q)
    l = R @ X.W_pinv
    _wd_check(l, X.W, R, "l", tol)
    rep = Report("left unit")
    rep.add("unitary", "l* l = Id, l l* = Id",
            max(np.abs(l.conj().T @ l - np.eye(X.dim)).max(), np.abs(l @ l.conj().T - np.eye(K.h_dim)).max()),
            tol.residual_abs, {"dim": X.dim, "h": K.h_dim})
    al = left_leg(X, U.alpha, tol)
    rep.add("alpha_leg", "l(B† ◁ gamma) = gamma",
            span(np.einsum("ij,bjk->bik", l, al.basis), Ka.alpha.shape, tol).equality_residual(Ka.alpha),
            tol.residual_abs)
    if isinstance(K, CStarBimodule):
        bl = right_leg(X, K.beta, tol)
        rep.add("beta_leg", "l(B ▷ delta) = delta",
                span(np.einsum("ij,bjk->bik", l, bl.basis), K.beta.shape, tol).equality_residual(K.beta),
                tol.residual_abs)
    return UnitResult(l, X, rep)


def triangle_check(H: CStarBimodule, K: CStarBimodule, tol: Tolerance = DEFAULT_TOL) -> Report:
    """(r ⊗ Id) = (Id ⊗ l) a on (H ⊗ U) ⊗ K -> H ⊗ K."""
    U = unit_bimodule(H.beta_base)
    a = assoc_iso(H, U, K, tol)
    r = unit_r(H, tol, X=a.inner_left)
    l = unit_l(K, tol, X=a.inner_right)
    target = rtp(H.beta_module, K.alpha_module, tol)
    rI = op_tensor(a.src, r.matrix, np.eye(K.h_dim), "semi_left", dst=target, tol=tol)
    Il = op_tensor(a.dst, np.eye(H.h_dim), l.matrix, "semi_right", dst=target, tol=tol)
    rep = Report("triangle")
    rep.extend(a.report, "assoc.")
    rep.extend(r.report, "r.")
    rep.extend(l.report, "l.")
    rep.add("triangle", "r ⊗ Id = (Id ⊗ l) a", np.abs(rI - Il @ a.matrix).max(), tol.residual_abs,
            {"dim": target.dim})
    return rep


# ---------------------------------------------------------------- internal tensor products and the flip


@dataclass(frozen=True, eq=False)
class InternalTensor:
    """E ⊳_pi F (flipped=False, generators (a, k)) or F ⊲_pi E (flipped=True, generators (k, a)).

    E is a subspace of L(C^n, H) with E*E inside the domain of pi, F = C^f and
    pi maps n x n matrices to f x f matrices.
    """

    E: OperatorSpace
    f_dim: int
    pi: Callable
    flipped: bool
    completion: GramCompletion

    @property
    def dim(self) -> int:
        return self.completion.out_dim


def internal_tensor(E: OperatorSpace, f_dim: int, pi: Callable, flipped: bool = False,
                    tol: Tolerance = DEFAULT_TOL) -> InternalTensor:
    p = E.dim
    blocks = np.array([[pi(x.conj().T @ y) for y in E.basis] for x in E.basis]).reshape(p, p, f_dim, f_dim)
    if flipped:
        G = blocks.transpose(2, 0, 3, 1).reshape(f_dim * p, f_dim * p)
    else:
        G = blocks.transpose(0, 2, 1, 3).reshape(p * f_dim, p * f_dim)
    return InternalTensor(E, f_dim, pi, flipped, gram_completion(G, tol))


def flip_sigma(T: InternalTensor, tol: Tolerance = DEFAULT_TOL):
    """Unitary between E ⊳ F and F ⊲ E sending the generator (a, k) to (k, a).

    Returns (other side, matrix, generator permutation).
    """
    other = internal_tensor(T.E, T.f_dim, T.pi, not T.flipped, tol)
    p, f = T.E.dim, T.f_dim
    if T.flipped:
        perm = np.array([k * p + a for a in range(p) for k in range(f)])   # index in T for (a,k) of other
    else:
        perm = np.array([a * f + k for k in range(f) for a in range(p)])
    # other generator i corresponds to T generator perm[i]
    P = np.zeros((p * f, p * f))
    P[perm, np.arange(p * f)] = 1.0
    Wt, Wo = T.completion.synthesis, other.completion.synthesis
    R = Wo @ P.T
    Sigma = R @ T.completion.synthesis_pinv
    _wd_check(Sigma, Wt, R, "flip", tol)
    return other, Sigma, perm


# ---------------------------------------------------------------- direct sums


@dataclass
class DirectSumCompat:
    forward: np.ndarray     # ⊞_ij (H^i ⊗ K^j) -> (⊞H) ⊗ (⊞K)
    backward: np.ndarray
    big: RelativeTensorProduct
    pieces: dict
    report: Report


def direct_sum_compat(Hs: Sequence[CStarBimodule], Ks: Sequence[CStarBimodule],
                      tol: Tolerance = DEFAULT_TOL) -> DirectSumCompat:
    DH, DK = direct_sum(Hs, tol), direct_sum(Ks, tol)
    big = rtp(DH.module, DK.module, tol)
    fwd, bwd, pieces = [], [], {}
    for i, Hi in enumerate(Hs):
        for j, Kj in enumerate(Ks):
            X = rtp(Hi, Kj, tol)
            pieces[(i, j)] = X
            fwd.append(op_tensor(X, DH.injections[i], DK.injections[j], "semi_left", dst=big, tol=tol))
            bwd.append(op_tensor(big, DH.projections[i], DK.projections[j], "semi_left", dst=X, tol=tol))
    F, B = np.hstack(fwd), np.vstack(bwd)
    rep = Report("direct sums")
    rep.extend(DH.report, "H.")
    rep.extend(DK.report, "K.")
    rep.add("back_forth", "pi ∘ iota = Id", np.abs(B @ F - np.eye(F.shape[1])).max(), tol.residual_abs,
            {"dim_sum": F.shape[1], "dim_big": big.dim})
    rep.add("forth_back", "iota ∘ pi = Id", np.abs(F @ B - np.eye(big.dim)).max(), tol.residual_abs)
    return DirectSumCompat(F, B, big, pieces, rep)
