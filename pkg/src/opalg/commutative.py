"""Finite discrete bases: weighted point sets, Hilbert bundles, function algebras
and the unitary onto the fibered product of two finite spaces.

All Hilbert spaces are stored in orthonormal coordinates: a function h on a
finite measure space (S, m) is represented by sqrt(m(s)) h(s).  The weights
then enter only through the explicit j_X formula and the measure nu on
X x_Z Y.  On finite discrete spaces every continuity or vanishing condition
on fields of operators holds automatically, so nothing beyond the finite
formulas needs checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .base import CStarBase
from .errors import EmptyFiber, ShapeMismatch
from .fiber import ModuleAlgebra, fiber_product, sauvageot_crosscheck
from .linalg import DEFAULT_TOL, Tolerance
from .module import CStarModule, check_module, rho
from .opspace import ConcreteAlgebra, OperatorSpace, diagonal_algebra, span
from .report import Report
from .rtp import RelativeTensorProduct, op_tensor, rtp

FINITE_NOTE = "finite discrete spaces: continuity and vanishing conditions hold trivially"


@dataclass(frozen=True, eq=False)
class DiscreteBase:
    """Z = {0, ..., n-1} with strictly positive weights mu_z."""

    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ShapeMismatch("weights must be a nonempty list")
        if np.any(w <= 0):
            raise EmptyFiber("all weights must be strictly positive")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @property
    def points(self) -> int:
        return len(self.weights)

    @cached_property
    def base(self) -> CStarBase:
        D = diagonal_algebra(self.points)
        return CStarBase(self.points, D, D)

    def __repr__(self):
        return f"DiscreteBase(points={self.points})"


@dataclass(frozen=True)
class Bundle:
    """A Hilbert bundle over a finite Z: one fiber dimension per point."""

    fiber_dims: tuple

    def __post_init__(self):
        d = tuple(int(x) for x in self.fiber_dims)
        if not d or min(d) < 1:
            raise EmptyFiber("every fiber must have dimension >= 1")
        object.__setattr__(self, "fiber_dims", d)

    @property
    def h_dim(self) -> int:
        return sum(self.fiber_dims)

    @property
    def offsets(self) -> list:
        return list(np.cumsum((0,) + self.fiber_dims[:-1]))

    def block(self, z: int) -> slice:
        o = self.offsets[z]
        return slice(o, o + self.fiber_dims[z])


def _check_points(dbase: DiscreteBase, n: int):
    if n != dbase.points:
        raise ShapeMismatch(f"bundle has {n} fibers over a base with {dbase.points} points")


def section_operator(bundle: Bundle, sections: Sequence) -> np.ndarray:
    """m(xi): zeta -> (xi(z) zeta(z))_z, as an h x |Z| block-column matrix."""
    n = len(bundle.fiber_dims)
    M = np.zeros((bundle.h_dim, n), dtype=np.complex128)
    for z in range(n):
        v = np.asarray(sections[z], dtype=np.complex128).reshape(-1)
        if v.size != bundle.fiber_dims[z]:
            raise ShapeMismatch(f"section value at {z} has length {v.size}")
        M[bundle.block(z), z] = v
    return M


def _section_basis(bundle: Bundle) -> np.ndarray:
    n = len(bundle.fiber_dims)
    out = []
    for z in range(n):
        for i in range(bundle.fiber_dims[z]):
            M = np.zeros((bundle.h_dim, n), dtype=np.complex128)
            M[bundle.block(z).start + i, z] = 1.0
            out.append(M)
    return np.array(out)


def bundle_module(dbase: DiscreteBase, bundle: Bundle, opposite: bool = False) -> CStarModule:
    """H = ⊕ H_z with alpha = {m(xi)}; over the opposite base when used as a right factor."""
    _check_points(dbase, len(bundle.fiber_dims))
    base = dbase.base.opposite if opposite else dbase.base
    B = _section_basis(bundle)
    return CStarModule(base, bundle.h_dim, OperatorSpace(bundle.h_dim, dbase.points, B))


def blockwise_scalars(bundle: Bundle, f) -> np.ndarray:
    """Multiplication of sections by the function f on Z."""
    return np.diag(np.repeat(np.asarray(f, dtype=np.complex128), bundle.fiber_dims))


def check_bundle_module(dbase: DiscreteBase, bundle: Bundle, tol: Tolerance = DEFAULT_TOL) -> Report:
    mod = bundle_module(dbase, bundle)
    rep = check_module(mod, tol)
    r = 0.0
    for z in range(dbase.points):
        f = np.zeros(dbase.points)
        f[z] = 1.0
        r = max(r, np.abs(rho(mod, np.diag(f).astype(complex), tol) - blockwise_scalars(bundle, f)).max())
    rep.add("rho_blockwise", "rho_alpha(f) = pointwise multiplication", r, tol.residual_abs,
            {"h": bundle.h_dim, "alpha": mod.alpha.dim})
    return rep


@dataclass
class FiberwiseIso:
    matrix: np.ndarray
    rtp: RelativeTensorProduct
    offsets: list          # start of the block H_z ⊗ K_z in the target
    report: Report


def fiberwise_rtp_iso(dbase: DiscreteBase, bH: Bundle, bK: Bundle, tol: Tolerance = DEFAULT_TOL) -> FiberwiseIso:
    """Unitary H ⊗_b K -> ⊕_z H_z ⊗ K_z, m(xi) ⊗ zeta ⊗ m(eta) -> (zeta(z) xi(z) ⊗ eta(z))_z."""
    _check_points(dbase, len(bH.fiber_dims))
    _check_points(dbase, len(bK.fiber_dims))
    H, K = bundle_module(dbase, bH), bundle_module(dbase, bK, opposite=True)
    X = rtp(H, K, tol)
    dims = [h * k for h, k in zip(bH.fiber_dims, bK.fiber_dims)]
    offs = list(np.cumsum([0] + dims[:-1]))
    total = sum(dims)
    n = dbase.points
    cols = []
    for a, k, b in X.gen_index:
        xi, eta = X.beta.basis[a][:, k], X.gamma.basis[b][:, k]
        v = np.zeros(total, dtype=np.complex128)
        v[offs[k]:offs[k] + dims[k]] = np.kron(xi[bH.block(k)], eta[bK.block(k)])
        cols.append(v)
    R = np.array(cols).T
    U = R @ X.W_pinv
    rep = Report("fiberwise relative tensor product")
    rep.add("well_defined", "U W = images of generators", np.abs(U @ X.W - R).max(), tol.residual_abs)
    rep.add_flag("dimension", "dim H ⊗_b K = sum_z dim H_z dim K_z", X.dim == total,
                 dims={"rtp": X.dim, "fiberwise": total, "points": n})
    un = max(np.abs(U.conj().T @ U - np.eye(X.dim)).max(), np.abs(U @ U.conj().T - np.eye(total)).max()) \
        if X.dim == total else 1.0
    rep.add("unitary", "U* U = Id, U U* = Id", un, tol.residual_abs)
    return FiberwiseIso(U, X, offs, rep)


def check_fiberwise_blocks(iso: FiberwiseIso, bH: Bundle, bK: Bundle, Ss: Sequence, Ts: Sequence,
                           tol: Tolerance = DEFAULT_TOL) -> Report:
    """U (S ⊗ T) U* = ⊕ S_z ⊗ T_z for block-diagonal S = ⊕ S_z, T = ⊕ T_z."""
    rep = Report("fiberwise operator tensor")
    total = iso.matrix.shape[0]
    worst = 0.0
    for Sz, Tz in zip(Ss, Ts):
        S = np.zeros((bH.h_dim, bH.h_dim), dtype=np.complex128)
        T = np.zeros((bK.h_dim, bK.h_dim), dtype=np.complex128)
        target = np.zeros((total, total), dtype=np.complex128)
        for z, (s, t) in enumerate(zip(Sz, Tz)):
            S[bH.block(z), bH.block(z)] = s
            T[bK.block(z), bK.block(z)] = t
            o, d = iso.offsets[z], bH.fiber_dims[z] * bK.fiber_dims[z]
            target[o:o + d, o:o + d] = np.kron(s, t)
        ST = op_tensor(iso.rtp, S, T, "semi_left", tol=tol)
        worst = max(worst, np.abs(iso.matrix @ ST @ iso.matrix.conj().T - target).max())
    rep.add("blockwise", "U (S ⊗ T) U* = ⊕ S_z ⊗ T_z", worst, tol.residual_abs, {"pairs": len(Ss)})
    return rep


# ---------------------------------------------------------------- fibered spaces


@dataclass(frozen=True)
class FiberedSpace:
    """Finite X with p: X -> Z and strictly positive fiber weights phi(x)."""

    proj: tuple
    weights: tuple

    def __post_init__(self):
        p = tuple(int(z) for z in self.proj)
        w = tuple(float(x) for x in self.weights)
        if len(p) != len(w):
            raise ShapeMismatch("one weight per point of X is required")
        if any(x <= 0 for x in w):
            raise EmptyFiber("fiber weights must be strictly positive on each fiber")
        object.__setattr__(self, "proj", p)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return len(self.proj)

    def fiber(self, z: int) -> list:
        return [x for x, q in enumerate(self.proj) if q == z]


def _check_fibered(fs: FiberedSpace, dbase: DiscreteBase):
    if any(z < 0 or z >= dbase.points for z in fs.proj):
        raise ShapeMismatch("projection leaves the base")
    for z in range(dbase.points):
        if not fs.fiber(z):
            raise EmptyFiber(f"fiber over {z} is empty")


def j_map(fs: FiberedSpace, f) -> np.ndarray:
    """j_X(f): L^2(Z, mu) -> L^2(X, nu_X), (j(f) h)(x) = f(x) h(p(x)), in orthonormal coordinates."""
    f = np.asarray(f, dtype=np.complex128)
    n = max(fs.proj) + 1
    M = np.zeros((fs.size, n), dtype=np.complex128)
    for x, z in enumerate(fs.proj):
        M[x, z] = np.sqrt(fs.weights[x]) * f[x]
    return M


def fibered_module(fs: FiberedSpace, dbase: DiscreteBase, opposite: bool = False) -> CStarModule:
    _check_fibered(fs, dbase)
    base = dbase.base.opposite if opposite else dbase.base
    B = []
    for x in range(fs.size):
        e = np.zeros(fs.size)
        e[x] = 1.0
        M = np.zeros((fs.size, dbase.points), dtype=np.complex128)
        M[:, :max(fs.proj) + 1] = j_map(fs, e)
        B.append(M / np.linalg.norm(M))
    return CStarModule(base, fs.size, OperatorSpace(fs.size, dbase.points, np.array(B)))


def function_algebra(fs: FiberedSpace) -> ConcreteAlgebra:
    """C(X) acting by multiplication on L^2(X)."""
    return diagonal_algebra(fs.size)


def push_forward(fs: FiberedSpace, dbase: DiscreteBase, f) -> np.ndarray:
    """phi_*(f)(z) = sum over the fiber X_z of phi(x) f(x)."""
    out = np.zeros(dbase.points, dtype=np.complex128)
    for x, z in enumerate(fs.proj):
        out[z] += fs.weights[x] * f[x]
    return out


def fibered_points(fsX: FiberedSpace, fsY: FiberedSpace) -> list:
    """X x_Z Y as a list of (x, y) with p(x) = q(y), ordered by x then y."""
    return [(x, y) for x in range(fsX.size) for y in range(fsY.size) if fsX.proj[x] == fsY.proj[y]]


def fibered_measure(fsX: FiberedSpace, fsY: FiberedSpace, dbase: DiscreteBase) -> np.ndarray:
    """nu(x, y) = phi(x) psi(y) mu(p(x)) on X x_Z Y."""
    return np.array([fsX.weights[x] * fsY.weights[y] * dbase.weights[fsX.proj[x]]
                     for x, y in fibered_points(fsX, fsY)])


@dataclass
class FiberedUnitary:
    matrix: np.ndarray
    rtp: RelativeTensorProduct
    points: list
    measure: np.ndarray
    report: Report


def fibered_unitary(fsX: FiberedSpace, fsY: FiberedSpace, dbase: DiscreteBase,
                    tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> FiberedUnitary:
    """U: L^2(X) ⊗_b L^2(Y) -> L^2(X x_Z Y, nu), j_X(f) ⊗ h ⊗ j_Y(g) -> f(x) h(p(x)) g(y)."""
    HX, HY = fibered_module(fsX, dbase), fibered_module(fsY, dbase, opposite=True)
    X = rtp(HX, HY, tol)
    pts = fibered_points(fsX, fsY)
    nu = fibered_measure(fsX, fsY, dbase)
    mu = np.asarray(dbase.weights)
    cols = []
    for a, k, b in X.gen_index:
        xi, eta = X.beta.basis[a], X.gamma.basis[b]
        # xi = j_X(f) with f(x) = xi[x, p(x)] / sqrt(phi(x)); h = e_k / sqrt(mu_k) as a function
        v = np.zeros(len(pts), dtype=np.complex128)
        for i, (x, y) in enumerate(pts):
            z = fsX.proj[x]
            if z != k:
                continue
            f = xi[x, z] / np.sqrt(fsX.weights[x])
            g = eta[y, z] / np.sqrt(fsY.weights[y])
            h = 1.0 / np.sqrt(mu[z])
            v[i] = np.sqrt(nu[i]) * f * h * g
        cols.append(v)
    R = np.array(cols).T if cols else np.zeros((len(pts), 0))
    U = R @ X.W_pinv
    rep = Report("fibered product unitary")
    rep.add("well_defined", "U W = images of generators", np.abs(U @ X.W - R).max(), tol.residual_abs)
    ok = U.shape == (len(pts), X.dim) and X.dim == len(pts)
    rep.add_flag("dimension", "dim L^2(X) ⊗_b L^2(Y) = |X x_Z Y|", ok, dims={"rtp": X.dim, "fibered": len(pts)})
    un = max(np.abs(U.conj().T @ U - np.eye(X.dim)).max(), np.abs(U @ U.conj().T - np.eye(len(pts))).max()) \
        if ok else 1.0
    rep.add("unitary", "U* U = Id, U U* = Id", un, tol.residual_abs)
    # j_X(f)* g = phi_*(f̄ g) on random functions
    rng = np.random.default_rng(seed)
    jr = 0.0
    for fs in (fsX, fsY):
        for _ in range(4):
            f = rng.standard_normal(fs.size) + 1j * rng.standard_normal(fs.size)
            g = rng.standard_normal(fs.size) + 1j * rng.standard_normal(fs.size)
            nx = np.array([fs.weights[x] * mu[fs.proj[x]] for x in range(fs.size)])
            lhs = j_map(fs, f).conj().T @ (np.sqrt(nx) * g)          # coordinates in L^2(Z)
            rhs = np.sqrt(mu) * push_forward(fs, dbase, np.conj(f) * g)
            jr = max(jr, np.abs(lhs - rhs).max())
    rep.add("j_adjoint", "j_X(f)* g = phi_*(f̄ g)", jr, tol.residual_abs)
    # multiplication representations go to multiplication operators
    mr = 0.0
    if ok:
        for x in range(fsX.size):
            e = np.zeros(fsX.size, dtype=np.complex128)
            e[x] = 1.0
            img = U @ X.left_op(np.diag(e)) @ U.conj().T
            want = np.diag([1.0 if p[0] == x else 0.0 for p in pts])
            mr = max(mr, np.abs(img - want).max())
        for y in range(fsY.size):
            e = np.zeros(fsY.size, dtype=np.complex128)
            e[y] = 1.0
            img = U @ X.right_op(np.diag(e)) @ U.conj().T
            want = np.diag([1.0 if p[1] == y else 0.0 for p in pts])
            mr = max(mr, np.abs(img - want).max())
    rep.add("multiplication", "U (f ⊗ 1) U* = f(x), U (1 ⊗ g) U* = g(y)", mr, tol.residual_abs)
    return FiberedUnitary(U, X, pts, nu, rep)


def fp_commutative_check(fsX: FiberedSpace, fsY: FiberedSpace, dbase: DiscreteBase,
                         tol: Tolerance = DEFAULT_TOL) -> Report:
    """Ad_U(C(X) * C(Y)) against all functions on X x_Z Y."""
    fu = fibered_unitary(fsX, fsY, dbase, tol)
    rep = Report("commutative fiber product")
    rep.extend(fu.report, "U.")
    A = ModuleAlgebra(fu.rtp.H, function_algebra(fsX))
    B = ModuleAlgebra(fu.rtp.K, function_algebra(fsY))
    fp = fiber_product(A, B, tol, X=fu.rtp)
    U = fu.matrix
    n = len(fu.points)
    ad = span([U @ x @ U.conj().T for x in fp.space.basis], (n, n), tol)
    D = diagonal_algebra(n).space
    rep.add("fiber_is_functions", "Ad_U(C(X) * C(Y)) = C(X x_Z Y)", ad.equality_residual(D), tol.residual_abs,
            {"fiber": fp.dim, "points": n}, note=FINITE_NOTE)
    rep.extend(sauvageot_crosscheck(fp, tol), "commutant.")
    rep.data["fiber_dim"] = fp.dim
    return rep
