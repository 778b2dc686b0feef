"""Operator subspaces X of L(C^dom, C^cod) and concrete *-algebras.

A subspace is stored through a Hilbert-Schmidt orthonormal basis.  Equality of
subspaces means mutual containment, each basis vector of one lying within
residual_abs of the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import ClosureNotStabilized, DegenerateInput, ShapeMismatch
from .linalg import (DEFAULT_TOL, Tolerance, orthonormal_basis, stack_matrices,
                     stacked_nullspace)

# candidate families larger than this multiple of the ambient dimension are
# compressed by SVD in chunks before Gram-Schmidt
_COMPRESS_FACTOR = 2
_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class OperatorSpace:
    cod_dim: int
    dom_dim: int
    basis: np.ndarray  # (k, cod_dim, dom_dim), HS-orthonormal

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.complex128).reshape(-1, self.cod_dim, self.dom_dim)
        object.__setattr__(self, "basis", b)

    @property
    def shape(self):
        return (self.cod_dim, self.dom_dim)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.cod_dim * self.dom_dim

    @cached_property
    def flat(self) -> np.ndarray:
        """Basis as rows of a (k, cod*dom) matrix."""
        return self.basis.reshape(self.dim, -1)

    def __iter__(self):
        return iter(self.basis)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"OperatorSpace({self.cod_dim}x{self.dom_dim}, dim={self.dim})"

    def coeffs(self, v: np.ndarray) -> np.ndarray:
        """HS coefficients <X_i, v> of v (or of a stack of matrices) in the basis."""
        v = np.asarray(v, dtype=np.complex128)
        if v.ndim == 2:
            return self.flat.conj() @ v.reshape(-1)
        return v.reshape(v.shape[0], -1) @ self.flat.conj().T

    def element(self, c: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(c, dtype=np.complex128), self.basis, axes=(0, 0))

    def project(self, v: np.ndarray) -> np.ndarray:
        return self.element(self.coeffs(v))

    def residual(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=np.complex128)
        if v.shape != self.shape:
            raise ShapeMismatch(f"element of shape {v.shape} tested against {self.shape}")
        flat = v.reshape(-1)
        if self.dim == 0:
            return float(np.linalg.norm(flat))
        return float(np.linalg.norm(flat - self.flat.T @ (self.flat.conj() @ flat)))

    def residuals(self, vs) -> np.ndarray:
        V = stack_matrices(vs, self.shape)
        if V.shape[0] == 0:
            return np.zeros(0)
        F = V.reshape(V.shape[0], -1)
        if self.dim:
            F = F - (F @ self.flat.conj().T) @ self.flat
        return np.linalg.norm(F, axis=1)

    def contains(self, v, tol: Tolerance = DEFAULT_TOL) -> bool:
        v = np.asarray(v, dtype=np.complex128)
        return self.residual(v) <= tol.residual_abs * max(1.0, float(np.linalg.norm(v)))

    def max_residual_of(self, vs) -> float:
        """Largest residual, relative to max(1, norm), of a family tested for membership."""
        V = stack_matrices(vs, self.shape)
        if V.shape[0] == 0:
            return 0.0
        norms = np.maximum(1.0, np.linalg.norm(V.reshape(V.shape[0], -1), axis=1))
        return float((self.residuals(V) / norms).max())

    def inside(self, other: "OperatorSpace") -> float:
        """Residual of self ⊆ other (0 means contained exactly)."""
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} vs {other.shape}")
        return other.max_residual_of(self.basis)

    def is_subspace_of(self, other: "OperatorSpace", tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.inside(other) <= tol.residual_abs

    def equality_residual(self, other: "OperatorSpace") -> float:
        return max(self.inside(other), other.inside(self))

    def equals(self, other: "OperatorSpace", tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.equality_residual(other) <= tol.residual_abs

    def complement_apply(self, M: np.ndarray) -> np.ndarray:
        """(I - P) applied to the columns of M (M has cod*dom rows)."""
        if self.dim == 0:
            return M
        return M - self.flat.T @ (self.flat.conj() @ M)


def span(vectors, shape, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """Subspace spanned by a family of matrices of the given shape."""
    V = stack_matrices(vectors, shape)
    return _span_array(V, shape, tol)


def _span_array(V: np.ndarray, shape, tol: Tolerance) -> OperatorSpace:
    cod, dom = shape
    N = cod * dom
    if V.shape[0] > _COMPRESS_FACTOR * N:
        V = _compress(iter([V.reshape(V.shape[0], N)]), N, tol).reshape(-1, cod, dom)
    return OperatorSpace(cod, dom, orthonormal_basis(V, tol, shape=shape))


def _compress(chunks: Iterable[np.ndarray], N: int, tol: Tolerance) -> np.ndarray:
    """Scaled row basis of the span of many rows, computed chunkwise by SVD."""
    cur = np.zeros((0, N), dtype=np.complex128)
    top = 0.0
    for C in chunks:
        for start in range(0, C.shape[0], _CHUNK):
            block = C[start:start + _CHUNK]
            if block.shape[0] == 0:
                continue
            top = max(top, float(np.linalg.norm(block, axis=1).max()))
            M = np.vstack([cur, block])
            _, s, Vh = np.linalg.svd(M, full_matrices=False)
            keep = s > tol.rank_rel * top if top > 0 else np.zeros(s.size, bool)
            cur = s[keep, None] * Vh[keep]
    return cur


def span_from_chunks(chunks: Iterable[np.ndarray], shape, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """Span of candidates delivered as (m, cod, dom) chunks, without materializing all of them."""
    cod, dom = shape
    N = cod * dom
    rows = _compress((np.asarray(c, np.complex128).reshape(-1, N) for c in chunks), N, tol)
    return OperatorSpace(cod, dom, orthonormal_basis(rows.reshape(-1, cod, dom), tol, shape=shape))


def zero_space(cod: int, dom: int) -> OperatorSpace:
    return OperatorSpace(cod, dom, np.zeros((0, cod, dom), dtype=np.complex128))


def full_space(cod: int, dom: int) -> OperatorSpace:
    return OperatorSpace(cod, dom, np.eye(cod * dom, dtype=np.complex128).reshape(-1, cod, dom))


def space_product(X: OperatorSpace, Y: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """[XY] = span{xy : x in X, y in Y}."""
    if X.dom_dim != Y.cod_dim:
        raise ShapeMismatch(f"cannot multiply {X.shape} by {Y.shape}")
    shape = (X.cod_dim, Y.dom_dim)
    if X.dim == 0 or Y.dim == 0:
        return zero_space(*shape)
    N = shape[0] * shape[1]
    if X.dim * Y.dim <= _COMPRESS_FACTOR * N:
        P = np.einsum("aij,bjk->abik", X.basis, Y.basis).reshape(-1, *shape)
        return OperatorSpace(*shape, orthonormal_basis(P, tol, shape=shape))
    step = max(1, _CHUNK // Y.dim)

    def chunks():
        for s in range(0, X.dim, step):
            yield np.einsum("aij,bjk->abik", X.basis[s:s + step], Y.basis)
    return span_from_chunks(chunks(), shape, tol)


def space_adjoint(X: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    return OperatorSpace(X.dom_dim, X.cod_dim,
                         orthonormal_basis(X.basis.conj().transpose(0, 2, 1), tol,
                                           shape=(X.dom_dim, X.cod_dim)))


def space_sum(*spaces: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    shape = spaces[0].shape
    for s in spaces:
        if s.shape != shape:
            raise ShapeMismatch(f"{s.shape} vs {shape}")
    return span(np.concatenate([s.basis for s in spaces]), shape, tol)


def space_intersection(*spaces: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> OperatorSpace:
    """Intersection through the nullspace of the stacked complement projections.

    Unknowns are coefficients in the first space's basis; a unit vector counts as
    a member when each complement residual is at most residual_abs.
    """
    X = spaces[0]
    for s in spaces[1:]:
        if s.shape != X.shape:
            raise ShapeMismatch(f"{s.shape} vs {X.shape}")
    if X.dim == 0:
        return X
    Q = X.flat.T
    N = stacked_nullspace((s.complement_apply(Q) for s in spaces[1:]), X.dim, tol,
                          atol=tol.residual_abs)
    return OperatorSpace(*X.shape, orthonormal_basis((Q @ N).T.reshape(-1, *X.shape), tol,
                                                     shape=X.shape))


# ---------------------------------------------------------------- algebras


def closure_residuals(space: OperatorSpace) -> tuple[float, float]:
    """(adjoint residual, product residual) of a square operator subspace."""
    if space.dim == 0:
        return 0.0, 0.0
    adj = space.max_residual_of(space.basis.conj().transpose(0, 2, 1))
    prod = 0.0
    for a in space.basis:
        P = np.einsum("ij,bjk->bik", a, space.basis)
        prod = max(prod, space.max_residual_of(P))
    return adj, prod


def nondegeneracy_rank(space: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> int:
    """Rank of [X C^dom] inside C^cod."""
    if space.dim == 0:
        return 0
    M = np.hstack(list(space.basis))
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol.rank_rel * s[0])) if s.size and s[0] > 0 else 0


@dataclass(frozen=True, eq=False)
class ConcreteAlgebra:
    space: OperatorSpace
    nondegenerate: bool = field(default=False)

    @property
    def n(self) -> int:
        return self.space.cod_dim

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def basis(self) -> np.ndarray:
        return self.space.basis

    def __repr__(self):
        flag = "nondegenerate" if self.nondegenerate else "degenerate"
        return f"ConcreteAlgebra(n={self.n}, dim={self.dim}, {flag})"

    def contains(self, v, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.space.contains(v, tol)

    def equals(self, other, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.space.equals(_space(other), tol)

    def is_unital(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.space.contains(np.eye(self.n), tol)


def _space(x) -> OperatorSpace:
    return x.space if isinstance(x, ConcreteAlgebra) else x


def algebra_from_space(space: OperatorSpace, tol: Tolerance = DEFAULT_TOL) -> ConcreteAlgebra:
    """Wrap a subspace known to be a *-algebra, recording nondegeneracy."""
    if space.cod_dim != space.dom_dim:
        raise ShapeMismatch("algebras act on one space")
    return ConcreteAlgebra(space, nondegeneracy_rank(space, tol) == space.cod_dim)


def algebra_from_basis(vectors, n: int, tol: Tolerance = DEFAULT_TOL) -> ConcreteAlgebra:
    return algebra_from_space(span(vectors, (n, n), tol), tol)


def generated_algebra(generators, unital: bool = False, tol: Tolerance = DEFAULT_TOL,
                      n: int | None = None) -> ConcreteAlgebra:
    """*-algebra generated by the given matrices (and Id when unital).

    The span of the generators and their adjoints is repeatedly enlarged by
    left multiplication with that generating set, which reaches every word.
    """
    if n is None:
        G = stack_matrices(generators)
        n = G.shape[1]
    else:
        G = stack_matrices(generators, (n, n))
    gens = np.concatenate([G, G.conj().transpose(0, 2, 1)]) if G.shape[0] else G
    start = [np.eye(n)] if unital else []
    S = span(list(start) + list(gens), (n, n), tol)
    gen_set = span(gens, (n, n), tol).basis if gens.shape[0] else gens
    for _ in range(max(1, n * n)):
        if S.dim == 0 or gen_set.shape[0] == 0:
            return algebra_from_space(S, tol)
        words = np.einsum("gij,bjk->gbik", gen_set, S.basis).reshape(-1, n, n)
        T = span(np.concatenate([S.basis, words]), (n, n), tol)
        if T.dim == S.dim:
            return algebra_from_space(T, tol)
        S = T
    raise ClosureNotStabilized(f"algebra closure did not stabilize after {n * n} rounds")


def full_algebra(n: int) -> ConcreteAlgebra:
    return ConcreteAlgebra(full_space(n, n), True)


def scalar_algebra(n: int) -> ConcreteAlgebra:
    return ConcreteAlgebra(OperatorSpace(n, n, (np.eye(n) / np.sqrt(n))[None]), True)


def diagonal_algebra(n: int) -> ConcreteAlgebra:
    B = np.zeros((n, n, n), dtype=np.complex128)
    for i in range(n):
        B[i, i, i] = 1.0
    return ConcreteAlgebra(OperatorSpace(n, n, B), True)


def zero_algebra(n: int) -> ConcreteAlgebra:
    return ConcreteAlgebra(zero_space(n, n), n == 0)


def algebra_commutant(A, tol: Tolerance = DEFAULT_TOL) -> ConcreteAlgebra:
    from .linalg import commutant
    S = _space(A)
    n = S.cod_dim
    return ConcreteAlgebra(OperatorSpace(n, n, commutant(S.basis, tol, n=n)), True)


def multiplier_algebra(A: ConcreteAlgebra, tol: Tolerance = DEFAULT_TOL) -> ConcreteAlgebra:
    """Idealizer {T : TA ⊆ A, AT ⊆ A} of a nondegenerate algebra."""
    if not A.nondegenerate:
        raise DegenerateInput("multiplier algebra needs a nondegenerate algebra")
    n = A.n
    eye = np.eye(n, dtype=np.complex128)

    def blocks():
        for a in A.basis:
            yield A.space.complement_apply(np.kron(eye, a.T))
            yield A.space.complement_apply(np.kron(a, eye))
    N = stacked_nullspace(blocks(), n * n, tol)
    sol = OperatorSpace(n, n, orthonormal_basis(N.T.reshape(-1, n, n), tol, shape=(n, n)))
    return algebra_from_space(sol, tol)
