"""Dense complex linear algebra shared by every other module.

Operator subspaces are handled through the row-major flattening X -> X.reshape(-1),
which is an isometry from the Hilbert-Schmidt inner product trace(X^H Y) to the
standard inner product on C^(rows*cols).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import Inconsistent, NotPSD, ShapeMismatch, Underdetermined


@dataclass(frozen=True)
class Tolerance:
    """rank_rel: relative spectral cutoff; residual_abs: absolute residual bound."""

    rank_rel: float = 1e-9
    residual_abs: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.rank_rel < 1.0):
            raise ValueError(f"rank_rel must lie in (0, 1), got {self.rank_rel}")
        if not (0.0 < self.residual_abs < 1.0):
            raise ValueError(f"residual_abs must lie in (0, 1), got {self.residual_abs}")


DEFAULT_TOL = Tolerance()


def as_matrix(x, rows=None, cols=None) -> np.ndarray:
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got shape {a.shape}")
    if rows is not None and a.shape != (rows, cols):
        raise ShapeMismatch(f"expected shape {(rows, cols)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def stack_matrices(vectors, shape=None) -> np.ndarray:
    """Stack a list of equally shaped matrices into a (k, rows, cols) array."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 3:
        out = np.asarray(vectors, dtype=np.complex128)
        if shape is not None and out.shape[1:] != tuple(shape) and out.shape[0] > 0:
            raise ShapeMismatch(f"expected matrices of shape {shape}, got {out.shape[1:]}")
        if out.shape[0] == 0 and shape is not None:
            return np.zeros((0,) + tuple(shape), dtype=np.complex128)
        return out
    mats = [as_matrix(v) for v in vectors]
    if not mats:
        if shape is None:
            raise ShapeMismatch("cannot infer the shape of an empty family")
        return np.zeros((0,) + tuple(shape), dtype=np.complex128)
    s = mats[0].shape if shape is None else tuple(shape)
    for m in mats:
        if m.shape != s:
            raise ShapeMismatch(f"mixed shapes {s} and {m.shape}")
    return np.stack(mats)


def orthonormal_basis(vectors, tol: Tolerance = DEFAULT_TOL, shape=None) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of the span of the given matrices.

    Modified Gram-Schmidt in input order with one re-orthogonalization pass.
    Vectors whose residual is at most rank_rel times the largest input norm are
    dropped.  Returns an array of shape (k, rows, cols).
    """
    V = stack_matrices(vectors, shape)
    k, r, c = V.shape
    if k == 0:
        return V
    flat = np.ascontiguousarray(V.reshape(k, r * c))
    norms = np.linalg.norm(flat, axis=1)
    top = norms.max()
    if top == 0.0:
        return np.zeros((0, r, c), dtype=np.complex128)
    Q, _ = _backend.mgs_rows(flat, tol.rank_rel * top)
    return np.asarray(Q).reshape(-1, r, c)


def range_basis(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the range of M (relative SVD cutoff)."""
    M = np.asarray(M, dtype=np.complex128)
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=np.complex128)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[0], 0), dtype=np.complex128)
    return U[:, s > tol.rank_rel * s[0]]


def nullspace(M: np.ndarray, atol: float) -> np.ndarray:
    """Orthonormal columns spanning {v : |Mv| small}, singular values <= atol."""
    M = np.asarray(M, dtype=np.complex128)
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=np.complex128)
    if M.shape[0] > n:
        M = np.linalg.qr(M, mode="r")
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    s_full = np.zeros(n)
    s_full[: s.size] = s
    return Vh[s_full <= atol].conj().T


def stacked_nullspace(blocks: Iterable[np.ndarray], n: int, tol: Tolerance = DEFAULT_TOL,
                      scale: float = 1.0, atol: float | None = None) -> np.ndarray:
    """Common nullspace of a sequence of constraint blocks, each acting on C^n.

    The blocks are absorbed one at a time, restricting to the current solution
    space before each SVD, which keeps every factorization small.  The cutoff is
    atol if given, otherwise rank_rel * max(scale, largest singular value).
    """
    N = np.eye(n, dtype=np.complex128)
    for B in blocks:
        if N.shape[1] == 0:
            break
        B = np.asarray(B, dtype=np.complex128)
        if B.shape[0] == 0:
            continue
        R = B @ N
        if atol is None:
            smax = np.linalg.norm(R, 2) if R.size else 0.0
            cut = tol.rank_rel * max(scale, smax)
        else:
            cut = atol
        ns = nullspace(R, cut)
        N = N @ ns
        # keep the columns numerically orthonormal after repeated products
        if N.shape[1]:
            N, _ = np.linalg.qr(N)
    return N


def commutator_block(a: np.ndarray) -> np.ndarray:
    """Matrix of T -> Ta - aT acting on row-major vec(T)."""
    n = a.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    return np.kron(eye, a.T) - np.kron(a, eye)


def commutant(generators, tol: Tolerance = DEFAULT_TOL, n: int | None = None) -> np.ndarray:
    """Orthonormal basis of {T : Ta = aT for every generator a}, shape (k, n, n)."""
    if n is None:
        G = stack_matrices(generators)
        n = G.shape[1]
    else:
        G = stack_matrices(generators, (n, n))
    if G.shape[0] and G.shape[1] != G.shape[2]:
        raise ShapeMismatch("commutant needs square generators")
    scale = max((np.linalg.norm(g) for g in G), default=1.0)
    N = stacked_nullspace((commutator_block(g) for g in G), n * n, tol, scale=scale)
    return orthonormal_basis(N.T.reshape(-1, n, n), tol, shape=(n, n))


@dataclass(frozen=True)
class GramCompletion:
    """Separated completion of a family of abstract generators.

    coords[i] are the coordinates of generator i, with coords @ coords^H equal
    to the Gram matrix.  The embedded generator vectors are the columns of
    synthesis = coords^H, so that synthesis^H @ synthesis = gram.
    """

    input_count: int
    out_dim: int
    coords: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def synthesis(self) -> np.ndarray:
        return self.coords.conj().T

    def embed(self, coeffs: np.ndarray) -> np.ndarray:
        """Coordinates of sum_i coeffs[i] * generator_i (coeffs may be a matrix of columns)."""
        return self.synthesis @ coeffs

    @property
    def synthesis_pinv(self) -> np.ndarray:
        """Right inverse of the synthesis map: synthesis @ pinv = Id."""
        return self.eigvecs / np.sqrt(self.eigvals)[None, :]


def hermitize(G: np.ndarray) -> np.ndarray:
    return 0.5 * (G + G.conj().T)


def gram_completion(gram, tol: Tolerance = DEFAULT_TOL) -> GramCompletion:
    G = np.asarray(gram, dtype=np.complex128)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ShapeMismatch(f"Gram matrix must be square, got {G.shape}")
    m = G.shape[0]
    if m == 0:
        return GramCompletion(0, 0, np.zeros((0, 0), complex), np.zeros(0), np.zeros((0, 0), complex))
    herm_err = np.abs(G - G.conj().T).max()
    scale = max(1.0, np.abs(G).max())
    if herm_err > tol.residual_abs * scale:
        raise NotPSD(f"Gram matrix is not hermitian (error {herm_err:.3e})")
    w, V = np.linalg.eigh(hermitize(G))
    lam_max = max(w[-1], 0.0)
    if w[0] < -tol.residual_abs * max(1.0, lam_max):
        raise NotPSD(f"Gram matrix has eigenvalue {w[0]:.3e}")
    keep = w > tol.rank_rel * lam_max if lam_max > 0 else np.zeros(m, bool)
    # descending eigenvalue order gives a stable coordinate layout
    idx = np.nonzero(keep)[0][::-1]
    w, V = w[idx], V[:, idx]
    coords = V * np.sqrt(w)[None, :]
    return GramCompletion(m, idx.size, coords, w, V)


def solve_intertwiner(constraints: Sequence[tuple], shape, tol: Tolerance = DEFAULT_TOL,
                      allow_underdetermined: bool = False) -> np.ndarray:
    """Solve T @ L_i = R_i jointly for T of the given (cod, dom) shape.

    Least squares through the SVD of the stacked L; the residual is certified
    against residual_abs (scaled by the size of R when that exceeds one).
    """
    cod, dom = shape
    if not constraints:
        if allow_underdetermined:
            return np.zeros(shape, dtype=np.complex128)
        raise Underdetermined("no constraints", nullity=cod * dom)
    L = np.hstack([as_matrix(l) for l, _ in constraints])
    R = np.hstack([as_matrix(r) for _, r in constraints])
    if L.shape[0] != dom or R.shape[0] != cod or L.shape[1] != R.shape[1]:
        raise ShapeMismatch(f"constraint shapes {L.shape}, {R.shape} do not fit T of shape {shape}")
    U, s, Vh = np.linalg.svd(L, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > tol.rank_rel * s[0]))
    if rank < dom and not allow_underdetermined:
        raise Underdetermined(f"constraints determine only rank {rank} of {dom}",
                              nullity=(dom - rank) * cod)
    T = (R @ Vh[:rank].conj().T / s[:rank][None, :]) @ U[:, :rank].conj().T
    res = np.abs(T @ L - R).max() if R.size else 0.0
    if res > tol.residual_abs * max(1.0, np.abs(R).max() if R.size else 1.0):
        raise Inconsistent(f"intertwiner residual {res:.3e} exceeds tolerance")
    return T


def op_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


def min_eig(x: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitize(x))[0])
