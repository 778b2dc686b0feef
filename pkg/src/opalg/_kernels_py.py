"""Numpy fallbacks for the compiled kernels (same signatures and results)."""

import numpy as np


def mgs_rows(V, drop_tol):
    V = np.ascontiguousarray(V, dtype=np.complex128)
    m, n = V.shape
    Q = np.zeros((min(m, n), n), dtype=np.complex128)
    kept = []
    k = 0
    for i in range(m):
        if k == n:
            break
        w = V[i].copy()
        if k:
            # two block projections; equivalent to the row-by-row loop up to rounding
            for _ in range(2):
                w -= (Q[:k].conj() @ w) @ Q[:k]
        nrm = np.linalg.norm(w)
        if nrm <= drop_tol:
            continue
        Q[k] = w / nrm
        kept.append(i)
        k += 1
    return Q[:k].copy(), kept


def rtp_gram(B, C):
    p, _, n, _ = B.shape
    q = C.shape[0]
    G = np.einsum("xykm,uvml->xkuylv", B, C, optimize=True)
    return np.ascontiguousarray(G.reshape(p * n * q, p * n * q))
