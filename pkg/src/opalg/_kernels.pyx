# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops: modified Gram-Schmidt and the relative tensor Gram assembly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dznrm2, zgemm, zgemv

cnp.import_array()

ctypedef double complex cplx


def mgs_rows(cplx[:, ::1] V, double drop_tol):
    """Orthonormalize the rows of V in order, two projection passes per row.

    Returns (Q, kept) with Q holding the accepted orthonormal rows and kept
    the indices of the input rows that contributed a new direction.  Each
    pass projects against all accepted rows at once through BLAS zgemv.
    """
    cdef int m = <int>V.shape[0], n = <int>V.shape[1]
    cdef int i, t, k = 0, one = 1, rep
    cdef double nrm
    cdef cplx z_one = 1.0, z_zero = 0.0, z_mone = -1.0
    cdef char *trans_c = b"C"
    cdef char *trans_n = b"N"
    Q_arr = np.zeros((min(m, n), n), dtype=np.complex128)
    cdef cplx[:, ::1] Q = Q_arr
    w_arr = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] w = w_arr
    c_arr = np.empty(max(min(m, n), 1), dtype=np.complex128)
    cdef cplx[::1] c = c_arr
    kept = []
    for i in range(m):
        if k == n:
            break
        for t in range(n):
            w[t] = V[i, t]
        if k:
            for rep in range(2):
                # Q is k x n row-major, i.e. an n x k column-major matrix A
                zgemv(trans_c, &n, &k, &z_one, &Q[0, 0], &n, &w[0], &one, &z_zero, &c[0], &one)
                zgemv(trans_n, &n, &k, &z_mone, &Q[0, 0], &n, &c[0], &one, &z_one, &w[0], &one)
        nrm = dznrm2(&n, &w[0], &one)
        if nrm <= drop_tol:
            continue
        for t in range(n):
            Q[k, t] = w[t] / nrm
        kept.append(i)
        k += 1
    return Q_arr[:k].copy(), kept


def rtp_gram(cplx[:, :, :, ::1] B, cplx[:, :, :, ::1] C):
    """G[(a,k,b),(a2,l,b2)] = sum_m B[a,a2,k,m] * C[b,b2,m,l].

    All block products come from one zgemm of (p p n x n) by (n x q q n),
    followed by a scatter into the generator order.
    """
    cdef int p = <int>B.shape[0], n = <int>B.shape[2], q = <int>C.shape[0]
    cdef int M = p * p * n, N = q * q * n
    cdef Py_ssize_t a, a2, b, b2, k, l, r, s, row, col
    cdef cplx z_one = 1.0, z_zero = 0.0
    cdef char *tn = b"N"
    G_arr = np.zeros((p * n * q, p * n * q), dtype=np.complex128)
    if M == 0 or N == 0:
        return G_arr
    cdef cplx[:, ::1] G = G_arr
    # Cm[m, (b, b2, l)] = C[b, b2, m, l]
    cdef cplx[:, ::1] Cm = np.ascontiguousarray(np.asarray(C).transpose(2, 0, 1, 3).reshape(n, N))
    cdef cplx[:, ::1] Bm = np.ascontiguousarray(np.asarray(B).reshape(M, n))
    P_arr = np.empty((M, N), dtype=np.complex128)
    cdef cplx[:, ::1] P = P_arr
    # row-major P = Bm Cm is column-major P^T = Cm^T Bm^T
    zgemm(tn, tn, &N, &M, &n, &z_one, &Cm[0, 0], &N, &Bm[0, 0], &n, &z_zero, &P[0, 0], &N)
    for a in range(p):
        for a2 in range(p):
            for k in range(n):
                row = (a * p + a2) * n + k
                for b in range(q):
                    r = (a * n + k) * q + b
                    for b2 in range(q):
                        col = (b * q + b2) * n
                        for l in range(n):
                            s = (a2 * n + l) * q + b2
                            G[r, s] = P[row, col + l]
    return G_arr
