"""Brute-force reference values, computed without importing opalg.

Everything here works in column-major vec coordinates with scipy null spaces
and numpy ranks, so it shares no code path with the library.  Running this
file with --freeze rewrites frozen.json; the test suite only reads that file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.linalg import block_diag, null_space

FROZEN = Path(__file__).with_name("frozen.json")
TOL = 1e-9


def unit(n, i, j):
    E = np.zeros((n, n), complex)
    E[i, j] = 1.0
    return E


def units(n):
    return [unit(n, i, j) for i in range(n) for j in range(n)]


def vec(M):
    return np.asarray(M, complex).reshape(-1, order="F")


def rank(mats):
    mats = list(mats)
    if not mats:
        return 0
    return int(np.linalg.matrix_rank(np.array([vec(m) for m in mats]), tol=TOL))


def intersection_dim(X, Y):
    return rank(X) + rank(Y) - rank(list(X) + list(Y))


def kernel(M):
    """Null space with an absolute cutoff, so an all-zero system keeps its full kernel."""
    M = np.asarray(M, complex)
    scale = max(1.0, np.linalg.norm(M, 2)) if M.size else 1.0
    return null_space(M / scale, rcond=TOL) if np.abs(M).max() > TOL * scale else np.eye(M.shape[1])


def commutant(gens, n):
    """Basis of {T : T g = g T} from the kernel of I ⊗ g - g^T ⊗ I."""
    gens = list(gens)
    if not gens:
        return units(n)
    M = np.vstack([np.kron(np.eye(n), g) - np.kron(g.T, np.eye(n)) for g in gens])
    N = kernel(M)
    return [N[:, i].reshape(n, n, order="F") for i in range(N.shape[1])]


def closure_dim(gens, n, unital=False):
    """Dimension of the *-algebra generated, by repeated products until the rank settles."""
    cur = [np.asarray(g, complex) for g in gens] + [np.asarray(g, complex).conj().T for g in gens]
    if unital:
        cur.append(np.eye(n))
    r = rank(cur)
    while True:
        cur = cur + [a @ b for a in cur for b in cur]
        B = np.array([vec(m) for m in cur])
        _, s, Vh = np.linalg.svd(B, full_matrices=False)
        keep = s > TOL * s[0] if s.size and s[0] > 0 else np.zeros(0, bool)
        cur = [v.reshape(n, n, order="F") for v in Vh[: int(keep.sum())].conj()]
        if len(cur) == r:
            return r
        r = len(cur)


def block_base(blocks):
    """B = ⊕ M_n ⊗ I_n and B† = ⊕ I_n ⊗ M_n on ⊕ C^n ⊗ C^n (standard form of a faithful state)."""
    b, bd = [], []
    sizes = [n * n for n in blocks]
    k = sum(sizes)
    off = 0
    for n, s in zip(blocks, sizes):
        for E in units(n):
            for M, out in ((np.kron(E, np.eye(n)), b), (np.kron(np.eye(n), E), bd)):
                Z = np.zeros((k, k), complex)
                Z[off:off + s, off:off + s] = M
                out.append(Z)
        off += s
    return k, b, bd


def constraint_space(src_basis, dst_basis, cod, dom):
    """{T (cod x dom) : T s ∈ span(dst_basis) for every s in src_basis}."""
    D = np.array([vec(d) for d in dst_basis]).T if dst_basis else np.zeros((0, 0))
    q = D.shape[0] if dst_basis else cod * src_basis[0].shape[1]
    P = np.eye(q) - (D @ np.linalg.pinv(D) if dst_basis else 0)
    rows = []
    for s in src_basis:
        # vec(T s) = (s^T ⊗ I) vec(T)
        rows.append(P @ np.kron(np.asarray(s).T, np.eye(cod)))
    N = kernel(np.vstack(rows))
    return N.shape[1]


def sauvageot_dim(A, B, h, k):
    """dim (A' ⊗ I)' ∩ (I ⊗ B')' on C^h ⊗ C^k."""
    gens = [np.kron(a, np.eye(k)) for a in commutant(A, h)] + [np.kron(np.eye(h), b) for b in commutant(B, k)]
    return len(commutant(gens, h * k))


def corpus_fiber_dims():
    """Fiber product dims for amplified instances: dim(X ∩ Y) · dim M_A · dim M_B on K ⊗ C^m ⊗ C^n."""
    bases = {"trivial": [1], "C2": [1, 1], "C2w": [1, 1], "C3": [1, 1, 1], "M2": [2], "M2w": [2],
             "CM2": [1, 2]}
    specs = [("trivial-full", "trivial", 2, "full", 3, "full"),
             ("trivial-diag", "trivial", 2, "full/diag", 3, "full/diag"),
             ("C2-full-b", "C2", 2, "full", 1, "b"),
             ("C2w-bdag-full", "C2w", 2, "bdag/diag", 2, "full"),
             ("C3-bdag-b", "C3", 1, "bdag", 2, "b/full"),
             ("C3-full-full", "C3", 1, "full", 1, "full"),
             ("M2-bdag-b", "M2", 1, "bdag", 1, "b"),
             ("M2-full-b", "M2", 1, "full", 1, "b"),
             ("M2w-bdag-b", "M2w", 2, "bdag/full", 1, "b"),
             ("CM2-bdag-b", "CM2", 1, "bdag", 2, "b/diag"),
             ("CM2-full-full", "CM2", 1, "full", 1, "full")]
    out = {}
    for name, bname, m, ka, n, kb in specs:
        k, b, bd = block_base(bases[bname])
        own = {"full": units(k), "bdag": bd, "b": b, "scalar": [np.eye(k)]}

        def amp(kind, mm):
            return {"full": mm * mm, "diag": mm, "scalar": 1}[kind]
        xa, ya = (ka.split("/") + ["full"])[:2]
        xb, yb = (kb.split("/") + ["full"])[:2]
        out[name] = {"rtp": k * m * n, "fiber": intersection_dim(own[xa], own[xb]) * amp(ya, m) * amp(yb, n)}
    # C(X) * C(Y) over two points: |X ×_Z Y| with X -> (0,0,1), Y -> (0,1,1)
    out["CX-CY"] = {"rtp": 2 * 1 + 1 * 2, "fiber": 2 * 1 + 1 * 2}
    # L(H) * L(K) for bundles (1,2), (2,1): commutants are scalars, so all of L(rtp)
    out["bundle-full"] = {"rtp": 1 * 2 + 2 * 1, "fiber": (1 * 2 + 2 * 1) ** 2}
    return out


def compute() -> dict:
    E11, E12, E22 = unit(2, 0, 0), unit(2, 0, 1), unit(2, 1, 1)
    I2 = np.eye(2)
    D2 = [E11, E22]
    k2, b2, bd2 = block_base([2])
    kc2, bc2, bdc2 = block_base([1, 1])
    vals = {
        "span_three_generators": rank([E11 + E22, E11 - E22, E11]),
        "commutant_diag12": len(commutant([np.diag([1.0, 2.0])], 2)),
        "commutant_matrix_units": len(commutant(units(2), 2)),
        "intersection_D2_IdE12": intersection_dim(D2, [I2, E12]),
        "product_D2_D2": rank([x @ y for x in D2 for y in D2]),
        "generated_E12": closure_dim([E12], 2),
        "generated_diag12_unital": closure_dim([np.diag([1.0, 2.0])], 2, unital=True),
        "gns_C2": {"k": kc2, "b": rank(bc2), "b_dag": rank(bdc2), "commutant_b": len(commutant(bc2, kc2))},
        "gns_M2": {"k": k2, "b": rank(b2), "b_dag": rank(bd2), "commutant_b": len(commutant(b2, k2)),
                   "b_dag_in_commutant": intersection_dim(bd2, commutant(b2, k2))},
        # two copies of (K, D2): block columns [x; 0] and [0; y]
        "direct_sum_D2_alpha": rank([np.vstack([x, 0 * x]) for x in D2] + [np.vstack([0 * x, x]) for x in D2]),
        # T : K -> K ⊕ K with T y = (y ⊕ y) T for y in D2' = D2
        "intertwiners_KK_diag": len(kernel(np.vstack([
            np.kron(np.eye(4), y.T) - np.kron(block_diag(y, y), np.eye(2)) for y in D2])).T),
        # semi morphisms (C^2, D2) -> (C^4, D2 ⊗ C^2) over the GNS base of C^2
        "morphisms_base_to_amplified": constraint_space(
            D2, [np.kron(x, np.eye(2)[:, [j]]) for x in D2 for j in range(2)], 4, 2),
        "bundle_12_alpha": rank([np.eye(3)[:, [0]] @ np.eye(2)[[0]], np.eye(3)[:, [1]] @ np.eye(2)[[1]],
                                 np.eye(3)[:, [2]] @ np.eye(2)[[1]]]),
        "rtp_trivial_2x3": 2 * 3,
        "rtp_bundle_12_21": 1 * 2 + 2 * 1,
        "fiber_trivial_full_2x2": sauvageot_dim(units(2), units(2), 2, 2),
        "fiber_functions_2x3": sauvageot_dim([np.diag(r) for r in np.eye(2)], [np.diag(r) for r in np.eye(3)], 2, 3),
        "fiber_fibered_21_12": 2 * 1 + 1 * 2,
        "fiber_fibered_diagonal_3": 3,
        "unit_D2": intersection_dim(bc2, bdc2),
        "direct_sum_family_12": sum(h * k for h in (1, 2) for k in (1, 2)),
        "corpus": corpus_fiber_dims(),
    }
    return vals


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description="brute-force oracle values")
    p.add_argument("--freeze", action="store_true", help="rewrite frozen.json")
    args = p.parse_args(argv)
    vals = compute()
    text = json.dumps(vals, indent=1, sort_keys=True) + "\n"
    if args.freeze:
        FROZEN.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
