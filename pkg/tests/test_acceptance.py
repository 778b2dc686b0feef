"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
import numpy as np
import pytest

from opalg.base import check_base, check_gns, gns_base
from opalg.commutative import Bundle, DiscreteBase, fiberwise_rtp_iso
from opalg.corpus import (amplified_bimodule, commutative_instance, corpus, morphism_instances, named_base,
                          negative_unit_instance, three_chain)
from opalg.fiber import (ModuleAlgebra, algebra_direct_sum, check_fiber_properties, check_ind,
                         check_slice_cp, check_slice_spatial, fiber_morphism, fiber_product, ind, ind_span,
                         sauvageot_crosscheck, slice_cp, slice_spatial, unitality_check)
from opalg.linalg import Tolerance
from opalg.module import base_module, full_module, morphism_space, trivial_bimodule, unit_bimodule
from opalg.opspace import algebra_commutant, diagonal_algebra, full_algebra
from opalg.rtp import assoc_iso, direct_sum_compat, rtp, triangle_check
from tests.conftest import ACCEPTANCE_LINES, rand_c
from tests.test_rtp import kron_map

TOL = 1e-8
TIGHT = Tolerance(rank_rel=1e-9, residual_abs=1e-10)


def report(n, ok, what):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {what}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, f"criterion {n} failed: {what}"


@pytest.fixture(scope="module")
def fps():
    insts = corpus(seed=0)
    return [(inst, fiber_product(inst.A, inst.B)) for inst in insts]


def test_criterion_01_trivial_base_collapse():
    rng = np.random.default_rng(101)
    worst, dims_ok = 0.0, True
    for _ in range(20):
        h, k = (int(x) for x in rng.integers(1, 5, 2))
        X = rtp(full_module(h), full_module(k))
        dims_ok &= X.dim == h * k
        U = kron_map(X, h, k)
        worst = max(worst, np.abs(U.conj().T @ U - np.eye(h * k)).max(), np.abs(U @ U.conj().T - np.eye(h * k)).max())
    report(1, dims_ok and worst <= TOL, f"20 trivial-base pairs, dim = h*k, unitary residual {worst:.2e}")


def test_criterion_02_discrete_bundles():
    rng = np.random.default_rng(102)
    ok, worst, count = True, 0.0, 0
    for z in range(1, 5):
        for _ in range(5):
            hd = tuple(int(x) for x in rng.integers(1, 4, z))
            kd = tuple(int(x) for x in rng.integers(1, 4, z))
            w = tuple(float(x) for x in rng.uniform(0.25, 4.0, z))
            iso = fiberwise_rtp_iso(DiscreteBase(w), Bundle(hd), Bundle(kd))
            ok &= iso.rtp.dim == sum(a * b for a, b in zip(hd, kd)) and iso.report.passed
            worst = max(worst, iso.report.max_residual)
            count += 1
    report(2, ok and worst <= TOL, f"{count} bundles over |Z| <= 4, dim exact, unitary residual {worst:.2e}")


def test_criterion_03_sauvageot(fps):
    used = [(inst, fp) for inst, fp in fps if inst.nondegenerate]
    worst, ok = 0.0, len(used) >= 10
    bases = {inst.base.k_dim for inst, _ in used}
    for inst, fp in used:
        rep = sauvageot_crosscheck(fp)
        ok &= rep.passed
        worst = max(worst, rep.max_residual)
    ok &= {"C2", "C3", "M2"} <= {n.split("-")[0] for n in (i.name for i, _ in used)}
    report(3, ok and worst <= TOL, f"{len(used)} instances (base dims {sorted(bases)}), residual {worst:.2e}")


def test_criterion_04_ind_is_span(fps):
    worst, ok = 0.0, len(fps) >= 10
    for inst, fp in fps:
        res = ind(fp.rtp.ket2_space, inst.A.algebra)
        r = res.algebra.space.equality_residual(ind_span(fp.rtp.ket2_space, inst.A.algebra))
        ok &= check_ind(res, inst.A.algebra).passed
        worst = max(worst, r)
    report(4, ok and worst <= TOL, f"Ind_I(A) = span(I A I*) on {len(fps)} instances, residual {worst:.2e}")


ITEMS = ("i.", "ii.", "iv.", "v.", "vii.", "viii.")


def test_criterion_05_fiber_properties(fps):
    ok, seen = True, set()
    for inst, fp in fps:
        rep = check_fiber_properties(fp)
        ok &= rep.passed
        seen |= {c.name.split(".")[0] + "." for c in rep.checks if c.status == "pass"}
        ok &= fp.report.data.get("unit_in_fiber") is True
    neg = negative_unit_instance()
    nfp = fiber_product(neg.A, neg.B)
    nrep = check_fiber_properties(nfp)
    neg_ok = (nrep["v.unit"].status == "pass" and nfp.report.data.get("unit_in_fiber") is False
              and not nfp.space.contains(np.eye(nfp.rtp.dim)))
    ok &= neg_ok and set(ITEMS) <= seen
    report(5, ok, f"items {' '.join(i.rstrip('.') for i in ITEMS)} on {len(fps)} instances; "
                  f"negative item-v instance excludes Id: {neg_ok}")


def test_criterion_06_unitality():
    cases = [ModuleAlgebra(unit_bimodule(named_base("C2")), diagonal_algebra(2)),
             ModuleAlgebra(trivial_bimodule(3), full_algebra(3))]
    for inst in corpus(seed=0):
        if inst.base.b.equals(inst.base.b_dag) or inst.base.k_dim == 1:
            cases.append(inst.A)
    cases.append(commutative_instance().A)
    ok, worst, checked = True, 0.0, 0
    for A in cases:
        rep = unitality_check(A)
        ok &= rep.passed and rep["A_unit"].status == "pass" and rep["B_unit"].status == "pass"
        worst = max(worst, rep["A_unit"].max_residual, rep["B_unit"].max_residual)
        checked += 1
    report(6, ok and worst <= TOL, f"A_unit and B_unit on {checked} unital instances, residual {worst:.2e}")


def test_criterion_07_coherence():
    ok, worst, names = True, 0.0, ("unitary", "left_legs", "right_legs")
    chains = ("M2w", "CM2", "C2w")
    for base_name in chains:
        H, K, L = three_chain(0, base_name)
        a = assoc_iso(H, K, L)
        tri = triangle_check(H, K)
        ok &= all(a.report[n].status == "pass" for n in names) and tri.passed
        worst = max(worst, a.report.max_residual, tri.max_residual)
    report(7, ok and worst <= TOL, f"3-chains over {', '.join(chains)}: assoc unitary, legs, triangle, "
                                   f"residual {worst:.2e}")


def test_criterion_08_gns():
    ok, worst, dims = True, 0.0, []
    for blocks, w in (([1, 1], [0.5, 0.5]), ([2], [1.0])):
        base, g = gns_base(blocks, w, TIGHT)
        comm = algebra_commutant(base.b)
        gr = check_gns(g, TIGHT)
        ok &= check_base(base).passed and comm.dim == base.b_dag.dim and gr.passed
        ok &= base.b_dag.space.equality_residual(comm.space) <= TOL
        worst = max(worst, gr.max_residual)
        dims.append(comm.dim)
    report(8, ok and worst <= 1e-10, f"GNS bases of C^2 and M_2: check_base, dim B' = dim B† = {dims}, "
                                     f"J identities residual {worst:.2e}")


def test_criterion_09_functoriality():
    ok, worst, names = True, 0.0, []
    for name, phi, psi in morphism_instances():
        fm = fiber_morphism(phi, psi)
        ok &= fm.report["orders_agree"].status == "pass" and fm.report["image"].status == "pass"
        worst = max(worst, fm.report["orders_agree"].max_residual, fm.report["image"].max_residual)
        names.append(name)
    ok &= len(names) == 5
    report(9, ok and worst <= TOL, f"{len(names)} morphism pairs ({', '.join(names)}), residual {worst:.2e}")


def test_criterion_10_slice_maps(fps):
    rng = np.random.default_rng(110)
    ok, worst_cp, worst_sp = True, 0.0, 0.0
    for inst, fp in fps[:11]:
        Lm = base_module(inst.A.right.base)
        M = morphism_space(Lm, inst.A.right).space
        kraus = [M.element(rand_c(rng, M.dim)) for _ in range(2)]
        rep = check_slice_cp(slice_cp(fp.rtp, kraus), fp.space.basis, n_random=20)
        ok &= rep["positive"].status == "pass"
        worst_cp = max(worst_cp, rep["positive"].max_residual)
        H, K = inst.A.right, inst.B.left
        S = list(H.alpha.basis)
        sl = slice_spatial(fp.rtp, rtp(base_module(H.base), K), S, S)
        C = ModuleAlgebra(unit_bimodule(H.base), full_algebra(H.k_dim))
        sp = check_slice_spatial(sl, fp, C)
        ok &= sp["slice_identity"].status == "pass"
        worst_sp = max(worst_sp, sp["slice_identity"].max_residual)
    ok &= worst_cp <= TOL and worst_sp <= TOL
    report(10, ok, f"slice_cp min eigenvalue defect {worst_cp:.2e}, slice_spatial identity {worst_sp:.2e}")


def test_criterion_11_direct_sums(fps):
    Hs = [trivial_bimodule(1), trivial_bimodule(2)]
    mod = direct_sum_compat(Hs, Hs, TIGHT)
    amp = [amplified_bimodule(named_base("CM2"), 1)]
    mod2 = direct_sum_compat(amp, amp, TIGHT)
    As = [ModuleAlgebra(trivial_bimodule(n), diagonal_algebra(n)) for n in (1, 2)]
    alg = algebra_direct_sum(As, As, TIGHT)
    alg2 = algebra_direct_sum([fps[6][0].A], [fps[6][0].B], TIGHT)
    reps = (mod.report, mod2.report, alg.report, alg2.report)
    worst = max(r.max_residual for r in reps)
    ok = all(r.passed for r in reps) and worst <= 1e-10
    report(11, ok, f"module and algebra direct-sum round trips, residual {worst:.2e}")


def test_criterion_12_bicommutant(fps):
    algs = []
    for inst, _ in fps:
        for A in (inst.A.algebra, inst.B.algebra, inst.base.b, inst.base.b_dag):
            if A.n <= 16 and A.is_unital():
                algs.append(A)
    worst = max(algebra_commutant(algebra_commutant(A)).space.equality_residual(A.space) for A in algs)
    report(12, worst <= TOL, f"A'' = A on {len(algs)} unital corpus algebras, residual {worst:.2e}")
