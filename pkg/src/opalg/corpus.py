"""Shared instances: bases, amplified bimodules and module algebras used by the
test suite, the benchmarks and the CLI suite command.

Every instance is built from block algebras, GNS bases and discrete bases, and
then conjugated by seeded random unitaries so that no computation can rely on
coordinates lining up with the blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import CStarBase, gns_base, trivial_base
from .commutative import DiscreteBase, FiberedSpace, fibered_module, function_algebra
from .fiber import ModuleAlgebra
from .linalg import DEFAULT_TOL, Tolerance
from .module import CStarBimodule, CStarModule
from .opspace import (ConcreteAlgebra, OperatorSpace, algebra_from_basis, algebra_from_space,
                      diagonal_algebra, full_algebra, scalar_algebra, span)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _amplify(space: OperatorSpace, m: int, V: np.ndarray) -> OperatorSpace:
    k = space.cod_dim
    mats = [V @ np.kron(x, np.eye(m)[:, [j]]) for x in space.basis for j in range(m)]
    return span(mats, (k * m, space.dom_dim))


def amplified_bimodule(base: CStarBase, m: int, V: np.ndarray | None = None) -> CStarBimodule:
    """K ⊗ C^m with legs V(B† ⊗ C^m) over the opposite base and V(B ⊗ C^m) over the base."""
    V = np.eye(base.k_dim * m) if V is None else V
    return CStarBimodule(base.opposite, base, base.k_dim * m,
                         _amplify(base.b_dag.space, m, V), _amplify(base.b.space, m, V))


def amplified_module(base: CStarBase, m: int, V: np.ndarray | None = None) -> CStarModule:
    """K ⊗ C^m with leg V(B ⊗ C^m) over the base."""
    V = np.eye(base.k_dim * m) if V is None else V
    return CStarModule(base, base.k_dim * m, _amplify(base.b.space, m, V))


def tensor_algebra(A: ConcreteAlgebra, M: ConcreteAlgebra, V: np.ndarray | None = None) -> ConcreteAlgebra:
    """V (A ⊗ M) V*."""
    n = A.n * M.n
    V = np.eye(n) if V is None else V
    return algebra_from_space(span([V @ np.kron(a, b) @ V.conj().T for a in A.basis for b in M.basis], (n, n)))


@dataclass
class Instance:
    """A pair of module algebras A (on a bimodule over (a, b)) and B (over (b†, c))."""

    name: str
    base: CStarBase
    A: ModuleAlgebra
    B: ModuleAlgebra
    tags: tuple = field(default_factory=tuple)

    @property
    def nondegenerate(self) -> bool:
        return self.A.algebra.nondegenerate and self.B.algebra.nondegenerate


def _factor(base, m, kind, rng):
    """A module algebra on an amplified bimodule.

    kind is 'x' or 'x/y' with x naming the algebra on K and y the one on C^m.
    The bimodule serves as a left factor through its beta leg (over b) and as a
    right factor through its alpha leg (over b†).
    """
    n = base.k_dim * m
    V = random_unitary(n, rng)
    H = amplified_bimodule(base, m, V)
    k = base.k_dim
    own = {"full": full_algebra(k), "bdag": base.b_dag, "b": base.b, "scalar": scalar_algebra(k)}
    kk, mm = kind.split("/") if "/" in kind else (kind, "full")
    amp = {"full": full_algebra(m), "diag": diagonal_algebra(m), "scalar": scalar_algebra(m)}[mm]
    return ModuleAlgebra(H, tensor_algebra(own[kk], amp, V))


GNS_BASES = {
    "C2": ([1, 1], [0.5, 0.5]),
    "C2w": ([1, 1], [0.3, 0.7]),
    "C3": ([1, 1, 1], [0.2, 0.3, 0.5]),
    "M2": ([2], [1.0]),
    "M2w": ([2], [[0.7, 0.3]]),
    "CM2": ([1, 2], [0.3, [0.5, 0.2]]),
}


def named_base(name: str) -> CStarBase:
    if name == "trivial":
        return trivial_base()
    blocks, w = GNS_BASES[name]
    return gns_base(blocks, w)[0]


# (name, base, m for A, kind of A, n for B, kind of B)
_SPECS = [
    ("trivial-full", "trivial", 2, "full", 3, "full"),
    ("trivial-diag", "trivial", 2, "full/diag", 3, "full/diag"),
    ("C2-full-b", "C2", 2, "full", 1, "b"),
    ("C2w-bdag-full", "C2w", 2, "bdag/diag", 2, "full"),
    ("C3-bdag-b", "C3", 1, "bdag", 2, "b/full"),
    ("C3-full-full", "C3", 1, "full", 1, "full"),
    ("M2-bdag-b", "M2", 1, "bdag", 1, "b"),
    ("M2-full-b", "M2", 1, "full", 1, "b"),
    ("M2w-bdag-b", "M2w", 2, "bdag/full", 1, "b"),
    ("CM2-bdag-b", "CM2", 1, "bdag", 2, "b/diag"),
    ("CM2-full-full", "CM2", 1, "full", 1, "full"),
]


def corpus(seed: int = 0, tol: Tolerance = DEFAULT_TOL) -> list:
    """Nondegenerate instances (A, B) over trivial, GNS and discrete bases."""
    rng = np.random.default_rng(seed)
    out = []
    for name, bname, m, ka, n, kb in _SPECS:
        base = named_base(bname)
        A = _factor(base, m, ka, rng)
        B = _factor(base, n, kb, rng)
        out.append(Instance(name, base, A, B, ("gns",) if bname in GNS_BASES else ("trivial",)))
    out.append(commutative_instance())
    out.append(bundle_full_instance(rng))
    return out


def commutative_instance(name: str = "CX-CY") -> Instance:
    """C(X) and C(Y) for finite X, Y over a two-point base."""
    db = DiscreteBase((1.0, 2.0))
    fx = FiberedSpace((0, 0, 1), (1.0, 0.5, 2.0))
    fy = FiberedSpace((0, 1, 1), (3.0, 1.0, 0.25))
    HX, HY = fibered_module(fx, db), fibered_module(fy, db, opposite=True)
    return Instance(name, db.base, ModuleAlgebra(HX, function_algebra(fx)),
                    ModuleAlgebra(HY, function_algebra(fy)), ("commutative",))


def bundle_full_instance(rng: np.random.Generator, name: str = "bundle-full") -> Instance:
    """L(H) and L(K) for Hilbert bundles of dims (1,2) and (2,1) over two points."""
    from .commutative import Bundle, bundle_module
    db = DiscreteBase((1.0, 3.0))
    H = bundle_module(db, Bundle((1, 2)))
    K = bundle_module(db, Bundle((2, 1)), opposite=True)
    return Instance(name, db.base, ModuleAlgebra(H, full_algebra(H.h_dim)),
                    ModuleAlgebra(K, full_algebra(K.h_dim)), ("commutative",))


def negative_unit_instance() -> Instance:
    """A = C e_11 on the unit bimodule over C^2: rho_beta(B†) is not inside A."""
    from .module import unit_bimodule
    base = named_base("C2")
    U = unit_bimodule(base)
    e11 = np.diag([1.0, 0.0]).astype(complex)
    return Instance("C2-e11", base, ModuleAlgebra(U, algebra_from_basis([e11], 2)),
                    ModuleAlgebra(U, full_algebra(2)), ("degenerate",))


def degenerate_ind_instance() -> Instance:
    """A = B† ⊗ e_11 on K ⊗ C^2 over M2: a degenerate b-algebra."""
    base = named_base("M2")
    H = amplified_bimodule(base, 2)
    e11 = algebra_from_basis([np.diag([1.0, 0.0])], 2)
    A = ModuleAlgebra(H, tensor_algebra(base.b_dag, e11))
    K = amplified_bimodule(base, 1)
    return Instance("M2-degenerate", base, A, ModuleAlgebra(K, base.b), ("degenerate",))


def three_chain(seed: int = 0, base_name: str = "M2w") -> tuple:
    """Amplified bimodules (H, K, L) over one base, so that H ⊗ K ⊗ L is defined."""
    rng = np.random.default_rng(seed)
    base = named_base(base_name)
    return tuple(amplified_bimodule(base, m, random_unitary(base.k_dim * m, rng)) for m in (2, 1, 2))


def morphism_instances(seed: int = 0, base_name: str = "M2w") -> list:
    """(name, phi, psi) pairs of module-algebra morphisms for functoriality checks."""
    from .commutative import FiberedSpace as FS
    from .fiber import conjugation_morphism, identity_morphism, morphism_from_map
    from .module import unit_bimodule
    rng = np.random.default_rng(seed)
    base = named_base(base_name)
    k = base.k_dim
    U = unit_bimodule(base)
    bdag, b = ModuleAlgebra(U, base.b_dag), ModuleAlgebra(U, base.b)
    out = []
    out.append(("identity", identity_morphism(_factor(base, 2, "bdag/full", rng)),
                identity_morphism(_factor(base, 1, "b", rng))))
    out.append(("inclusion", morphism_from_map(bdag, ModuleAlgebra(U, full_algebra(k)), lambda a: a),
                identity_morphism(b)))
    amp = ModuleAlgebra(amplified_bimodule(base, 2), tensor_algebra(base.b_dag, full_algebra(2)))
    out.append(("amplification", morphism_from_map(bdag, amp, lambda a: np.kron(a, np.eye(2))),
                identity_morphism(b)))
    V = [random_unitary(2 * k, rng) for _ in range(4)]
    A, C = (ModuleAlgebra(amplified_bimodule(base, 2, v), tensor_algebra(base.b_dag, full_algebra(2), v))
            for v in V[:2])
    B, D = (ModuleAlgebra(amplified_bimodule(base, 2, v), tensor_algebra(base.b, full_algebra(2), v))
            for v in V[2:])
    out.append(("conjugation", conjugation_morphism(A, C, V[1] @ V[0].conj().T),
                conjugation_morphism(B, D, V[3] @ V[2].conj().T)))
    # C(X) -> C(X) by swapping two points of one fiber
    db = DiscreteBase((1.0, 2.0))
    fx, fy = FS((0, 0, 1), (1.0, 1.0, 2.0)), FS((0, 1, 1), (3.0, 1.0, 0.25))
    CX = ModuleAlgebra(fibered_module(fx, db), function_algebra(fx))
    CY = ModuleAlgebra(fibered_module(fy, db, opposite=True), function_algebra(fy))
    out.append(("commutative", conjugation_morphism(CX, CX, np.eye(3)[[1, 0, 2]]), identity_morphism(CY)))
    return out

