"""Command line interface: read a JSON instance, run verifications, report.

Instance files are JSON objects with a version tag and named blocks:

    matrices   name -> {"rows": r, "cols": c, "data": [[re, im], ...]}  (row-major)
    spaces     name -> [matrix names]                                   (their span)
    bases      name -> {"kind": "trivial" | "gns" | "discrete" | "explicit" | "opposite", ...}
    modules    name -> {"kind": "explicit" | "bundle" | "fibered" | "amplified" | "base", ...}
    bimodules  name -> {"kind": "explicit" | "amplified" | "unit", ...}
    algebras   name -> {"kind": "generated" | "span" | "full" | "functions" | "base_b" | "base_b_dag", ...}
    tolerances {"rank_rel": x, "residual_abs": y}

Exit status: 0 when every check passes, 2 on a verification failure, 3 on an
input error (parse, reference or dimension problems).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .base import CStarBase, check_base, check_gns, gns, gns_base, trivial_base
from .commutative import (Bundle, DiscreteBase, FiberedSpace, bundle_module, fibered_module,
                          fiberwise_rtp_iso, fp_commutative_check)
from .errors import OpAlgError, ShapeMismatch
from .fiber import (ModuleAlgebra, b_algebra_residual, check_fiber_properties, check_ind, fiber_product,
                    ind, sauvageot_crosscheck, unitality_check)
from .linalg import DEFAULT_TOL, Tolerance, commutant
from .module import CStarBimodule, CStarModule, base_module, check_bimodule, check_module, unit_bimodule
from .opspace import (OperatorSpace, algebra_commutant, algebra_from_space, closure_residuals,
                      diagonal_algebra, full_algebra, generated_algebra, span)
from .report import Report
from .rtp import rtp

VERSION_TAG = "opalg-instance/1"
EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 2, 3


class InstanceError(Exception):
    """Malformed instance: parse, reference or dimension error with a location."""


# ---------------------------------------------------------------- parsing


def parse_matrix(obj, where: str) -> np.ndarray:
    try:
        r, c, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"{where}: matrix needs rows, cols and data ({exc})") from None
    if len(data) != r * c:
        raise InstanceError(f"{where}: expected {r * c} entries, got {len(data)}")
    out = np.zeros(r * c, dtype=np.complex128)
    for i, z in enumerate(data):
        if not (isinstance(z, list) and len(z) == 2 and all(isinstance(t, (int, float)) for t in z)):
            raise InstanceError(f"{where}: entry {i} is not an [re, im] pair of numbers")
        out[i] = complex(float(z[0]), float(z[1]))
    return out.reshape(r, c)


def encode_matrix(M) -> dict:
    M = np.asarray(M, dtype=np.complex128)
    return {"rows": M.shape[0], "cols": M.shape[1],
            "data": [[_clean(z.real), _clean(z.imag)] for z in M.reshape(-1)]}


def _clean(x: float) -> float:
    x = float(x)
    return 0.0 if abs(x) < 1e-12 else float(f"{x:.12g}")


@dataclass
class Instance:
    """Resolved instance: every named block materialized lazily and cached."""

    raw: dict
    path: str = "<instance>"
    tol: Tolerance = DEFAULT_TOL
    _cache: dict = field(default_factory=dict)

    def block(self, kind: str) -> dict:
        b = self.raw.get(kind, {})
        if not isinstance(b, dict):
            raise InstanceError(f"{self.path}: '{kind}' must be an object")
        return b

    def _entry(self, kind: str, name: str) -> dict:
        b = self.block(kind)
        if name not in b:
            raise InstanceError(f"{self.path}: unknown {kind[:-1]} '{name}'")
        return b[name]

    def _get(self, kind: str, name: str, build):
        key = (kind, name)
        if key not in self._cache:
            try:
                self._cache[key] = build(self._entry(kind, name), f"{kind}.{name}")
            except ShapeMismatch as exc:
                raise InstanceError(f"{self.path}: {kind}.{name}: {exc}") from None
        return self._cache[key]

    def matrix(self, name: str) -> np.ndarray:
        return self._get("matrices", name, parse_matrix)

    def matrices(self, names, where: str) -> list:
        if not isinstance(names, list):
            raise InstanceError(f"{where}: expected a list of matrix names")
        return [self.matrix(n) for n in names]

    def space(self, name: str) -> OperatorSpace:
        def build(e, where):
            mats = self.matrices(e, where)
            if not mats:
                raise InstanceError(f"{where}: empty spaces need explicit shapes")
            shape = mats[0].shape
            if any(m.shape != shape for m in mats):
                raise InstanceError(f"{where}: matrices of different shapes")
            return span(mats, shape, self.tol)
        return self._get("spaces", name, build)

    # bases ------------------------------------------------------------
    def base(self, name: str):
        return self._get("bases", name, self._build_base)

    def _build_base(self, e, where):
        kind = e.get("kind")
        if kind == "trivial":
            return trivial_base()
        if kind == "gns":
            if "algebra" in e:
                A = self.algebra(e["algebra"])
                return gns(A.algebra, self.matrix(e["density"]), self.tol).base
            return gns_base(e["blocks"], [_weight(self, w) for w in e["weights"]], self.tol)[0]
        if kind == "discrete":
            return DiscreteBase(tuple(e["weights"]))
        if kind == "explicit":
            b, bd = self.space(e["b"]), self.space(e["b_dag"])
            return CStarBase(b.cod_dim, algebra_from_space(b, self.tol), algebra_from_space(bd, self.tol))
        if kind == "opposite":
            return _cstar(self.base(e["of"])).opposite
        raise InstanceError(f"{where}: unknown base kind {kind!r}")

    def cstar_base(self, name: str) -> CStarBase:
        return _cstar(self.base(name))

    def gns_data(self, name: str):
        e = self._entry("bases", name)
        if e.get("kind") != "gns":
            raise InstanceError(f"{self.path}: base '{name}' is not a GNS base")
        if "algebra" in e:
            return gns(self.algebra(e["algebra"]).algebra, self.matrix(e["density"]), self.tol)
        return gns_base(e["blocks"], [_weight(self, w) for w in e["weights"]], self.tol)[1]

    # modules ----------------------------------------------------------
    def module(self, name: str) -> CStarModule:
        return self._get("modules", name, self._build_module)

    def _discrete(self, e, where) -> DiscreteBase:
        d = self.base(e["base"])
        if not isinstance(d, DiscreteBase):
            raise InstanceError(f"{where}: base '{e['base']}' must be discrete")
        return d

    def _build_module(self, e, where):
        kind = e.get("kind", "explicit")
        opp = bool(e.get("opposite", False))
        if kind == "explicit":
            base = self.cstar_base(e["base"])
            base = base.opposite if opp else base
            leg = self.space(e["leg"])
            if leg.dom_dim != base.k_dim:
                raise InstanceError(f"{where}: leg maps from C^{leg.dom_dim}, base has k = {base.k_dim}")
            return CStarModule(base, leg.cod_dim, leg)
        if kind == "bundle":
            return bundle_module(self._discrete(e, where), Bundle(tuple(e["fiber_dims"])), opposite=opp)
        if kind == "fibered":
            return fibered_module(self.fibered(e), self._discrete(e, where), opposite=opp)
        if kind == "amplified":
            from .corpus import amplified_module
            base = self.cstar_base(e["base"])
            return amplified_module(base.opposite if opp else base, int(e["m"]))
        if kind == "base":
            base = self.cstar_base(e["base"])
            return base_module(base.opposite if opp else base)
        raise InstanceError(f"{where}: unknown module kind {kind!r}")

    def fibered(self, e) -> FiberedSpace:
        return FiberedSpace(tuple(e["proj"]), tuple(e["weights"]))

    def bimodule(self, name: str) -> CStarBimodule:
        return self._get("bimodules", name, self._build_bimodule)

    def _build_bimodule(self, e, where):
        kind = e.get("kind", "explicit")
        if kind == "unit":
            return unit_bimodule(self.cstar_base(e["base"]))
        if kind == "amplified":
            from .corpus import amplified_bimodule
            return amplified_bimodule(self.cstar_base(e["base"]), int(e["m"]))
        if kind == "explicit":
            ab, bb = self.cstar_base(e["alpha_base"]), self.cstar_base(e["beta_base"])
            a, b = self.space(e["alpha"]), self.space(e["beta"])
            if a.cod_dim != b.cod_dim:
                raise InstanceError(f"{where}: legs act into spaces of different dimension")
            return CStarBimodule(ab, bb, a.cod_dim, a, b)
        raise InstanceError(f"{where}: unknown bimodule kind {kind!r}")

    def carrier(self, name: str):
        if name in self.block("modules"):
            return self.module(name)
        if name in self.block("bimodules"):
            return self.bimodule(name)
        raise InstanceError(f"{self.path}: unknown module or bimodule '{name}'")

    # algebras ---------------------------------------------------------
    def algebra(self, name: str) -> ModuleAlgebra:
        return self._get("algebras", name, self._build_algebra)

    def _build_algebra(self, e, where):
        on = self.carrier(e["on"]) if "on" in e else None
        n = on.h_dim if on is not None else int(e.get("n", 0))
        kind = e.get("kind", "generated")
        if kind == "generated":
            mats = self.matrices(e["generators"], where)
            A = generated_algebra(mats, bool(e.get("unital", False)), self.tol, n=n)
        elif kind == "span":
            S = self.space(e["space"])
            adj, prod = closure_residuals(S)
            if max(adj, prod) > self.tol.residual_abs:
                raise InstanceError(f"{where}: span is not a *-algebra (residuals {adj:.2e}, {prod:.2e})")
            A = algebra_from_space(S, self.tol)
        elif kind == "full":
            A = full_algebra(n)
        elif kind == "functions":
            A = diagonal_algebra(n)
        elif kind in ("base_b", "base_b_dag"):
            base = self.cstar_base(e["base"])
            A = base.b if kind == "base_b" else base.b_dag
        else:
            raise InstanceError(f"{where}: unknown algebra kind {kind!r}")
        if n and A.n != n:
            raise InstanceError(f"{where}: algebra acts on C^{A.n}, carrier has dimension {n}")
        if on is None:
            return ModuleAlgebra(_bare_module(A.n), A)
        return ModuleAlgebra(on, A)


def _cstar(b) -> CStarBase:
    return b.base if isinstance(b, DiscreteBase) else b


def _bare_module(n: int) -> CStarModule:
    from .module import full_module
    return full_module(n)


def _weight(inst: Instance, w):
    return inst.matrix(w) if isinstance(w, str) else w


def load_instance(path: str, tol: Tolerance | None = None) -> Instance:
    """Read an instance file; a bare name such as 'trivial' selects a shipped instance."""
    if not Path(path).exists() and "/" not in path and not path.endswith(".json"):
        shipped = Path(shipped_instance(path))
        if shipped.exists():
            path = str(shipped)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return instance_from_dict(raw, path, tol)


def instance_from_dict(raw: dict, path: str = "<instance>", tol: Tolerance | None = None) -> Instance:
    if not isinstance(raw, dict):
        raise InstanceError(f"{path}: top level must be an object")
    if raw.get("version") != VERSION_TAG:
        raise InstanceError(f"{path}: version must be {VERSION_TAG!r}, got {raw.get('version')!r}")
    t = raw.get("tolerances", {})
    base_tol = tol or Tolerance(float(t.get("rank_rel", DEFAULT_TOL.rank_rel)),
                                float(t.get("residual_abs", DEFAULT_TOL.residual_abs)))
    return Instance(raw, path, base_tol)


# ---------------------------------------------------------------- commands


@dataclass
class Outcome:
    report: Report
    dumps: dict = field(default_factory=dict)


def _dump_space(S) -> list:
    basis = S.basis if hasattr(S, "basis") else S
    return [encode_matrix(x) for x in basis]


def _algebra_check(rep: Report, name: str, A: ModuleAlgebra, tol: Tolerance):
    adj, prod = closure_residuals(A.algebra.space)
    rep.add(f"{name}.star_closed", "A* ⊆ A", adj, tol.residual_abs, {"dim": A.algebra.dim, "n": A.algebra.n})
    rep.add(f"{name}.product_closed", "A A ⊆ A", prod, tol.residual_abs)
    for leg, mod in (("right", A.right), ("left", A.left)):
        if mod.k_dim > 1 or mod.base.b.dim > 1:
            rep.info(f"{name}.{leg}_module_algebra", "rho(B†) A ⊆ A", b_algebra_residual(A.algebra, mod, tol))


def cmd_check(inst: Instance, args) -> Outcome:
    tol = inst.tol
    rep = Report("instance axioms")
    for name in sorted(inst.block("bases")):
        b = inst.base(name)
        if isinstance(b, DiscreteBase):
            rep.extend(check_base(b.base, tol), f"base.{name}.")
        else:
            rep.extend(check_base(b, tol), f"base.{name}.")
    for name in sorted(inst.block("modules")):
        rep.extend(check_module(inst.module(name), tol), f"module.{name}.")
    for name in sorted(inst.block("bimodules")):
        rep.extend(check_bimodule(inst.bimodule(name), tol), f"bimodule.{name}.")
    for name in sorted(inst.block("algebras")):
        _algebra_check(rep, f"algebra.{name}", inst.algebra(name), tol)
    return Outcome(rep)


def _right_leg(inst: Instance, name: str) -> CStarModule:
    c = inst.carrier(name)
    return c.beta_module if isinstance(c, CStarBimodule) else c


def _left_leg(inst: Instance, name: str) -> CStarModule:
    c = inst.carrier(name)
    return c.alpha_module if isinstance(c, CStarBimodule) else c


def cmd_rtp(inst: Instance, args) -> Outcome:
    H, K = _right_leg(inst, args.left), _left_leg(inst, args.right)
    X = rtp(H, K, inst.tol)
    rep = Report(f"relative tensor product {args.left} ⊗ {args.right}")
    rep.extend(X.check())
    rep.data.update({"dim": X.dim, "generators": X.completion.input_count, "h": H.h_dim, "k": K.h_dim})
    dumps = {}
    if args.dump_bases:
        dumps["synthesis"] = [encode_matrix(X.W)]
    return Outcome(rep, dumps)


def cmd_fiber(inst: Instance, args) -> Outcome:
    A, B = inst.algebra(args.left), inst.algebra(args.right)
    fp = fiber_product(A, B, inst.tol)
    rep = Report(f"fiber product {args.left} * {args.right}")
    rep.extend(fp.report)
    rep.data.update({"dim": fp.dim, "rtp_dim": fp.rtp.dim})
    if A.algebra.nondegenerate and B.algebra.nondegenerate:
        rep.extend(sauvageot_crosscheck(fp, inst.tol), "commutant.")
    else:
        rep.skip("commutant", "A*B = (A' ⊗ Id)' ∩ (Id ⊗ B')'", "A or B degenerate")
    return Outcome(rep, {"fiber_product": _dump_space(fp.space)} if args.dump_bases else {})


def cmd_ind(inst: Instance, args) -> Outcome:
    I = inst.space(args.space)
    A = inst.algebra(args.algebra).algebra
    res = ind(I, A, inst.tol)
    rep = Report(f"induced algebra Ind_{args.space}({args.algebra})")
    rep.extend(res.report)
    rep.extend(check_ind(res, A, inst.tol), "props.")
    rep.data["dim"] = res.algebra.dim
    return Outcome(rep, {"ind": _dump_space(res.algebra.space)} if args.dump_bases else {})


def cmd_commutant(inst: Instance, args) -> Outcome:
    S = inst.space(args.space)
    if S.cod_dim != S.dom_dim:
        raise InstanceError(f"{inst.path}: space '{args.space}' is not square")
    C = OperatorSpace(S.cod_dim, S.cod_dim, commutant(S.basis, inst.tol, n=S.cod_dim))
    rep = Report(f"commutant of {args.space}")
    gens = S.basis
    r = max((np.abs(c @ g - g @ c).max() for c in C.basis for g in gens), default=0.0)
    rep.add("commutes", "c s = s c", r, inst.tol.residual_abs, {"dim": C.dim, "n": S.cod_dim})
    rep.data["dim"] = C.dim
    return Outcome(rep, {"commutant": _dump_space(C)})


def cmd_gns(inst: Instance, args) -> Outcome:
    g = inst.gns_data(args.base)
    rep = Report(f"GNS base {args.base}")
    rep.extend(check_gns(g, inst.tol), "gns.")
    b = g.base
    rep.extend(check_base(b, inst.tol), "base.")
    bc = algebra_commutant(b.b, inst.tol)
    rep.add("b_dag_is_commutant", "B† = B'", bc.space.equality_residual(b.b_dag.space), inst.tol.residual_abs,
            {"B": b.b.dim, "B†": b.b_dag.dim, "B'": bc.dim, "k": b.k_dim})
    return Outcome(rep, {"b": _dump_space(b.b.space), "b_dag": _dump_space(b.b_dag.space), "J": [encode_matrix(g.j)]})


def _compatible(A: ModuleAlgebra, B: ModuleAlgebra, tol) -> bool:
    r, l = A.right, B.left
    return r.k_dim == l.k_dim and r.base.b.equals(l.base.b_dag, tol) and r.base.b_dag.equals(l.base.b, tol)


def cmd_suite(inst: Instance, args) -> Outcome:
    tol = inst.tol
    rep = Report("suite")
    rep.extend(cmd_check(inst, args).report, "check.")
    names = sorted(inst.block("algebras"))
    algs = {n: inst.algebra(n) for n in names}
    for n, A in algs.items():
        if A.algebra.is_unital(tol):
            bic = algebra_commutant(algebra_commutant(A.algebra, tol), tol)
            rep.add(f"bicommutant.{n}", "A'' = A", bic.space.equality_residual(A.algebra.space), tol.residual_abs)
    for a in names:
        for b in names:
            A, B = algs[a], algs[b]
            if A.algebra.n == 0 or not _compatible(A, B, tol):
                continue
            if max(b_algebra_residual(A.algebra, A.right, tol), b_algebra_residual(B.algebra, B.left, tol)) \
                    > tol.residual_abs:
                continue
            fp = fiber_product(A, B, tol)
            tag = f"fiber.{a}*{b}."
            rep.extend(fp.report, tag)
            rep.extend(check_fiber_properties(fp, tol), tag + "props.")
            if A.algebra.nondegenerate and B.algebra.nondegenerate:
                rep.extend(sauvageot_crosscheck(fp, tol), tag + "commutant.")
            I2 = fp.rtp.ket2_space
            res = ind(I2, A.algebra, tol, check=False)
            rep.extend(check_ind(res, A.algebra, tol), tag + "ind.")
    for a in names:
        A = algs[a]
        if A.right.base.b.dim > 0 and b_algebra_residual(A.algebra, A.right, tol) <= tol.residual_abs:
            rep.extend(unitality_check(A, tol), f"unitality.{a}.")
    mods = sorted(inst.block("modules"))
    raw = inst.block("modules")
    bundles = [m for m in mods if raw[m].get("kind") == "bundle"]
    fibered = [m for m in mods if raw[m].get("kind") == "fibered"]
    for x in bundles:
        for y in bundles:
            ex, ey = raw[x], raw[y]
            if ex["base"] == ey["base"] and not ex.get("opposite") and ey.get("opposite"):
                d = inst.base(ex["base"])
                iso = fiberwise_rtp_iso(d, Bundle(tuple(ex["fiber_dims"])), Bundle(tuple(ey["fiber_dims"])), tol)
                rep.extend(iso.report, f"bundle.{x}⊗{y}.")
    for x in fibered:
        for y in fibered:
            ex, ey = raw[x], raw[y]
            if ex["base"] == ey["base"] and not ex.get("opposite") and ey.get("opposite"):
                d = inst.base(ex["base"])
                r = fp_commutative_check(inst.fibered(ex), inst.fibered(ey), d, tol)
                rep.extend(r, f"functions.{x}*{y}.")
    return Outcome(rep)


def cmd_generate(args) -> int:
    """Write a random instance (two amplified bimodules over a GNS base) for corpus testing."""
    rng = np.random.default_rng(args.seed)
    from .corpus import random_unitary
    blocks = [int(rng.integers(1, 3)) for _ in range(int(rng.integers(1, 3)))]
    weights = [float(w) for w in rng.uniform(0.2, 1.0, len(blocks))]
    base, _ = gns_base(blocks, weights)
    k = base.k_dim
    m, n = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    mats, spaces = {}, {}

    def add_space(name, arrs):
        names = []
        for i, M in enumerate(arrs):
            mats[f"{name}_{i}"] = encode_matrix(M)
            names.append(f"{name}_{i}")
        spaces[name] = names

    from .corpus import amplified_bimodule
    out_bim, out_alg = {}, {}
    for tag, mult in (("H", m), ("K", n)):
        V = random_unitary(k * mult, rng)
        bim = amplified_bimodule(base, mult, V)
        add_space(f"{tag}_alpha", bim.alpha.basis)
        add_space(f"{tag}_beta", bim.beta.basis)
        out_bim[tag] = {"kind": "explicit", "alpha_base": "bop", "beta_base": "b",
                        "alpha": f"{tag}_alpha", "beta": f"{tag}_beta"}
        out_alg[f"L{tag}"] = {"kind": "full", "on": tag}
    raw = {"version": VERSION_TAG,
           "bases": {"b": {"kind": "gns", "blocks": blocks, "weights": weights},
                     "bop": {"kind": "opposite", "of": "b"}},
           "matrices": mats, "spaces": spaces, "bimodules": out_bim, "algebras": out_alg}
    text = json.dumps(raw, indent=1, sort_keys=True) + "\n"
    if args.path == "-":
        sys.stdout.write(text)
    else:
        Path(args.path).write_text(text, encoding="utf-8")
    return EXIT_PASS


COMMANDS = {"check": cmd_check, "rtp": cmd_rtp, "fiber": cmd_fiber, "ind": cmd_ind,
            "commutant": cmd_commutant, "gns": cmd_gns, "suite": cmd_suite}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opalg", description="Verify relative tensor products and fiber "
                                "products of finite-dimensional operator algebras.")
    p.add_argument("--version", action="version", version=f"opalg {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, default=None, help="relative rank cutoff")
    common.add_argument("--tol-residual", type=float, default=None, help="absolute residual tolerance")
    common.add_argument("--json-out", metavar="PATH", default=None, help="write the structured report here")
    common.add_argument("--dump-bases", action="store_true", help="print computed bases")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks and generated instances")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("check", parents=[common], help="axioms of every base, module and algebra")
    s.add_argument("instance")
    s = sub.add_parser("rtp", parents=[common], help="relative tensor product of two modules")
    s.add_argument("instance"); s.add_argument("left"); s.add_argument("right")
    s = sub.add_parser("fiber", parents=[common], help="fiber product of two module algebras")
    s.add_argument("instance"); s.add_argument("left"); s.add_argument("right")
    s = sub.add_parser("ind", parents=[common], help="induced algebra Ind_I(A)")
    s.add_argument("instance"); s.add_argument("space"); s.add_argument("algebra")
    s = sub.add_parser("commutant", parents=[common], help="commutant of a set of matrices")
    s.add_argument("instance"); s.add_argument("space")
    s = sub.add_parser("gns", parents=[common], help="GNS base of an algebra and state")
    s.add_argument("instance"); s.add_argument("base")
    s = sub.add_parser("suite", parents=[common], help="every applicable check")
    s.add_argument("instance")
    s = sub.add_parser("generate", parents=[common], help="write a random instance")
    s.add_argument("path", help="output file, or - for standard output")
    return p


def _tolerance(args, inst_tol: Tolerance) -> Tolerance:
    return Tolerance(args.tol_rank if args.tol_rank is not None else inst_tol.rank_rel,
                     args.tol_residual if args.tol_residual is not None else inst_tol.residual_abs)


def _render_dumps(dumps: dict) -> str:
    lines = []
    for name in sorted(dumps):
        lines.append(f"-- {name}: {len(dumps[name])} matrices")
        for i, m in enumerate(dumps[name]):
            lines.append(f"  [{i}] {m['rows']}x{m['cols']}")
            M = np.array([complex(a, b) for a, b in m["data"]]).reshape(m["rows"], m["cols"])
            for row in M:
                lines.append("    " + " ".join(f"{_fmt(z)}" for z in row))
    return "\n".join(lines)


def _fmt(z: complex) -> str:
    re, im = _clean(z.real), _clean(z.imag)
    return f"{re:+.6f}{im:+.6f}i"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "generate":
        return cmd_generate(args)
    try:
        inst = load_instance(args.instance)
        inst.tol = _tolerance(args, inst.tol)
        np.random.seed(args.seed)
        out = COMMANDS[args.command](inst, args)
    except InstanceError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ShapeMismatch as exc:
        print(f"input error: {args.instance}: dimension mismatch ({exc})", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, TypeError, ValueError) as exc:
        print(f"input error: {args.instance}: malformed block ({type(exc).__name__}: {exc})", file=sys.stderr)
        return EXIT_INPUT
    except OpAlgError as exc:
        print(f"verification failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rep = out.report
    print(rep.render())
    if rep.data:
        print("data: " + json.dumps(rep.data, sort_keys=True))
    if args.dump_bases and out.dumps:
        print(_render_dumps(out.dumps))
    if args.json_out:
        payload = rep.to_dict()
        payload["tolerances"] = {"rank_rel": inst.tol.rank_rel, "residual_abs": inst.tol.residual_abs}
        if out.dumps:
            payload["bases"] = out.dumps
        Path(args.json_out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def shipped_instance(name: str) -> str:
    """Path of an instance file shipped with the package."""
    return str(resources.files("opalg") / "instances" / f"{name}.json")


if __name__ == "__main__":
    sys.exit(main())
