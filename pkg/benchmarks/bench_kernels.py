"""Time the compiled kernels against the numpy fallback and check they agree.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--json PATH]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from opalg import _kernels_py

try:
    from opalg import _kernels as _compiled
except ImportError:
    _compiled = None


def _rand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def cases(rng):
    """(name, kernel name, args) triples at the sizes the library meets."""
    out = []
    for m, n in ((32, 64), (128, 256), (400, 400)):
        V = np.ascontiguousarray(_rand(rng, m, n))
        out.append((f"mgs_rows {m}x{n}", "mgs_rows", (V, 1e-9)))
    # rank-deficient input exercises the drop branch
    V = _rand(rng, 200, 40) @ _rand(rng, 40, 300)
    out.append(("mgs_rows 200x300 rank 40", "mgs_rows", (np.ascontiguousarray(V), 1e-9)))
    for p, n, q in ((2, 2, 2), (4, 4, 4), (8, 4, 6)):
        B = np.ascontiguousarray(_rand(rng, p, p, n, n))
        C = np.ascontiguousarray(_rand(rng, q, q, n, n))
        out.append((f"rtp_gram p={p} n={n} q={q}", "rtp_gram", (B, C)))
    return out


def _agree(kname, a, b) -> float:
    if kname == "mgs_rows":
        Qa, ka = a
        Qb, kb = b
        if list(ka) != list(kb):
            return float("inf")
        return float(np.abs(np.asarray(Qa) - np.asarray(Qb)).max()) if len(ka) else 0.0
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


def run(repeat: int = 5, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    rows = []
    for name, kname, args in cases(rng):
        fpy = getattr(_kernels_py, kname)
        t_py = min(timeit.repeat(lambda: fpy(*args), number=1, repeat=repeat))
        row = {"case": name, "python_s": t_py, "cython_s": None, "speedup": None, "max_diff": None}
        if _compiled is not None:
            fcy = getattr(_compiled, kname)
            t_cy = min(timeit.repeat(lambda: fcy(*args), number=1, repeat=repeat))
            row.update(cython_s=t_cy, speedup=t_py / t_cy, max_diff=_agree(kname, fpy(*args), fcy(*args)))
        rows.append(row)
    return rows


_E2E = """
import time
from opalg import BACKEND
from opalg.corpus import corpus
from opalg.fiber import fiber_product
insts = corpus()
t = time.perf_counter()
for inst in insts:
    fiber_product(inst.A, inst.B)
print(BACKEND, time.perf_counter() - t)
"""


def end_to_end() -> dict:
    """Fiber products over the whole corpus, once per backend, in fresh interpreters."""
    out = {}
    for pure in ("0", "1"):
        env = dict(os.environ, OPALG_PURE_PYTHON=pure)
        res = subprocess.run([sys.executable, "-c", _E2E], env=env, capture_output=True, text=True, check=True)
        name, secs = res.stdout.split()
        out[name] = float(secs)
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default=None)
    args = p.parse_args(argv)
    rows = run(args.repeat, args.seed)
    if _compiled is None:
        print("compiled kernels not available; timing the numpy fallback only")
    print(f"{'case':32s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for r in rows:
        cy = f"{1e3 * r['cython_s']:12.3f}" if r["cython_s"] is not None else f"{'-':>12s}"
        sp = f"{r['speedup']:8.2f}" if r["speedup"] is not None else f"{'-':>8s}"
        md = f"{r['max_diff']:10.2e}" if r["max_diff"] is not None else f"{'-':>10s}"
        print(f"{r['case']:32s} {1e3 * r['python_s']:12.3f} {cy} {sp} {md}")
    e2e = end_to_end()
    print("corpus fiber products: " + ", ".join(f"{k} {v:.2f} s" for k, v in sorted(e2e.items())))
    if args.json:
        rows.append({"case": "corpus fiber products", **{f"{k}_s": v for k, v in e2e.items()}})
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
