"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--repeat N] [--grid NX NY]

Each case runs once per backend on identical inputs; the table reports the
best of ``--repeat`` wall times and the speedup of the compiled backend.
"""
import argparse
import sys
import timeit

import numpy as np

from mplobpcg import _backend, _kernels_py
from mplobpcg import SolverConfig, Variant, gen_laplace2d, rcm_ordering, solve
from mplobpcg.dense import small_herm_eig
from mplobpcg.precision import to_lower
from mplobpcg.sparse import sparse_cholesky, sparse_tri_solve, spmv_block


def cases(nx, ny):
    A = gen_laplace2d(nx, ny)
    perm = rcm_ordering(A)
    A32 = to_lower(A)
    F = sparse_cholesky(A32, perm)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((A.n, 16))
    X32 = X.astype(np.float32)
    M = rng.standard_normal((90, 90))
    M = M + M.T
    return {
        "spmv_block 16 cols": lambda: spmv_block(A, X),
        "sparse_cholesky f32": lambda: sparse_cholesky(A32, perm),
        "sparse_tri_solve f32": lambda: sparse_tri_solve(F, X32),
        "small_herm_eig 90": lambda: small_herm_eig(M),
        "solve mplobpcg k=5": lambda: solve(A, SolverConfig(k=5, seed=0, variant=Variant.MPLOBPCG_SCHOL)),
    }


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--grid", type=int, nargs=2, default=(40, 40), metavar=("NX", "NY"))
    args = ap.parse_args(argv)
    if not _backend.COMPILED:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1
    compiled = _backend.kernels
    rows = []
    for name, fn in cases(*args.grid).items():
        times = {}
        for label, mod in (("cython", compiled), ("python", _kernels_py)):
            _backend.kernels = mod
            try:
                times[label] = best_time(fn, args.repeat)
            finally:
                _backend.kernels = compiled
        rows.append((name, times["cython"], times["python"]))
    print(f"grid {args.grid[0]}x{args.grid[1]}, best of {args.repeat}")
    print(f"{'case':<24}{'cython s':>12}{'python s':>12}{'speedup':>9}")
    for name, tc, tp in rows:
        print(f"{name:<24}{tc:>12.5f}{tp:>12.5f}{tp / tc:>9.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
