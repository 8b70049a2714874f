"""``mplobpcg run``: generate or load a matrix, run solver variants, report.

Exit status: 0 when every variant converged, 2 when some variant hit the
iteration cap, 1 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, precond
from ._backend import NAME as BACKEND
from .eigensolvers import SolverConfig, Variant, solve
from .errors import ConfigError, LinalgError, NotSquare, NotSymmetricHeader, ParseError
from .generators import gen_kernel, gen_laplace2d
from .mmio import read_matrix_market, write_matrix_market
from .precision import Precision
from .sparse import CsrMatrix

CSV_COLUMNS = ["matrix", "n", "nnz", "variant", "k", "m", "seed", "iters_lower", "iters_working",
               "converged", "idx", "theta", "resid", "t_factor", "t_total"]
BOUND_COLUMNS = ["eps_A", "eps_r", "eps_T", "gamma_precond", "beta", "gamma_total", "rate", "floor"]
ALL_VARIANTS = [Variant.DLOBPCG_DCHOL, Variant.DLOBPCG_SCHOL, Variant.MPLOBPCG_SCHOL]
_GEN = re.compile(r"^(laplace2d):(\d+)x(\d+)$|^(gaussian|poly|cgaussian|cpoly):(\d+)$")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunRecord:
    matrix_name: str
    n: int
    nnz: int
    variant: str
    k: int
    m: int
    seed: int
    iters_lower: int
    iters_working: int
    converged: bool
    theta: list
    resid: list
    timings: dict
    bounds: dict | None = None
    history: list = field(default_factory=list)

    def rows(self):
        base = [self.matrix_name, self.n, self.nnz, self.variant, self.k, self.m, self.seed,
                self.iters_lower, self.iters_working, int(self.converged)]
        tail = [f"{self.timings.get('factor', 0.0):.6f}", f"{self.timings.get('total', 0.0):.6f}"]
        extra = [repr(self.bounds[c]) for c in BOUND_COLUMNS] if self.bounds is not None else []
        for j, (t, r) in enumerate(zip(self.theta, self.resid), start=1):
            yield base + [j, repr(t), repr(r)] + tail + extra


def parse_gen(spec: str):
    """Build ``(name, matrix)`` from a ``--gen`` value."""
    mt = _GEN.match(spec)
    if not mt:
        raise InputError(f"bad --gen value '{spec}'")
    if mt.group(1):
        nx, ny = int(mt.group(2)), int(mt.group(3))
        if nx < 1 or ny < 1:
            raise InputError("grid dimensions must be positive")
        return spec, gen_laplace2d(nx, ny)
    kind, n = mt.group(4), int(mt.group(5))
    if n < 1:
        raise InputError("kernel size must be positive")
    base = {"gaussian": "gaussian", "poly": "polynomial"}[kind.lstrip("c")]
    K, _ = gen_kernel(base, n, seed=0, complex_mode=kind.startswith("c"))
    return spec, K


def load_matrix(args):
    if args.matrix:
        try:
            A = read_matrix_market(args.matrix)
        except OSError as exc:
            raise InputError(str(exc)) from exc
        return os.path.basename(args.matrix), A
    return parse_gen(args.gen)


def _nnz(A) -> int:
    return A.nnz if isinstance(A, CsrMatrix) else int(np.count_nonzero(A))


def _bounds(A, variant: Variant):
    prec = Precision.WORKING if variant is Variant.DLOBPCG_DCHOL else Precision.LOWER
    P = precond.build(A, prec, reorder=False)
    return analysis.bound_report(A, P).as_dict()


def run_variant(name, A, variant: Variant, args) -> RunRecord:
    cfg = SolverConfig(k=args.k, m=args.block, maxit=args.maxit, tol=args.tol, lower_tol=args.lower_tol,
                       seed=args.seed, variant=variant, sketch_rows=args.sketch_rows)
    res = solve(A, cfg)
    bounds = None
    if args.bounds and A.shape[0] <= analysis.DENSE_LIMIT:
        bounds = _bounds(A, variant)
    return RunRecord(name, A.shape[0], _nnz(A), variant.value, cfg.k, cfg.m, cfg.seed,
                     res.iterations_lower, res.iterations_working, res.converged,
                     res.theta.tolist(), res.residual_norms.tolist(), dict(res.timings), bounds,
                     [h.to_dict() for h in res.history])


def write_csv(fh, records, with_bounds):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS + (BOUND_COLUMNS if with_bounds else []))
    for rec in records:
        for row in rec.rows():
            if with_bounds and rec.bounds is None:
                row = row + [""] * len(BOUND_COLUMNS)
            w.writerow(row)


def summary(records) -> str:
    ref = next((r.timings["total"] for r in records if r.variant == Variant.DLOBPCG_DCHOL.value), None)
    head = f"{'variant':<16}{'conv':>6}{'it_low':>8}{'it_work':>8}{'t_factor':>10}{'t_total':>10}{'rel':>7}"
    lines = [head, "-" * len(head)]
    for r in records:
        rel = f"{r.timings['total'] / ref:.2f}" if ref else "-"
        lines.append(f"{r.variant:<16}{('yes' if r.converged else 'no'):>6}{r.iters_lower:>8}{r.iters_working:>8}"
                     f"{r.timings.get('factor', 0.0):>10.3f}{r.timings['total']:>10.3f}{rel:>7}")
    return "\n".join(lines)


def build_parser():
    p = _Parser(prog="mplobpcg", description="Mixed-precision LOBPCG/PINVIT benchmark runner")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="solve for the smallest eigenpairs and report")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", metavar="PATH", help="Matrix Market coordinate file (symmetric/hermitian)")
    src.add_argument("--gen", metavar="SPEC",
                     help="laplace2d:NXxNY | gaussian:N | poly:N | cgaussian:N | cpoly:N")
    r.add_argument("--k", type=int, required=True, help="number of eigenpairs")
    r.add_argument("--block", type=int, default=None, help="block size m (default ceil(1.5 k))")
    r.add_argument("--tol", type=float, default=1e-12)
    r.add_argument("--lower-tol", type=float, default=5e-6)
    r.add_argument("--maxit", type=int, default=2000, help="iteration cap per stage")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--variant", default="mplobpcg-schol",
                   choices=[v.value for v in Variant] + ["all"])
    r.add_argument("--sketch-rows", type=int, default=8)
    r.add_argument("--bounds", action="store_true", help="append rounding-error bounds (n <= 200)")
    r.add_argument("--csv", metavar="PATH", help="write one row per eigenpair ('-' for stdout)")
    r.add_argument("--history", metavar="PATH", help="write per-iteration history as JSON")
    r.add_argument("--jobs", type=int, default=1, help="run variants concurrently")
    r.add_argument("--dump-matrix", metavar="PATH", help="write the matrix in Matrix Market format")
    return p


def cmd_run(args) -> int:
    name, A = load_matrix(args)
    if args.dump_matrix:
        write_matrix_market(args.dump_matrix, A if isinstance(A, CsrMatrix) else CsrMatrix.from_dense(A),
                            comment=f"generated by mplobpcg from {name}")
    variants = ALL_VARIANTS if args.variant == "all" else [Variant(args.variant)]
    SolverConfig(k=args.k, m=args.block, maxit=args.maxit, tol=args.tol, lower_tol=args.lower_tol,
                 seed=args.seed, sketch_rows=args.sketch_rows).validate(A.shape[0])
    if args.bounds and A.shape[0] > analysis.DENSE_LIMIT:
        print(f"mplobpcg: --bounds skipped, n = {A.shape[0]} > {analysis.DENSE_LIMIT}", file=sys.stderr)
    if args.jobs > 1 and len(variants) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as ex:
            records = list(ex.map(lambda v: run_variant(name, A, v, args), variants))
    else:
        records = [run_variant(name, A, v, args) for v in variants]

    with_bounds = any(r.bounds is not None for r in records)
    if args.csv == "-":
        write_csv(sys.stdout, records, with_bounds)
    elif args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_csv(fh, records, with_bounds)
    if args.history:
        with open(args.history, "w") as fh:
            json.dump({r.variant: {"timings": r.timings, "iterations": r.history} for r in records}, fh, indent=1)
    print(f"matrix {name}  n={A.shape[0]}  nnz={_nnz(A)}  backend={BACKEND}")
    print(summary(records))
    return 0 if all(r.converged for r in records) else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return cmd_run(args)
    except (InputError, ParseError, NotSquare, NotSymmetricHeader, ConfigError, LinalgError, ValueError) as exc:
        print(f"mplobpcg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
