"""Command-line entry point: ``feod {solve,verify,bench,sensitivity}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .adjoint import (
    DesignField,
    compliance_sensitivity,
    write_sensitivity_csv,
    write_sensitivity_vtk,
)
from .basis import build_basis
from .bench import GRID, BenchConfig, report, run_bench
from .mesh import build_cube_tet_mesh, write_vtk
from .qfunction import PLaplacianParams
from .solver import SolverError, newton_solve
from .space import build_space, prolong_true
from .verify import run_checks

# per-subcommand defaults for flags left unset
DEFAULTS = {
    "solve": {"n": 8, "order": 2},
    "verify": {"n": 2, "order": 2},
    "sensitivity": {"n": 2, "order": 1},
    "bench": {"n": 16, "order": None},
}


@dataclass
class RunConfig:
    command: str
    n: int
    order: int | None
    p: float
    eps: float
    strategy: str | None
    mode: str | None
    rtol: float
    atol: float
    maxit: int
    threads: int
    seed: int
    runs: int
    out: str | None
    fmt: str
    inject_fault: bool
    damping: bool
    random_design: bool

    def echo(self, stream):
        items = " ".join(f"{k}={v}" for k, v in asdict(self).items())
        print(f"# config: {items}", file=stream)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="cube subdivisions per axis")
    common.add_argument("--order", type=int, choices=(1, 2, 3))
    common.add_argument("--p", type=float, default=4.0)
    common.add_argument("--eps", type=float, default=1e-4)
    common.add_argument("--strategy", choices=("res", "elm", "hnd"))
    common.add_argument("--mode", choices=("forward", "reverse", "dual"))
    common.add_argument("--rtol", type=float, default=1e-8)
    common.add_argument("--atol", type=float, default=1e-12)
    common.add_argument("--maxit", type=int, default=50)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--runs", type=int, default=100)
    common.add_argument("--out", help="output directory (bench: CSV file, default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="feod", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", parents=[common], help="nonlinear p-Laplacian solve")
    solve.add_argument("--damping", action="store_true", help="halve steps until |r| decreases")
    verify = sub.add_parser("verify", parents=[common], help="run the consistency checks")
    verify.add_argument("--inject-fault", action="store_true",
                        help="corrupt one stored pointwise Jacobian entry")
    bench = sub.add_parser("bench", parents=[common], help="tangent assembly benchmark")
    bench.add_argument("--format", dest="fmt", choices=("csv", "table"), default="csv")
    sens = sub.add_parser("sensitivity", parents=[common], help="adjoint compliance sensitivities")
    sens.add_argument("--random-design", action="store_true",
                      help="seeded rho ~ U(0.5, 1.5) instead of rho = 1")
    return parser


def resolve(args, parser):
    d = DEFAULTS[args.command]
    cfg = RunConfig(
        command=args.command,
        n=d["n"] if args.n is None else args.n,
        order=d["order"] if args.order is None else args.order,
        p=args.p, eps=args.eps, strategy=args.strategy, mode=args.mode,
        rtol=args.rtol, atol=args.atol, maxit=args.maxit, threads=args.threads,
        seed=args.seed, runs=args.runs, out=args.out, fmt=getattr(args, "fmt", "csv"),
        inject_fault=getattr(args, "inject_fault", False),
        damping=getattr(args, "damping", False),
        random_design=getattr(args, "random_design", False),
    )
    if cfg.n < 1:
        parser.error(f"--n must be >= 1, got {cfg.n}")
    if not cfg.p >= 2.0:
        parser.error(f"--p must be >= 2, got {cfg.p}")
    if not cfg.eps >= 0.0:
        parser.error(f"--eps must be >= 0, got {cfg.eps}")
    if cfg.threads < 1 or cfg.runs < 1 or cfg.maxit < 1:
        parser.error("--threads, --runs and --maxit must be positive")
    if cfg.command != "bench":
        cfg.strategy = cfg.strategy or "res"
        cfg.mode = cfg.mode or ("none" if cfg.strategy == "hnd" else "forward")
    return cfg


def _out_dir(cfg):
    path = Path(cfg.out or "out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _setup(cfg):
    space = build_space(build_cube_tet_mesh(cfg.n), cfg.order)
    return space, build_basis(cfg.order), PLaplacianParams(cfg.p, cfg.eps)


def cmd_solve(cfg):
    space, basis, params = _setup(cfg)
    print(f"mesh: {space.num_elements} tets, {space.ndof_true} true dofs")
    t0 = time.perf_counter()
    u, rep = newton_solve(space, basis, params, None, cfg.strategy, cfg.mode, rtol=cfg.rtol,
                          atol=cfg.atol, maxit=cfg.maxit, damping=cfg.damping,
                          threads=cfg.threads)
    print(f"{'it':>3} {'|r|':>12} {'ratio':>10} {'cg':>5}")
    h = rep.residual_history
    print(f"{0:>3} {h[0]:>12.4e}")
    for k in range(rep.iterations):
        print(f"{k + 1:>3} {h[k + 1]:>12.4e} {h[k + 1] / h[k]:>10.3e} {rep.inner_iterations[k]:>5}")
    print(f"converged in {rep.iterations} Newton iterations ({time.perf_counter() - t0:.2f} s)")

    out = _out_dir(cfg)
    u_full = prolong_true(space, u)
    vertex_dof = np.zeros(space.mesh.num_vertices, dtype=int)
    vertex_dof[space.mesh.tets] = space.elem_dofs[:, :4]
    write_vtk(out / "solution.vtk", space.mesh, point_data={"u": u_full[vertex_dof]})
    with open(out / "solution.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dof", "x", "y", "z", "u"])
        for i, (x, val) in enumerate(zip(space.dof_coords, u_full)):
            w.writerow([i, *(repr(float(c)) for c in x), repr(float(val))])
    print(f"wrote {out / 'solution.vtk'} and {out / 'solution.csv'}")
    return 0


def cmd_verify(cfg):
    space, basis, params = _setup(cfg)
    results = run_checks(space, basis, params, cfg.seed, cfg.inject_fault)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"verify failed: {failed[0].name}", file=sys.stderr)
        return 1
    print("all checks passed")
    return 0


def cmd_bench(cfg):
    combos = tuple((s, m) for s, m in GRID
                   if (cfg.strategy is None or s == cfg.strategy)
                   and (cfg.mode is None or m == cfg.mode or s == "hnd"))
    orders = (1, 2, 3) if cfg.order is None else (cfg.order,)
    bc = BenchConfig(n=cfg.n, runs=cfg.runs, orders=orders, combos=combos, p=cfg.p,
                     eps=cfg.eps, seed=cfg.seed, threads=cfg.threads)
    records = run_bench(bc)
    text = report(records, cfg.fmt)
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(text)
        print(f"wrote {cfg.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def cmd_sensitivity(cfg):
    space, basis, params = _setup(cfg)
    rng = np.random.default_rng(cfg.seed)
    design = (DesignField(rng.uniform(0.5, 1.5, space.num_elements)) if cfg.random_design
              else DesignField.uniform(space))
    res = compliance_sensitivity(space, basis, params, design, strategy=cfg.strategy,
                                 mode=cfg.mode, rtol=cfg.rtol, atol=cfg.atol,
                                 threads=cfg.threads)
    out = _out_dir(cfg)
    write_sensitivity_csv(out / "sensitivity.csv", res.dF_drho)
    write_sensitivity_vtk(out / "sensitivity.vtk", space, res.dF_drho, design)
    print(f"F = {res.objective:.10e} after {res.newton.iterations} Newton iterations")
    print(f"dF/drho: min {res.dF_drho.min():.4e} max {res.dF_drho.max():.4e} "
          f"sum rho*dF/drho {float(design.rho @ res.dF_drho):.4e}")
    print(f"wrote {out / 'sensitivity.csv'} and {out / 'sensitivity.vtk'}")
    return 0


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "bench": cmd_bench,
            "sensitivity": cmd_sensitivity}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    cfg = resolve(args, parser)
    # bench writes CSV to stdout, keep the echo out of it
    cfg.echo(sys.stderr if cfg.command == "bench" else sys.stdout)
    try:
        return COMMANDS[cfg.command](cfg)
    except (SolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
