"""Command-line front end.

Verbs::

    nablafrac solve   --config PATH [--out PATH] [--mesh X] [--quiet] [--side-by-side]
    nablafrac check   --config PATH [--constants PATH] [--box-p LO HI] [--box-h LO HI]
    nablafrac compare --config PATH --function EXPR --order W [--rho R] [--out PATH]

Exit codes: ``solve`` 0 converged, 2 diverged, 1 config error; ``check`` 0
uniqueness holds, 3 only existence holds, 4 neither, 1 config error;
``compare`` 0 or 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np

from . import conditions
from .config import load_constants, load_problem
from .errors import ConfigError, ExprError, ExpressionEvalError, NablaFracError, SolverError
from .expr import Expr
from .fracops import caputo_values, rl_values
from .nabla import GridFunction
from .solver import solve
from .timescale import build_grid

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_EXISTENCE_ONLY = 3
EXIT_NEITHER = 4

SOLVE_COLUMNS = ("theta", "segment_index", "p", "h", "is_impulse_left", "is_impulse_right")
COMPARE_COLUMNS = ("theta", "caputo", "rl", "caputo_via_rl", "abs_diff")


def fmt(x) -> str:
    """Fixed 17-significant-digit formatting; integers stay integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % x


@contextmanager
def _sink(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def write_csv(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def solution_csv(sol, memory=None) -> str:
    """CSV text of a solution; ``memory`` adds the memory-variant columns."""
    buf = io.StringIO()
    header = SOLVE_COLUMNS
    rows = list(sol.rows())
    if memory is not None:
        header = header + ("p_memory", "h_memory")
        rows = [r + (m[2], m[3]) for r, m in zip(rows, memory.rows())]
    write_csv(buf, header, rows)
    return buf.getvalue()


def _err(msg: str) -> None:
    print(f"nablafrac: {msg}", file=sys.stderr)


def _load(args):
    loaded = load_problem(args.config)
    if getattr(args, "mesh", None) is not None:
        if not args.mesh > 0:
            raise ConfigError(f"--mesh must be positive, got {args.mesh!r}")
        loaded.solver = replace(loaded.solver, mesh=args.mesh)
    return loaded


def cmd_solve(args) -> int:
    try:
        loaded = _load(args)
    except (ConfigError, NablaFracError) as exc:
        _err(f"{args.config}: {exc}")
        return EXIT_CONFIG
    problem, cfg = loaded.problem, loaded.solver
    start = time.perf_counter()
    try:
        sol = solve(problem, cfg)
        memory = None
        if args.side_by_side:
            other = "memory" if cfg.history_variant == "frozen" else "frozen"
            memory = solve(problem, replace(cfg, history_variant=other))
    except SolverError as exc:
        _err(f"{type(exc).__name__} in the {exc.loop} loop: {exc}")
        return EXIT_DIVERGED
    except ExpressionEvalError as exc:
        _err(f"expression evaluation failed during solve: {exc}")
        return EXIT_DIVERGED
    elapsed = time.perf_counter() - start

    text = solution_csv(sol, memory)
    out = args.out if args.out is not None else loaded.csv
    with _sink(out) as fh:
        fh.write(text)

    if not args.quiet:
        report = sys.stdout if out not in (None, "-") else sys.stderr
        lines = [
            f"variant = {sol.variant}",
            f"nodes = {len(sol.grid)}",
            f"outer_iterations = {sol.outer_iterations}",
            f"picard_sweeps = {sol.picard_iterations}",
            f"max_inner_iterations = {sol.inner_iterations}",
            f"residual = {fmt(sol.residual)}",
            f"p_initial = {fmt(sol.p[0])}",
            f"p_final = {fmt(sol.p[-1])}",
        ]
        for k, j in enumerate(sol.jumps, start=1):
            lines.append(
                f"jump_{k} = theta {fmt(j.theta)} p- {fmt(j.p_minus)} p+ {fmt(j.p_plus)} amount {fmt(j.amount)}"
            )
        lines.append(f"runtime_s = {elapsed:.3f}")
        print("\n".join(lines), file=report)
    return EXIT_OK


def _check_report(report, beta, a, b, c, source: str) -> list[str]:
    lines = [f"constants = {source}"]
    for name in ("K", "G", "A", "F", "E", "mu", "H"):
        lines.append(f"{name} = {fmt(getattr(c, name))}")
    lines.append("M = " + ", ".join(fmt(x) for x in c.M))
    lines.append("L = " + ", ".join(fmt(x) for x in c.L))
    lines += [
        f"U = {fmt(report.U)}",
        f"U_impulse = {fmt(report.impulse_term)}",
        f"U_phi = {fmt(report.phi_term)}",
        f"U_rhs = {fmt(report.rhs_term)}",
        f"uniqueness = {'satisfied' if report.satisfied else 'not satisfied'}",
        f"sigma = {fmt(report.sigma) if report.sigma is not None else 'absent'}",
        f"existence_a = {fmt(a)}",
        f"existence_b = {fmt(b)}",
        f"beta = {fmt(beta) if beta is not None else 'none'}",
        f"existence = {'satisfied' if beta is not None else 'not satisfied'}",
    ]
    return lines


def cmd_check(args) -> int:
    try:
        loaded = _load(args)
        problem = loaded.problem
        if args.constants is not None:
            consts = load_constants(args.constants)
            source = "file"
            if consts.m != problem.m:
                raise ConfigError(
                    f"{args.constants}: {consts.m} impulse constants for {problem.m} impulses"
                )
        else:
            box = conditions.SamplingBox(
                theta=(problem.ts.min, problem.ts.max),
                p=tuple(args.box_p),
                h=tuple(args.box_h),
                resolution=args.resolution,
                seed=args.seed,
            )
            est = conditions.estimate_constants(problem, box)
            consts = est.constants
            source = f"estimated (resolution {box.resolution}, {box.pairs} random pairs, seed {box.seed})"
            for note in est.notes:
                _err(note)
    except (ConfigError, NablaFracError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    T = problem.T
    report = conditions.contraction_constant(consts, problem.w, T, problem.m)
    a, b = conditions.existence_coefficients(consts, problem.w, T, problem.m)
    beta = conditions.existence_beta_search(consts, problem.w, T, problem.m)
    print("\n".join(_check_report(report, beta, a, b, consts, source)))
    if report.satisfied:
        return EXIT_OK
    return EXIT_EXISTENCE_ONLY if beta is not None else EXIT_NEITHER


def compare_rows(ts, func: Expr, w: float, rho: float, mesh: float):
    """Rows ``(theta, caputo, rl, caputo_via_rl, abs_diff)`` at nodes after ``rho``."""
    grid = build_grid(ts, mesh, [rho])
    f = GridFunction(grid, np.broadcast_to(func.eval(theta=grid.nodes), grid.nodes.shape))
    cap = caputo_values(f, w, rho).values
    rl = rl_values(f, w, rho).values
    via = rl_values(f.shift(f.at(rho)), w, rho).values
    start = grid.index(rho) + 1
    for i in range(start, len(grid)):
        yield (float(grid.nodes[i]), float(cap[i]), float(rl[i]), float(via[i]), float(abs(cap[i] - via[i])))


def cmd_compare(args) -> int:
    try:
        loaded = _load(args)
        ts = loaded.problem.ts
        try:
            func = Expr.parse(args.function, frozenset({"theta"}), "function")
        except ExprError as exc:
            raise ConfigError(f"--function: {exc}") from None
        if not 0 < args.order < 1:
            raise ConfigError(f"--order must lie in (0, 1), got {args.order!r}")
        rho = ts.min if args.rho is None else args.rho
        if rho not in ts or not rho < ts.max:
            raise ConfigError(f"--rho {rho!r} must be a time-scale point below {ts.max!r}")
        rows = list(compare_rows(ts, func, args.order, rho, loaded.solver.mesh))
    except ExpressionEvalError as exc:
        _err(f"--function: {exc}")
        return EXIT_CONFIG
    except (ConfigError, NablaFracError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    with _sink(args.out) as fh:
        write_csv(fh, COMPARE_COLUMNS, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nablafrac",
        description="Impulsive fractional nabla equations on time scales.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, metavar="PATH", help="problem config file")
        p.add_argument("--mesh", type=float, metavar="X", help="override the solver mesh")

    p = sub.add_parser("solve", help="solve a problem and write its CSV")
    common(p)
    p.add_argument("--out", metavar="PATH", help="CSV destination ('-' for stdout)")
    p.add_argument("--quiet", action="store_true", help="suppress the summary")
    p.add_argument(
        "--side-by-side",
        action="store_true",
        help="also solve with the other history variant and add p_memory, h_memory columns",
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="check the existence and uniqueness conditions")
    common(p)
    p.add_argument("--constants", metavar="PATH", help="constants file; estimated when omitted")
    p.add_argument("--box-p", nargs=2, type=float, default=(-1.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--box-h", nargs=2, type=float, default=(-1.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compare", help="tabulate Caputo and Riemann-Liouville derivatives")
    common(p)
    p.add_argument("--function", required=True, metavar="EXPR", help="function of theta")
    p.add_argument("--order", type=float, required=True, metavar="W")
    p.add_argument("--rho", type=float, metavar="R", help="base point (default: time-scale minimum)")
    p.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    p.add_argument("--quiet", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
