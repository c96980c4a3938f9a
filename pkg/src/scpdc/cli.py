"""Command-line front end: ``scpdc {solve|gen|check|bench}``.

Exit codes: 0 success / converged, 2 problem-file parse error, 3 program
validation error, 4 solver failure (infeasible subproblem or numerical
breakdown), 5 iteration limit.  ``check`` exits 0 iff the queried point
certifies stationary at the requested tolerance.

Verbosity comes from ``SCPDC_LOG`` in {quiet, info, debug} or the
``--verbose`` flag (which forces debug).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

import numpy as np

from .dc_model import DCProgram, ValidationError, validate_program
from .problem_io import (ProblemFormatError, canonical_json, dump_program,
                         load_json_file, load_program, program_to_dict)
from .problems import (MpccData, BilinearNmpcData, build_bilinear_nmpc,
                       build_mpcc, build_slow_dca_instance,
                       build_small_example, find_dc_feasible_point,
                       gen_random_mpcc, gen_random_ncvqcqp, mpcc_oracle)
from .scp_engine import (SolveStatus, SolverConfig, TRACE_COLUMNS,
                         kkt_fixed_point_residual, solve_dca, solve_rscp,
                         solve_scp)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_MAXITER = 5

log = logging.getLogger("scpdc.cli")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _setup_logging(verbose: bool) -> None:
    level_name = os.environ.get("SCPDC_LOG", "quiet").strip().lower()
    level = {"quiet": logging.WARNING, "info": logging.INFO,
             "debug": logging.DEBUG}.get(level_name, logging.WARNING)
    if verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("scpdc").setLevel(level)


def _add_gen_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gen", choices=["small-example", "ncvqcqp", "mpcc",
                                          "mpcc-random", "nmpc", "dca-slow"],
                        help="generate the problem instead of reading a file")
    parser.add_argument("--case", type=int, default=1,
                        help="small-example decomposition (1 or 2)")
    parser.add_argument("--n", type=int, default=10, help="ncvqcqp dimension")
    parser.add_argument("--m2", type=int, default=5,
                        help="ncvqcqp linear row count")
    parser.add_argument("--nx", type=int, default=3)
    parser.add_argument("--ny", type=int, default=2)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--data", help="MpccData / BilinearNmpcData JSON file")


def _mpcc_from_file(path: str) -> MpccData:
    doc = load_json_file(path)
    try:
        from .dc_model import ConvexQuadratic, SymMatrix
        obj = doc["objective"]
        nx = int(doc["nx"])
        ny = int(doc["ny"])
        objective = ConvexQuadratic(
            SymMatrix.symmetrize(np.array(obj["Q"], dtype=float)),
            np.array(obj["q"], dtype=float), float(obj["r"]))
        kw = {}
        for name in ("A", "B", "a", "x_lb", "x_ub", "y_lb", "y_ub"):
            if doc.get(name) is not None:
                kw[name] = np.array(doc[name], dtype=float)
        return MpccData(nx=nx, ny=ny, objective=objective,
                        C=np.array(doc["C"], dtype=float),
                        D=np.array(doc["D"], dtype=float).reshape(nx, ny),
                        e=np.array(doc["e"], dtype=float), **kw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError("MpccData file %s: %s" % (path, exc))


def _nmpc_from_file(path: str) -> BilinearNmpcData:
    doc = load_json_file(path)
    try:
        return BilinearNmpcData(
            nx=int(doc["nx"]), nu=int(doc["nu"]), Hp=int(doc["Hp"]),
            A=np.array(doc["A"], dtype=float),
            C=np.array(doc["C"], dtype=float),
            B_bilinear=np.array(doc["B_bilinear"], dtype=float),
            Wx=np.array(doc["Wx"], dtype=float),
            Wu=np.array(doc["Wu"], dtype=float),
            We=np.array(doc["We"], dtype=float),
            x_init=np.array(doc["x_init"], dtype=float),
            x_lb=np.array(doc["x_lb"], dtype=float),
            x_ub=np.array(doc["x_ub"], dtype=float),
            u_lb=np.array(doc["u_lb"], dtype=float),
            u_ub=np.array(doc["u_ub"], dtype=float),
            r_f=float(doc["r_f"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError("BilinearNmpcData file %s: %s" % (path, exc))


def _build_problem(args) -> DCProgram:
    if getattr(args, "problem", None) and getattr(args, "gen", None):
        raise ProblemFormatError("give either a problem file or --gen, not both")
    if getattr(args, "problem", None):
        return load_program(args.problem)
    gen = getattr(args, "gen", None)
    if gen is None:
        raise ProblemFormatError("no problem source: give a file or --gen")
    if gen == "small-example":
        return build_small_example(args.case)
    if gen == "ncvqcqp":
        return gen_random_ncvqcqp(args.n, args.m2, args.seed)
    if gen == "mpcc":
        if not args.data:
            raise ProblemFormatError("--gen mpcc needs --data FILE")
        return build_mpcc(_mpcc_from_file(args.data))[0]
    if gen == "mpcc-random":
        return build_mpcc(gen_random_mpcc(args.nx, args.ny, args.seed))[0]
    if gen == "nmpc":
        if not args.data:
            raise ProblemFormatError("--gen nmpc needs --data FILE")
        return build_bilinear_nmpc(_nmpc_from_file(args.data))
    if gen == "dca-slow":
        return build_slow_dca_instance(args.n, args.seed)
    raise ProblemFormatError("unknown generator %r" % gen)


def _initial_point(args, p: DCProgram) -> np.ndarray:
    src = getattr(args, "x0", "zeros")
    if getattr(args, "x0_file", None):
        doc = load_json_file(args.x0_file)
        x0 = np.array(doc, dtype=float).reshape(-1)
    elif src == "zeros":
        x0 = np.zeros(p.dim)
    elif src in ("midpoint", "box-midpoint"):
        x0 = p.omega.midpoint()
    else:
        try:
            x0 = np.array([float(tok) for tok in src.split(",")])
        except ValueError:
            raise ProblemFormatError("bad --x0 value %r" % src)
    if x0.shape != (p.dim,):
        raise ProblemFormatError("x0 has length %d, problem dim is %d"
                                 % (x0.shape[0], p.dim))
    return x0


def _config_from_args(args) -> SolverConfig:
    reg = {"auto": "on_nondecrease", "always": "always", "never": "never"}
    return SolverConfig(
        eps=args.eps, max_iter=args.max_iter, mu0=args.mu,
        mu_update=args.mu_update, rho_reg=args.rho,
        reg_trigger=reg[args.reg], inner_tol=args.inner_tol)


def _write_trace(path: str, report) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in report.iterations:
            writer.writerow([
                rec.k, _fmt(rec.f_val), _fmt(rec.f_mu_val),
                _fmt(rec.step_norm), _fmt(rec.feasgap), _fmt(rec.mu_used),
                _fmt(rec.rho_used), _fmt(rec.descent_lhs),
                _fmt(rec.descent_rhs), rec.inner_iters, rec.inner_status])


def _summary_line(report) -> str:
    last = report.iterations[-1] if report.iterations else None
    return ",".join([
        report.status.value,
        _fmt(report.final_f()) if last else "nan",
        str(report.iter_count),
        "%.6f" % report.wall_time,
        _fmt(last.step_norm) if last else "nan",
        _fmt(last.feasgap) if last else "nan",
    ])


_STATUS_EXIT = {
    SolveStatus.CONVERGED_STATIONARY: EXIT_OK,
    SolveStatus.MAX_ITER: EXIT_MAXITER,
    SolveStatus.SUBPROBLEM_INFEASIBLE: EXIT_SOLVER,
    SolveStatus.NUMERICAL_FAILURE: EXIT_SOLVER,
}


def cmd_solve(args) -> int:
    p = _build_problem(args)
    diags = validate_program(p)
    if diags:
        print("validation failed:", file=sys.stderr)
        for d in diags:
            print("  " + d, file=sys.stderr)
        return EXIT_VALIDATION
    x0 = _initial_point(args, p)
    cfg = _config_from_args(args)
    if args.algorithm == "scp":
        report = solve_scp(p, x0, cfg)
    elif args.algorithm == "rscp":
        report = solve_rscp(p, x0, cfg)
    else:
        report = solve_dca(p, x0, args.mu, cfg)
    if args.trace:
        _write_trace(args.trace, report)
    line = _summary_line(report)
    header = "status,f,iter,time_s,error,feasgap"
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(header + "\n" + line + "\n")
    print(header)
    print(line)
    if report.monitor_violations:
        print("monitor violations: %d" % len(report.monitor_violations),
              file=sys.stderr)
    return _STATUS_EXIT[report.status]


def cmd_gen(args) -> int:
    p = _build_problem(args)
    if args.out:
        dump_program(p, args.out)
        print("wrote %s (dim=%d, m=%d)" % (args.out, p.dim, p.m))
    else:
        print(canonical_json(program_to_dict(p)))
    return EXIT_OK


def cmd_check(args) -> int:
    p = _build_problem(args)
    diags = validate_program(p)
    if diags:
        for d in diags:
            print("  " + d, file=sys.stderr)
        return EXIT_VALIDATION
    x = _initial_point(args, p)
    cfg = _config_from_args(args)
    feasgap = p.feasgap(x)
    om_viol = p.omega.violation(x)
    if om_viol > 1e-6:
        print("x violates the convex set by %.3e" % om_viol)
        print("feasgap %.6e" % max(feasgap, om_viol))
        return EXIT_FAIL
    residual = kkt_fixed_point_residual(p, x, cfg)
    print("kkt_fixed_point_residual %.6e" % residual)
    print("feasgap %.6e" % feasgap)
    sp_mu = None if feasgap <= 1e-8 else cfg.mu0
    from .scp_engine import build_scp_subproblem
    from .inner_solver import solve_subproblem
    try:
        sp = build_scp_subproblem(p, x, mu=sp_mu)
        sol = solve_subproblem(sp, inner_tol=cfg.inner_tol)
        lam = np.zeros(p.m)
        for j, i in enumerate(sp.constraint_origin):
            lam[i] += sol.lambda_qc[j]
        for i in range(p.m):
            gi = p.constraints[i].value(x)
            tag = "strictly-active" if lam[i] > cfg.eps else (
                "active" if abs(gi) <= 1e-6 else "inactive")
            print("  %-24s g=%+.6e lambda=%.6e %s"
                  % (p.label(i), gi, lam[i], tag))
    except Exception as exc:
        log.debug("activity report skipped: %s", exc)
    return EXIT_OK if residual <= args.eps else EXIT_FAIL


def _bench_row(writer, fh, **fields):
    writer.writerow(fields)
    fh.flush()


def cmd_bench(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    suite = args.suite
    path = os.path.join(args.out_dir, suite + ".csv")
    seeds = list(range(1, 11))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if suite == "small-example":
            names = ["case", "algorithm", "status", "f", "iter", "time_s",
                     "error", "feasgap", "monitor_violations"]
            writer = csv.DictWriter(fh, fieldnames=names)
            writer.writeheader()
            for case in (1, 2):
                p = build_small_example(case)
                cfg = SolverConfig(eps=1e-5)
                rep = solve_scp(p, np.zeros(2), cfg)
                last = rep.iterations[-1]
                _bench_row(writer, fh, case=case, algorithm="scp",
                           status=rep.status.value, f=_fmt(rep.final_f()),
                           iter=rep.iter_count, time_s="%.4f" % rep.wall_time,
                           error=_fmt(last.step_norm),
                           feasgap=_fmt(last.feasgap),
                           monitor_violations=len(rep.monitor_violations))
        elif suite == "ncvqcqp-grid":
            names = ["n", "m2", "seed", "algorithm", "status", "f", "iter",
                     "time_s", "error", "feasgap", "mu_final",
                     "monitor_violations"]
            writer = csv.DictWriter(fh, fieldnames=names)
            writer.writeheader()
            for n in (10, 30, 50):
                for m2 in (5, 10):
                    for seed in seeds:
                        p = gen_random_ncvqcqp(n, m2, seed)
                        cfg = SolverConfig(eps=1e-6, mu0=0.1,
                                           mu_update="geometric")
                        try:
                            rep = solve_rscp(p, np.zeros(n), cfg)
                        except ValidationError as exc:
                            _bench_row(writer, fh, n=n, m2=m2, seed=seed,
                                       algorithm="rscp", status="error:%s" % exc,
                                       f="nan", iter=0, time_s="0", error="nan",
                                       feasgap="nan", mu_final="nan",
                                       monitor_violations=0)
                            continue
                        last = rep.iterations[-1]
                        _bench_row(writer, fh, n=n, m2=m2, seed=seed,
                                   algorithm="rscp", status=rep.status.value,
                                   f=_fmt(rep.final_f()), iter=rep.iter_count,
                                   time_s="%.4f" % rep.wall_time,
                                   error=_fmt(last.step_norm),
                                   feasgap=_fmt(last.feasgap),
                                   mu_final=_fmt(last.mu_used),
                                   monitor_violations=len(rep.monitor_violations))
        elif suite == "mpcc-random":
            names = ["nx", "ny", "seed", "status", "f", "f_oracle", "iter",
                     "time_s", "comp_gap", "monitor_violations"]
            writer = csv.DictWriter(fh, fieldnames=names)
            writer.writeheader()
            for seed in seeds:
                d = gen_random_mpcc(args.nx, args.ny, seed)
                prog, idx = build_mpcc(d)
                try:
                    fstar, _ = mpcc_oracle(d)
                except ValueError:
                    fstar = np.nan
                cfg = SolverConfig(eps=1e-5, mu0=1.0, mu_update="geometric",
                                   max_iter=300)
                rep = solve_rscp(prog, np.zeros(prog.dim), cfg)
                x, _, z = idx.split(rep.final_x)
                _bench_row(writer, fh, nx=args.nx, ny=args.ny, seed=seed,
                           status=rep.status.value, f=_fmt(rep.final_f()),
                           f_oracle=_fmt(fstar), iter=rep.iter_count,
                           time_s="%.4f" % rep.wall_time,
                           comp_gap=_fmt(abs(float(x @ z))),
                           monitor_violations=len(rep.monitor_violations))
        elif suite == "dca-vs-scp":
            names = ["seed", "iter_scp", "iter_dca", "dca_ge_scp", "f_scp",
                     "f_dca", "status_scp", "status_dca"]
            writer = csv.DictWriter(fh, fieldnames=names)
            writer.writeheader()
            for seed in seeds:
                p = build_slow_dca_instance(3, seed)
                cfg = SolverConfig(eps=1e-5, max_iter=3000)
                rep_s = solve_scp(p, np.zeros(3), cfg)
                rep_d = solve_dca(p, np.zeros(3), 100.0, cfg)
                _bench_row(writer, fh, seed=seed, iter_scp=rep_s.iter_count,
                           iter_dca=rep_d.iter_count,
                           dca_ge_scp=rep_d.iter_count >= rep_s.iter_count,
                           f_scp=_fmt(rep_s.final_f()),
                           f_dca=_fmt(rep_d.final_f()),
                           status_scp=rep_s.status.value,
                           status_dca=rep_d.status.value)
        else:
            print("unknown suite %r" % suite, file=sys.stderr)
            return EXIT_PARSE
    print("wrote %s" % path)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scpdc",
        description="Sequential convex programming for DC-constrained programs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp_parser, with_solver=True):
        sp_parser.add_argument("--verbose", action="store_true")
        if with_solver:
            sp_parser.add_argument("--eps", type=float, default=1e-6)
            sp_parser.add_argument("--max-iter", type=int, default=100)
            sp_parser.add_argument("--mu", type=float, default=0.1)
            sp_parser.add_argument("--mu-update",
                                   choices=["fixed", "geometric"],
                                   default="fixed")
            sp_parser.add_argument("--rho", type=float, default=1e-3)
            sp_parser.add_argument("--reg",
                                   choices=["auto", "always", "never"],
                                   default="auto")
            sp_parser.add_argument("--inner-tol", type=float, default=1e-8)

    ps = sub.add_parser("solve", help="run one algorithm on one problem")
    ps.add_argument("problem", nargs="?", help="problem JSON file")
    _add_gen_args(ps)
    ps.add_argument("--algorithm", choices=["scp", "rscp", "dca"],
                    default="scp")
    ps.add_argument("--x0", default="zeros",
                    help="zeros | midpoint | comma-separated vector")
    ps.add_argument("--x0-file", help="JSON file holding the start vector")
    ps.add_argument("--trace", help="write per-iteration CSV here")
    ps.add_argument("--summary", help="write the summary line here")
    add_common(ps)
    ps.set_defaults(func=cmd_solve)

    pg = sub.add_parser("gen", help="generate a problem file")
    _add_gen_args(pg)
    pg.add_argument("--out", help="output path (stdout if omitted)")
    add_common(pg, with_solver=False)
    pg.set_defaults(func=cmd_gen)

    pc = sub.add_parser("check", help="stationarity certificate at a point")
    pc.add_argument("problem", nargs="?", help="problem JSON file")
    _add_gen_args(pc)
    pc.add_argument("--x", dest="x0", required=True,
                    help="comma-separated point to test")
    pc.add_argument("--x0-file", help="JSON file holding the point")
    add_common(pc)
    pc.set_defaults(func=cmd_check)

    pb = sub.add_parser("bench", help="run a named benchmark suite")
    pb.add_argument("suite", choices=["small-example", "ncvqcqp-grid",
                                      "mpcc-random", "dca-vs-scp"])
    pb.add_argument("out_dir", help="directory for the suite CSV")
    pb.add_argument("--nx", type=int, default=3)
    pb.add_argument("--ny", type=int, default=2)
    add_common(pb)
    pb.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    _setup_logging(getattr(args, "verbose", False))
    try:
        return args.func(args)
    except ProblemFormatError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    except RuntimeError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
