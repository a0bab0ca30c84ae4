"""Command-line interface.

Subcommands: solve, certificates, sensitivity, sweep-lambda, gen-problem, run.
The SCALESHAPE_OUT_DIR environment variable supplies the default output
directory for artifacts when a flag does not.  The exit code is 0 whenever
every requested run completed; solver statuses (including the documented
failure modes of the classical comparator) are results, not errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .certificates import RateCertificate, rate_certificate
from .config import SolverConfig
from .dual import DualPoint
from .problem import load_problem, save_problem, validate
from .sensitivity import regularization_path, solution_jacobians
from .solver import CONVERGED, SolveReport, solve, solve_classical, solve_fixed_scale
from .ueg import (
    UegSpec,
    gen_ueg,
    run_overflow_experiment,
    run_path_experiment,
    run_scale_experiment,
    unexpected_failures,
)

TRACE_COLUMNS = ["k", "rho", "alpha", "alpha_bar", "backtracks", "tau", "eta_k", "max_exponent"]


def _default_out_dir(flag_value: str | None) -> str:
    if flag_value is not None:
        return flag_value
    return os.environ.get("SCALESHAPE_OUT_DIR", ".")


def _config_from_args(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        mu=args.mu,
        gamma=args.gamma,
        eta_schedule=args.eta,
        eps=args.eps,
        max_iter=args.max_iter,
    )


def _add_solver_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="override the instance's regularization weight")
    sp.add_argument("--mu", type=float, default=0.49)
    sp.add_argument("--gamma", type=float, default=0.5)
    sp.add_argument("--eps", type=float, default=1e-8)
    sp.add_argument("--max-iter", type=int, default=300)
    sp.add_argument("--eta", default="exact",
                    help="forcing schedule: exact, const:<c>, or power:<p>")


def _override_lambda(P, lam: float | None):
    if lam is None:
        return P
    return validate(P.A, P.b, P.c, P.r, lam)


def write_trace_csv(report: SolveReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in report.trace:
            writer.writerow(
                [rec.k, repr(rec.rho), repr(rec.alpha), repr(rec.alpha_bar),
                 rec.backtracks, repr(rec.tau), repr(rec.eta_k), repr(rec.max_exponent)]
            )


def _print_report(report: SolveReport) -> None:
    print(f"status      : {report.status}")
    print(f"iterations  : {report.iterations}")
    print(f"rho_0       : {report.rho0:.6e}")
    print(f"rho_final   : {report.rho_final:.6e}")
    print(f"tau_final   : {report.z_final.tau:.10e}")
    print(f"mass ||x||_1: {float(np.sum(report.x_final)):.10e}")
    if report.certificate is not None:
        cert = report.certificate
        print(f"certified contraction margin 1-nu: {cert.one_minus_nu:.3e} "
              f"(log {cert.log_one_minus_nu:.6g})")


def _cmd_solve(args: argparse.Namespace) -> int:
    P = _override_lambda(load_problem(args.problem), args.lam)
    cfg = _config_from_args(args)
    if args.method == "classical":
        report = solve_classical(P, cfg)
    elif args.fixed_tau is not None:
        report = solve_fixed_scale(P, args.fixed_tau, cfg)
    else:
        z0 = DualPoint(np.zeros(P.m), args.tau0)
        report = solve(P, cfg, z0)
    _print_report(report)
    if args.trace is not None:
        write_trace_csv(report, args.trace)
        print(f"trace      -> {args.trace}")
    return 0


def _certificate_rows(cert: RateCertificate, eps: float) -> list[tuple[str, str]]:
    lv, lvh = cert.level, cert.level_hat
    iters = cert.iters_to_eps(eps)
    return [
        ("rho0", f"{cert.rho0:.6e}"),
        ("beta", f"{cert.beta:.6e}"),
        ("tau_min_bound", f"{lv.tau_min_bound:.6e}"),
        ("tau_max_bound", f"{lv.tau_max_bound:.6e}"),
        ("log_tau_max_bound", f"{lv.log_tau_max_bound:.6e}"),
        ("y_max_bound", f"{lv.y_max_bound:.6e}"),
        ("L_strip", f"{cert.L_strip:.6e}"),
        ("M_strip", f"{cert.M_strip:.6e}"),
        ("d_max", f"{cert.d_max:.6e}"),
        ("rho_max", f"{cert.rho_max:.6e}"),
        ("tau_min_bound_hat", f"{lvh.tau_min_bound:.6e}"),
        ("log_tau_max_bound_hat", f"{lvh.log_tau_max_bound:.6e}"),
        ("L_D", f"{cert.L_D:.6e}"),
        ("log_L_D", f"{cert.log_L_D:.6e}"),
        ("alpha_hat", f"{cert.alpha_hat:.6e}"),
        ("eta_hat", f"{cert.eta_hat:.17g}"),
        ("alpha_star", f"{cert.alpha_star:.6e}"),
        ("alpha_hat_star", f"{cert.alpha_hat_star:.6e}"),
        ("nu_hat", f"{cert.nu_hat:.17g}"),
        ("one_minus_nu", f"{cert.one_minus_nu:.6e}"),
        ("log_one_minus_nu", f"{cert.log_one_minus_nu:.6e}"),
        ("K_dist", f"{cert.K_dist:.6e}"),
        (f"iters_to_eps({eps:g})", f"{iters:g}"),
        ("saturated", str(cert.saturated)),
    ]


def _cmd_certificates(args: argparse.Namespace) -> int:
    P = _override_lambda(load_problem(args.problem), args.lam)
    cfg = SolverConfig(
        mu=args.mu, gamma=args.gamma, eta_schedule=args.eta,
        eps=args.eps, max_iter=args.max_iter, beta_factor=args.beta_factor,
    )
    z0 = DualPoint(np.zeros(P.m), args.tau0)
    cert = rate_certificate(P, cfg, z0)
    rows = _certificate_rows(cert, args.eps)
    width = max(len(k) for k, _ in rows)
    for key, val in rows:
        print(f"{key:<{width}}  {val}")
    if args.json is not None:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({k: v for k, v in rows}, fh, indent=2)
            fh.write("\n")
        print(f"certificate -> {args.json}")
    return 0


def _cmd_sensitivity(args: argparse.Namespace) -> int:
    P = _override_lambda(load_problem(args.problem), args.lam)
    cfg = SolverConfig(eps=1e-10, max_iter=300)
    rep = solve(P, cfg)
    print(f"solve status: {rep.status} in {rep.iterations} iterations")
    if rep.status != CONVERGED:
        print("sensitivities need a converged solution; aborting", file=sys.stderr)
        return 1
    jac = solution_jacobians(P, rep.z_final)
    tau = rep.z_final.tau
    k = P.constants
    norm_Db = float(np.linalg.norm(jac.D_b, 2))
    norm_Dr = float(np.linalg.norm(jac.D_r, 2))
    bound_Db = min(math.sqrt(tau) / (2.0 * math.sqrt(P.lam)), tau * k.A_opnorm / P.lam)
    identity_gap = float(np.linalg.norm(jac.D_lambda + jac.D_b @ rep.z_final.y))
    print(f"tau*                 : {tau:.10e}")
    print(f"||D_b||_2            : {norm_Db:.6e}  (bound {bound_Db:.6e})")
    print(f"||D_r||_2            : {norm_Dr:.6e}  (bound {tau:.6e})")
    print(f"||D_lam + D_b y*||   : {identity_gap:.3e}")
    if args.check_fd:
        gaps = _fd_check(P, rep, jac)
        for name, gap in gaps.items():
            print(f"fd check {name:<9}: max rel err {gap:.3e}")
    return 0


def _fd_check(P, rep: SolveReport, jac) -> dict[str, float]:
    """Central-difference re-solve checks of the three solution derivatives."""
    cfg = SolverConfig(eps=1e-12, max_iter=300)
    rng = np.random.default_rng(7)
    scale = float(np.linalg.norm(jac.x_star)) or 1.0
    out: dict[str, float] = {}

    h = 1e-5 * (1.0 + float(np.linalg.norm(P.b)))
    gaps = []
    for _ in range(3):
        db = rng.standard_normal(P.m)
        db /= np.linalg.norm(db)
        xp = solve(validate(P.A, P.b + h * db, P.c, P.r, P.lam), cfg, rep.z_final).x_final
        xm = solve(validate(P.A, P.b - h * db, P.c, P.r, P.lam), cfg, rep.z_final).x_final
        fd = (xp - xm) / (2.0 * h)
        gaps.append(float(np.linalg.norm(jac.D_b @ db - fd)) / scale)
    out["D_b"] = max(gaps)

    h = 1e-5 * P.lam
    xp = solve(validate(P.A, P.b, P.c, P.r, P.lam + h), cfg, rep.z_final).x_final
    xm = solve(validate(P.A, P.b, P.c, P.r, P.lam - h), cfg, rep.z_final).x_final
    fd = (xp - xm) / (2.0 * h)
    out["D_lambda"] = float(np.linalg.norm(jac.D_lambda - fd)) / scale

    h = 1e-5
    gaps = []
    for _ in range(3):
        dr = rng.standard_normal(P.n)
        dr /= np.linalg.norm(dr)
        xp = solve(validate(P.A, P.b, P.c, P.r + h * dr, P.lam), cfg, rep.z_final).x_final
        xm = solve(validate(P.A, P.b, P.c, P.r - h * dr, P.lam), cfg, rep.z_final).x_final
        fd = (xp - xm) / (2.0 * h)
        gaps.append(float(np.linalg.norm(jac.D_r @ dr - fd)) / scale)
    out["D_r"] = max(gaps)
    return out


def _cmd_sweep_lambda(args: argparse.Namespace) -> int:
    P = load_problem(args.problem)
    lambdas = np.logspace(math.log10(args.lam_from), math.log10(args.lam_to), args.points)
    cfg = SolverConfig(eps=args.eps, max_iter=args.max_iter)
    records = regularization_path(P, lambdas, fixed_tau=args.fixed_tau, cfg=cfg)
    b_norm = float(np.linalg.norm(P.b)) or 1.0
    out = args.out
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "residual", "rel_residual", "h", "f", "tau",
                         "iterations", "status"])
        for rec in records:
            writer.writerow(
                [repr(rec.lam), repr(rec.residual), repr(rec.residual / b_norm),
                 repr(rec.data_fit_h), repr(rec.entropy_f), repr(rec.tau),
                 rec.iterations, rec.status]
            )
    print(f"sweep ({len(records)} points) -> {out}")
    return 0


def _cmd_gen_problem(args: argparse.Namespace) -> int:
    spec = UegSpec(
        m=args.m, n=args.n, beta_temp=args.beta_temp,
        omega_min=args.omega_min, omega_max=args.omega_max,
        scale_Z=args.scale, noise_rel=args.noise, seed=args.seed,
    )
    P, _ = gen_ueg(spec, lam=args.lam if args.lam is not None else 1e-5)
    save_problem(P, args.out)
    print(f"problem ({P.m}x{P.n}, Z={args.scale:g}) -> {args.out}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    out_dir = _default_out_dir(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    runner = {
        "overflow": run_overflow_experiment,
        "scale": run_scale_experiment,
        "path": run_path_experiment,
    }[args.experiment]
    tables = runner(out_dir=out_dir, seed=args.seed)
    for row in tables[args.experiment]:
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    print(f"tables -> {out_dir}")
    bad = unexpected_failures(args.experiment, tables)
    for line in bad:
        print(f"unexpected failure: {line}", file=sys.stderr)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="scaleshape",
        description="Entropy-regularized nonnegative least squares via the scale-shape dual",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve a problem instance")
    sp.add_argument("problem")
    _add_solver_flags(sp)
    sp.add_argument("--tau0", type=float, default=1.0)
    sp.add_argument("--fixed-tau", dest="fixed_tau", type=float, default=None)
    sp.add_argument("--method", choices=["scale-shape", "classical"], default="scale-shape")
    sp.add_argument("--trace", default=None, help="write the iteration trace CSV here")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("certificates", help="print the convergence certificate table")
    sp.add_argument("problem")
    _add_solver_flags(sp)
    sp.add_argument("--tau0", type=float, default=1.0)
    sp.add_argument("--beta-factor", dest="beta_factor", type=float, default=1.5)
    sp.add_argument("--json", default=None, help="also write the table as JSON")
    sp.set_defaults(func=_cmd_certificates)

    sp = sub.add_parser("sensitivity", help="solution derivatives and their bounds")
    sp.add_argument("problem")
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--check-fd", action="store_true",
                    help="compare against finite-difference re-solves")
    sp.set_defaults(func=_cmd_sensitivity)

    sp = sub.add_parser("sweep-lambda", help="regularization path over a lambda grid")
    sp.add_argument("problem")
    sp.add_argument("--from", dest="lam_from", type=float, required=True)
    sp.add_argument("--to", dest="lam_to", type=float, required=True)
    sp.add_argument("--points", type=int, default=15)
    sp.add_argument("--fixed-tau", dest="fixed_tau", type=float, default=None)
    sp.add_argument("--eps", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=300)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_sweep_lambda)

    sp = sub.add_parser("gen-problem", help="generate a synthetic test instance")
    sp.add_argument("--out", required=True)
    sp.add_argument("--m", type=int, default=201)
    sp.add_argument("--n", type=int, default=500)
    sp.add_argument("--beta-temp", dest="beta_temp", type=float, default=18.68)
    sp.add_argument("--omega-min", dest="omega_min", type=float, default=4e-3)
    sp.add_argument("--omega-max", dest="omega_max", type=float, default=4.0)
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--noise", type=float, default=1e-4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.set_defaults(func=_cmd_gen_problem)

    sp = sub.add_parser("run", help="run a packaged experiment")
    sp.add_argument("experiment", choices=["overflow", "scale", "path"])
    sp.add_argument("--out-dir", dest="out_dir", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
