"""Damped inexact Newton on the scale-shape dual system, plus comparators.

`solve` is the main iteration: Newton directions from a dense symmetric
indefinite factorization with one iterative-refinement pass, a provisional
step that keeps tau above half the certified scale floor, and geometric
backtracking accepted by the inexact-Newton merit test

    rho(z + alpha d) <= (1 - mu alpha (1 - eta_k)) rho(z).

`solve_fixed_scale` runs the same iteration with tau frozen, and
`solve_classical` is the single-block comparator whose bare exponentials
overflow on badly scaled data; it records the exponent a full undamped Newton
step would have reached, which is the overflow diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .certificates import RateCertificate, level_bounds, rate_certificate
from .config import SolverConfig
from .dual import (
    DualPoint,
    classical_dual_gradient,
    classical_dual_hessian,
    classical_dual_objective,
    eval_DF,
    eval_F,
    primal_from_dual,
)
from .kernels import EXP_OVERFLOW, ExponentLedger
from .problem import ProblemData

CONVERGED = "Converged"
MAX_ITERS = "MaxIters"
LINE_SEARCH_FAILURE = "LineSearchFailure"
OVERFLOW = "Overflow"


@dataclass(frozen=True)
class IterationRecord:
    """One accepted iteration: merit after the step and the step diagnostics."""

    k: int
    rho: float
    alpha: float
    alpha_bar: float
    backtracks: int
    tau: float
    eta_k: float
    max_exponent: float


@dataclass(frozen=True)
class SolveReport:
    status: str
    trace: list[IterationRecord]
    z_final: DualPoint
    x_final: np.ndarray
    certificate: RateCertificate | None
    rho0: float
    rho_final: float

    @property
    def iterations(self) -> int:
        return len(self.trace)


def _sym_solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the symmetric indefinite system M x = rhs by Bunch-Kaufman,
    with one iterative-refinement pass."""
    sytrf, sytrs = get_lapack_funcs(("sytrf", "sytrs"), (M,))
    ldu, ipiv, info = sytrf(M, lower=1)
    if info != 0:
        # singular pivot: fall back to least squares, still refined below
        x = np.linalg.lstsq(M, rhs, rcond=None)[0]
        x += np.linalg.lstsq(M, rhs - M @ x, rcond=None)[0]
        return x
    x, _ = sytrs(ldu, ipiv, rhs, lower=1)
    resid = rhs - M @ x
    dx, _ = sytrs(ldu, ipiv, resid, lower=1)
    return x + dx


def solve(
    P: ProblemData,
    cfg: SolverConfig | None = None,
    z0: DualPoint | None = None,
    observer=None,
) -> SolveReport:
    """Run the damped inexact Newton iteration from z0 (default y = 0, tau = 1).

    observer, when given, is called as observer(k, z, d) with the pre-step
    iterate and the accepted Newton direction once per iteration, before the
    line search; it exists so tests can check per-iterate bounds without
    bloating the trace records.
    """
    cfg = cfg or SolverConfig()
    if z0 is None:
        z0 = DualPoint(np.zeros(P.m), 1.0)
    ledger = ExponentLedger()
    ev = eval_F(P, z0, ledger)
    rho0 = ev.rho
    cert = rate_certificate(P, cfg, z0) if rho0 > 0.0 else None
    if rho0 <= cfg.eps:
        return SolveReport(CONVERGED, [], z0, primal_from_dual(P, z0), cert, rho0, rho0)

    beta = cfg.beta_factor * rho0
    tau_guard = 0.5 * level_bounds(P, beta, floor=cfg.tau_floor).tau_min_bound
    z, rho = z0, rho0
    trace: list[IterationRecord] = []
    status = MAX_ITERS
    m = P.m
    for k in range(cfg.max_iter):
        it_ledger = ExponentLedger()
        jac = eval_DF(P, z, it_ledger)
        Fvec = np.append(ev.F_y, ev.F_tau)
        d = _sym_solve(jac.DF, -Fvec)
        eta_k = cfg.eta_k(k, rho)
        lin_res = float(np.linalg.norm(Fvec + jac.DF @ d))
        if lin_res > max(eta_k, 1e-12) * rho:
            d += _sym_solve(jac.DF, -(Fvec + jac.DF @ d))
            lin_res = float(np.linalg.norm(Fvec + jac.DF @ d))
        if lin_res > max(eta_k, 1e-12) * rho:
            if lin_res >= rho:
                status = LINE_SEARCH_FAILURE
                break
            # direction satisfies the forcing condition only at this larger eta
            eta_k = lin_res / rho
        d_y, d_tau = d[:m], float(d[m])
        if observer is not None:
            observer(k, z, d.copy())

        if z.tau + d_tau >= tau_guard:
            alpha_bar = 1.0
        else:
            alpha_bar = (tau_guard - z.tau) / d_tau
            # rounding in the ratio can land the trial scale below the
            # safeguard (or at exactly 0 when tau >> tau_guard); back off
            # one float at a time until the trial respects it
            while alpha_bar > 0.0 and z.tau + alpha_bar * d_tau < tau_guard:
                alpha_bar = math.nextafter(alpha_bar, 0.0)
        if not (alpha_bar > 0.0):
            status = LINE_SEARCH_FAILURE
            break

        accepted = False
        alpha = alpha_bar
        z_t = z
        ev_t = ev
        backtracks = 0
        for ell in range(cfg.backtrack_max + 1):
            alpha = alpha_bar * cfg.gamma**ell
            z_t = DualPoint(z.y + alpha * d_y, z.tau + alpha * d_tau)
            ev_t = eval_F(P, z_t, it_ledger)
            if ev_t.rho <= rho + cfg.mu * alpha * (eta_k - 1.0) * rho:
                accepted = True
                backtracks = ell
                break
        if not accepted:
            status = LINE_SEARCH_FAILURE
            break

        z, ev, rho = z_t, ev_t, ev_t.rho
        trace.append(
            IterationRecord(
                k=k,
                rho=rho,
                alpha=alpha,
                alpha_bar=alpha_bar,
                backtracks=backtracks,
                tau=z.tau,
                eta_k=eta_k,
                max_exponent=it_ledger.max_arg,
            )
        )
        if rho <= cfg.eps:
            status = CONVERGED
            break
    return SolveReport(status, trace, z, primal_from_dual(P, z), cert, rho0, rho)


def solve_fixed_scale(
    P: ProblemData,
    tau_fixed: float,
    cfg: SolverConfig | None = None,
    y0: np.ndarray | None = None,
) -> SolveReport:
    """Newton on the y-block alone with tau frozen at tau_fixed.

    Solves b - lam y - tau_fixed A p(y) = 0; the resulting primal point
    tau_fixed * p(y) minimizes the objective over the scaled simplex.
    """
    cfg = cfg or SolverConfig()
    if not (tau_fixed > 0.0 and math.isfinite(tau_fixed)):
        raise ValueError(f"tau_fixed must be positive and finite, got {tau_fixed}")
    y = np.zeros(P.m) if y0 is None else np.asarray(y0, dtype=np.float64).copy()
    z = DualPoint(y, tau_fixed)
    ledger = ExponentLedger()
    ev = eval_F(P, z, ledger)
    rho = float(np.linalg.norm(ev.F_y))
    rho0 = rho
    if rho <= cfg.eps:
        return SolveReport(CONVERGED, [], z, primal_from_dual(P, z), None, rho0, rho)

    trace: list[IterationRecord] = []
    status = MAX_ITERS
    for k in range(cfg.max_iter):
        it_ledger = ExponentLedger()
        jac = eval_DF(P, z, it_ledger)
        d = _sym_solve(jac.H, -ev.F_y)
        eta_k = cfg.eta_k(k, rho)
        lin_res = float(np.linalg.norm(ev.F_y + jac.H @ d))
        if lin_res > max(eta_k, 1e-12) * rho:
            d += _sym_solve(jac.H, -(ev.F_y + jac.H @ d))
            lin_res = float(np.linalg.norm(ev.F_y + jac.H @ d))
        if lin_res > max(eta_k, 1e-12) * rho:
            if lin_res >= rho:
                status = LINE_SEARCH_FAILURE
                break
            eta_k = lin_res / rho

        accepted = False
        alpha = 1.0
        z_t = z
        ev_t = ev
        rho_t = rho
        backtracks = 0
        for ell in range(cfg.backtrack_max + 1):
            alpha = cfg.gamma**ell
            z_t = DualPoint(z.y + alpha * d, tau_fixed)
            ev_t = eval_F(P, z_t, it_ledger)
            rho_t = float(np.linalg.norm(ev_t.F_y))
            if rho_t <= rho + cfg.mu * alpha * (eta_k - 1.0) * rho:
                accepted = True
                backtracks = ell
                break
        if not accepted:
            status = LINE_SEARCH_FAILURE
            break

        z, ev, rho = z_t, ev_t, rho_t
        trace.append(
            IterationRecord(
                k=k,
                rho=rho,
                alpha=alpha,
                alpha_bar=1.0,
                backtracks=backtracks,
                tau=tau_fixed,
                eta_k=eta_k,
                max_exponent=it_ledger.max_arg,
            )
        )
        if rho <= cfg.eps:
            status = CONVERGED
            break
    return SolveReport(status, trace, z, primal_from_dual(P, z), None, rho0, rho)


def _classical_mass(P: ProblemData, y: np.ndarray) -> float:
    """Total mass of the bare-exponential primal point at y (may overflow)."""
    expo = P.r + P.A.T @ y - 1.0 - P.c
    with np.errstate(over="ignore"):
        return float(np.sum(np.exp(expo)))


def solve_classical(
    P: ProblemData, cfg: SolverConfig | None = None, y0: np.ndarray | None = None
) -> SolveReport:
    """Ascent Newton with Armijo backtracking on the classical dual value.

    Convergence is declared on ||grad|| <= eps; the line search accepts a
    trial step when the dual value rises by at least mu * alpha * <grad, d>.
    Because the dual value carries the magnitude ||b||^2 / (2 lam), its
    floating-point granularity puts a floor of roughly ||b|| * sqrt(eps_mach)
    under the reachable gradient norm; driving past that floor is what the
    scale-shape split is for.  A safeguard halves any trial step whose bare
    exponent would exceed the float64 exp() range; more than backtrack_max
    such halvings in one iteration ends the run with status Overflow.  Each
    record's max_exponent is the exponent the *full* undamped Newton step
    would have reached, reported before exponentiation.
    """
    cfg = cfg or SolverConfig()
    y = np.zeros(P.m) if y0 is None else np.asarray(y0, dtype=np.float64).copy()
    grad, _ = classical_dual_gradient(P, y)
    gn = float(np.linalg.norm(grad))
    rho0 = gn

    def report(status: str, trace: list[IterationRecord]) -> SolveReport:
        with np.errstate(over="ignore"):
            x = np.exp(P.r + P.A.T @ y - 1.0 - P.c)
        mass = float(np.sum(x))
        return SolveReport(status, trace, DualPoint(y, mass), x, None, rho0, gn)

    if not math.isfinite(gn):
        return report(OVERFLOW, [])
    if gn <= cfg.eps:
        return report(CONVERGED, [])

    trace: list[IterationRecord] = []
    status = MAX_ITERS
    for k in range(cfg.max_iter):
        H, _ = classical_dual_hessian(P, y)
        if not np.isfinite(H).all():
            status = OVERFLOW
            break
        try:
            d = _sym_solve(H, -grad)
        except np.linalg.LinAlgError:
            status = LINE_SEARCH_FAILURE
            break
        if not np.isfinite(d).all():
            status = OVERFLOW
            break

        u_y = P.r + P.A.T @ y - 1.0 - P.c
        u_d = P.A.T @ d
        full_step_exponent = float(np.max(u_y + u_d))

        alpha = 1.0
        halvings = 0
        overflowed = False
        while float(np.max(u_y + alpha * u_d)) > EXP_OVERFLOW:
            alpha *= 0.5
            halvings += 1
            if halvings > cfg.backtrack_max:
                overflowed = True
                break
        if overflowed:
            status = OVERFLOW
            break

        psi, _ = classical_dual_objective(P, y)
        slope = float(grad @ d)
        accepted = False
        y_t = y
        while halvings <= cfg.backtrack_max:
            y_t = y + alpha * d
            psi_t, _ = classical_dual_objective(P, y_t)
            if math.isfinite(psi_t) and psi_t >= psi + cfg.mu * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
            halvings += 1
        if not accepted:
            status = LINE_SEARCH_FAILURE
            break

        y = y_t
        grad, _ = classical_dual_gradient(P, y)
        gn = float(np.linalg.norm(grad))
        trace.append(
            IterationRecord(
                k=k,
                rho=gn,
                alpha=alpha,
                alpha_bar=1.0,
                backtracks=halvings,
                tau=_classical_mass(P, y),
                eta_k=0.0,
                max_exponent=full_step_exponent,
            )
        )
        if gn <= cfg.eps:
            status = CONVERGED
            break
    return report(status, trace)
