"""Solution sensitivities, perturbation bounds, and regularization paths.

At the solution the primal point x = tau p is a smooth function of the data,
and all three Jacobians share one SPD factorization of

    Htil = lam I + tau A diag(p) A^T.

The joint perturbation bound estimates the path suprema of tau and ||y|| by
solving at a few points along the straight line between two instances; it is
an estimate exactly to the extent that sampling a supremum is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .config import SolverConfig
from .dual import DualPoint, eval_F, primal_from_dual
from .problem import ProblemData, data_fit_term, entropy_term, validate
from .solver import CONVERGED, SolveReport, solve, solve_fixed_scale


@dataclass(frozen=True)
class SolutionJacobians:
    """Derivatives of the primal solution x(b, lam, r) at a solved instance."""

    D_b: np.ndarray       # n x m
    D_lambda: np.ndarray  # n
    D_r: np.ndarray       # n x n, symmetric
    x_star: np.ndarray


def solution_jacobians(P: ProblemData, z_star: DualPoint) -> SolutionJacobians:
    """Assemble D_b x, D_lambda x, D_r x from one Cholesky factorization.

    D_b = tau diag(p) A^T Htil^{-1}, D_lambda = -D_b y, and
    D_r = tau diag(p) - tau^2 diag(p) A^T Htil^{-1} A diag(p).
    """
    ev = eval_F(P, z_star)
    p = ev.p
    tau = z_star.tau
    Ap_cols = P.A * p                      # columns A_j p_j, i.e. A diag(p)
    Htil = tau * (Ap_cols @ P.A.T)
    Htil = 0.5 * (Htil + Htil.T)
    Htil[np.diag_indices(P.m)] += P.lam
    cho = cho_factor(Htil)
    # rows of D_b: tau p_j A_j^T Htil^{-1}
    D_b = tau * cho_solve(cho, Ap_cols).T
    D_lambda = -D_b @ z_star.y
    D_r = tau * np.diag(p) - tau * (D_b @ Ap_cols)
    D_r = 0.5 * (D_r + D_r.T)
    return SolutionJacobians(D_b=D_b, D_lambda=D_lambda, D_r=D_r, x_star=tau * p)


def joint_lipschitz_bound(
    P1: ProblemData,
    P2: ProblemData,
    path_samples: int = 9,
    cfg: SolverConfig | None = None,
) -> float:
    """Bound on ||x2* - x1*|| for two instances sharing A and c.

    min( sqrt(tau_bar) / (2 sqrt(lam_min)), tau_bar ||A|| / lam_min )
      * ( ||b2 - b1|| + y_bar |lam2 - lam1| )  +  tau_bar ||r2 - r1||,

    with tau_bar and y_bar the largest solution scale and multiplier norm
    seen while solving along the straight-line path between the instances.
    """
    if P1.A.shape != P2.A.shape or not np.array_equal(P1.A, P2.A):
        raise ValueError("instances must share the design matrix A")
    if not np.array_equal(P1.c, P2.c):
        raise ValueError("instances must share the linear cost c")
    if path_samples < 2:
        raise ValueError(f"path_samples must be at least 2, got {path_samples}")
    cfg = cfg or SolverConfig(eps=1e-10)
    tau_bar = 0.0
    y_bar = 0.0
    for t in np.linspace(0.0, 1.0, path_samples):
        bt = (1.0 - t) * P1.b + t * P2.b
        lt = (1.0 - t) * P1.lam + t * P2.lam
        rt = _log_interp(P1.r, P2.r, t)
        Pt = validate(P1.A, bt, P1.c, rt, lt)
        rep = solve(Pt, cfg)
        tau_bar = max(tau_bar, rep.z_final.tau)
        y_bar = max(y_bar, float(np.linalg.norm(rep.z_final.y)))
    lam_min = min(P1.lam, P2.lam)
    gain = min(
        math.sqrt(tau_bar) / (2.0 * math.sqrt(lam_min)),
        tau_bar * P1.constants.A_opnorm / lam_min,
    )
    db = float(np.linalg.norm(P2.b - P1.b))
    dlam = abs(P2.lam - P1.lam)
    dr = float(np.linalg.norm(P2.r - P1.r))
    return gain * (db + y_bar * dlam) + tau_bar * dr


def _log_interp(r1: np.ndarray, r2: np.ndarray, t: float) -> np.ndarray:
    """Linear interpolation of log-weights; -inf entries stay -inf."""
    if t <= 0.0:
        return r1
    if t >= 1.0:
        return r2
    return (1.0 - t) * r1 + t * r2


@dataclass(frozen=True)
class PathRecord:
    """One regularization-path point: solution summary at a single lam."""

    lam: float
    x: np.ndarray
    tau: float
    residual: float      # ||A x - b||
    data_fit_h: float    # 0.5 ||A x - b||^2
    entropy_f: float     # g(x) + <c, x>
    iterations: int
    status: str


def path_monotonicity(records: list[PathRecord], eps: float) -> tuple[bool, bool]:
    """Monotonicity flags for a descending-lam path, with 10*eps slack.

    Returns (data_fit_nonincreasing, entropy_nondecreasing).  On the
    fixed-scale path both hold exactly in the limit; the slack absorbs the
    solver tolerance at each point.
    """
    h_ok = True
    f_ok = True
    for prev, cur in zip(records, records[1:]):
        slack_h = 10.0 * eps * max(1.0, abs(prev.data_fit_h), abs(cur.data_fit_h))
        slack_f = 10.0 * eps * max(1.0, abs(prev.entropy_f), abs(cur.entropy_f))
        if cur.data_fit_h > prev.data_fit_h + slack_h:
            h_ok = False
        if cur.entropy_f < prev.entropy_f - slack_f:
            f_ok = False
    return h_ok, f_ok


def regularization_path(
    P: ProblemData,
    lambdas,
    fixed_tau: float | None = None,
    warm_start: bool = True,
    cfg: SolverConfig | None = None,
) -> list[PathRecord]:
    """Solve the instance along a grid of lam values.

    With fixed_tau the scale is frozen (the constrained path whose data-fit
    term is monotone nonincreasing and whose entropy term is monotone
    nondecreasing as lam decreases); otherwise the full scale-shape solve
    runs.  Individual solve failures are recorded in-line and the sweep
    continues.
    """
    cfg = cfg or SolverConfig()
    grid = np.asarray(lambdas, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"lambda grid must be a nonempty 1-d vector, got shape {grid.shape}")
    if not (grid > 0.0).all():
        raise ValueError("lambda grid entries must be positive")
    if (np.diff(grid) >= 0.0).any():
        raise ValueError("lambda grid must be strictly descending")
    records: list[PathRecord] = []
    z_prev: DualPoint | None = None
    for lam in grid:
        Pl = validate(P.A, P.b, P.c, P.r, float(lam))
        if fixed_tau is None:
            z0 = z_prev if (warm_start and z_prev is not None) else None
            rep = solve(Pl, cfg, z0)
        else:
            y0 = z_prev.y if (warm_start and z_prev is not None) else None
            rep = solve_fixed_scale(Pl, fixed_tau, cfg, y0)
        if warm_start and rep.status == CONVERGED:
            z_prev = rep.z_final
        x = rep.x_final
        res = P.A @ x - P.b
        records.append(
            PathRecord(
                lam=float(lam),
                x=x,
                tau=rep.z_final.tau,
                residual=float(np.linalg.norm(res)),
                data_fit_h=data_fit_term(Pl, x),
                entropy_f=entropy_term(Pl, x),
                iterations=rep.iterations,
                status=rep.status,
            )
        )
    return records
