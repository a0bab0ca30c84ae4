"""The dual system in (y, tau) and its Jacobian, plus the classical dual.

The scale-shape dual objective is

    phi(y, tau) = <b, y> - (lam/2) ||y||^2 - tau * L(y) + tau * log tau,

with L(y) = logsumexp_w(A^T y - c, r).  Its stationarity system is

    F_y(y, tau) = b - lam * y - tau * A p(y)
    F_tau(y, tau) = -L(y) + log tau + 1,

where p(y) = softmax_w(A^T y - c, r).  F is evaluated entirely through the
shifted kernels, so no positive argument ever reaches exp().  The classical
dual gradient below keeps its bare exponentials on purpose: it is the
comparator whose overflow the scale-shape split removes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import ExponentLedger, logsumexp_w, softmax_w
from .problem import ProblemData


@dataclass(frozen=True)
class DualPoint:
    """A dual iterate: multiplier y in R^m and total mass tau > 0."""

    y: np.ndarray
    tau: float


@dataclass(frozen=True)
class SystemEval:
    """F at a dual point, with the shape vector and logexp value reused by callers."""

    F_y: np.ndarray
    F_tau: float
    rho: float        # 2-norm of the stacked (m+1)-vector (F_y, F_tau)
    p: np.ndarray
    logexp: float


@dataclass(frozen=True)
class JacobianEval:
    """DF at a dual point: symmetric (m+1) x (m+1), with the diagonal blocks."""

    DF: np.ndarray
    H: np.ndarray     # upper-left m x m block, -lam I - tau A S A^T
    g: np.ndarray     # coupling column, -A p


def _check_point(P: ProblemData, z: DualPoint) -> None:
    if z.y.shape != (P.m,):
        raise ValueError(f"y must have shape ({P.m},), got {z.y.shape}")
    if not (z.tau > 0.0 and math.isfinite(z.tau)):
        raise ValueError(f"tau must be positive and finite, got {z.tau}")


def eval_F(P: ProblemData, z: DualPoint, ledger: ExponentLedger | None = None) -> SystemEval:
    """Evaluate the stationarity system F at z through the shifted kernels."""
    _check_point(P, z)
    u = P.A.T @ z.y - P.c
    logexp = logsumexp_w(u, P.r, ledger)
    p = softmax_w(u, P.r, ledger)
    F_y = P.b - P.lam * z.y - z.tau * (P.A @ p)
    F_tau = -logexp + math.log(z.tau) + 1.0
    rho = math.hypot(float(np.linalg.norm(F_y)), F_tau)
    return SystemEval(F_y=F_y, F_tau=float(F_tau), rho=rho, p=p, logexp=float(logexp))


def eval_DF(P: ProblemData, z: DualPoint, ledger: ExponentLedger | None = None) -> JacobianEval:
    """Assemble DF(z) in factored form A diag(p) A^T - (A p)(A p)^T."""
    _check_point(P, z)
    u = P.A.T @ z.y - P.c
    p = softmax_w(u, P.r, ledger)
    Ap = P.A @ p
    AWA = (P.A * p) @ P.A.T
    S_mat = 0.5 * (AWA + AWA.T) - np.outer(Ap, Ap)
    m = P.m
    H = -z.tau * S_mat
    H[np.diag_indices(m)] -= P.lam
    DF = np.empty((m + 1, m + 1), dtype=np.float64)
    DF[:m, :m] = H
    DF[:m, m] = -Ap
    DF[m, :m] = -Ap
    DF[m, m] = 1.0 / z.tau
    return JacobianEval(DF=DF, H=H, g=-Ap)


def dual_objective(P: ProblemData, z: DualPoint, ledger: ExponentLedger | None = None) -> float:
    """phi(y, tau); concave in y for fixed tau and everywhere overflow-proof."""
    _check_point(P, z)
    u = P.A.T @ z.y - P.c
    logexp = logsumexp_w(u, P.r, ledger)
    y_part = float(P.b @ z.y) - 0.5 * P.lam * float(z.y @ z.y)
    return y_part - z.tau * logexp + z.tau * math.log(z.tau)


def primal_from_dual(P: ProblemData, z: DualPoint, ledger: ExponentLedger | None = None) -> np.ndarray:
    """x = tau * p(y): the primal point the dual pair encodes."""
    _check_point(P, z)
    u = P.A.T @ z.y - P.c
    return z.tau * softmax_w(u, P.r, ledger)


def classical_dual_objective(P: ProblemData, y: np.ndarray) -> tuple[float, float]:
    """Classical single-block dual value, evaluated with bare exponentials.

    Returns (value, max_exponent).  The mass term sum(exp(r + A^T y - 1 - c))
    saturates to +inf past the float64 exp() range, so the value saturates to
    -inf; callers treat that as a rejected trial point.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (P.m,):
        raise ValueError(f"y must have shape ({P.m},), got {y.shape}")
    expo = P.r + P.A.T @ y - 1.0 - P.c
    max_exponent = float(np.max(expo))
    with np.errstate(over="ignore"):
        mass = float(np.sum(np.exp(expo)))
    value = float(P.b @ y) - 0.5 * P.lam * float(y @ y) - mass
    return value, max_exponent


def classical_dual_gradient(P: ProblemData, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Gradient of the classical single-block dual, with its bare exponential.

    Returns (grad, max_exponent) where max_exponent = max_j (r + A^T y - 1 - c)_j
    is reported before exponentiation.  Above the float64 exp() range the
    overflowed entries saturate to +inf and the caller observes a non-finite
    gradient; that failure mode is the point of the comparator.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (P.m,):
        raise ValueError(f"y must have shape ({P.m},), got {y.shape}")
    expo = P.r + P.A.T @ y - 1.0 - P.c
    max_exponent = float(np.max(expo))
    with np.errstate(over="ignore"):
        w = np.exp(expo)
    grad = P.b - P.lam * y - P.A @ w
    return grad, max_exponent


def classical_dual_hessian(P: ProblemData, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Hessian -lam I - A diag(w) A^T of the classical dual, bare exponentials."""
    y = np.asarray(y, dtype=np.float64)
    expo = P.r + P.A.T @ y - 1.0 - P.c
    max_exponent = float(np.max(expo))
    with np.errstate(over="ignore"):
        w = np.exp(expo)
    H = -(P.A * w) @ P.A.T
    H[np.diag_indices(P.m)] -= P.lam
    return H, max_exponent
