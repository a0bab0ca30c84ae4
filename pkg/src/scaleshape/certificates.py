"""Computable level-set, Jacobian, and convergence-rate certificates.

Every quantity here is a closed-form function of the data constants, the
starting merit value, and the solver configuration.  The bounds are
deliberately conservative; on badly scaled instances intermediate values such
as the scale ceiling tau_max grow like exp(beta) and overflow float64, so each
overflow-prone quantity is carried alongside its logarithm and the contraction
margin 1 - nu is assembled entirely in the log domain.  Float fields saturate
to inf (and nu to 1.0) only when the true value genuinely falls outside the
representable range; the log companions stay finite far beyond that point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .dual import DualPoint, eval_F
from .kernels import EXP_OVERFLOW, lambert_w_exp_arg
from .problem import ProblemData


class CertificateError(RuntimeError):
    """Certificate assembly produced an inconsistent value (internal bug)."""


def _log(x: float) -> float:
    if x < 0.0:
        raise ValueError(f"log of negative value {x}")
    return math.log(x) if x > 0.0 else -math.inf


def _exp(logx: float) -> float:
    if logx > EXP_OVERFLOW:
        return math.inf
    return math.exp(logx)


def _lmul(*logs: float) -> float:
    """Log of a product where a zero factor annihilates infinite cofactors."""
    if any(v == -math.inf for v in logs):
        return -math.inf
    return sum(logs)


def _ladd(*logs: float) -> float:
    """Log of a sum of nonnegative terms given by their logs."""
    acc = -math.inf
    for v in logs:
        if v == -math.inf:
            continue
        acc = np.logaddexp(acc, v)
    return float(acc)


@dataclass(frozen=True)
class LevelSetBounds:
    """Bounds on tau and ||y|| over the merit sublevel set {rho <= beta}."""

    beta: float
    tau_min_bound: float
    tau_max_bound: float
    y_max_bound: float
    log_tau_max_bound: float
    log_y_max_bound: float


def level_bounds(P: ProblemData, beta: float, floor: float = 1e-16) -> LevelSetBounds:
    """Closed-form scale and multiplier bounds for the sublevel set at beta.

    The scale ceiling is B / W(B e^theta) evaluated as exp(W - theta), which
    survives arbitrarily negative theta; the scale floor lam W(zeta) / A_max^2
    is floored to keep the safeguard positive when zeta underflows (including
    the degenerate A = 0 case, where zeta is exactly 0).
    """
    if not (beta > 0.0):
        raise ValueError(f"beta must be positive, got {beta}")
    if not (floor > 0.0):
        raise ValueError(f"floor must be positive, got {floor}")
    k = P.constants
    lam = P.lam
    theta = 1.0 - beta - k.log_q_onenorm + k.c_min
    log_B = 2.0 * _ladd(_log(beta), _log(k.b_norm)) - math.log(4.0 * lam)
    log_xi = log_B + theta
    if math.isnan(log_xi):
        # beta = inf: theta = -inf dominates the polynomial growth of B
        log_xi = -math.inf
    log_tau_max = lambert_w_exp_arg(log_xi) - theta
    tau_max = _exp(log_tau_max)

    if k.A_max == 0.0:
        tau_min_raw = 0.0
    else:
        log_zeta = (
            2.0 * math.log(k.A_max)
            + k.r_min
            - math.log(lam)
            - 1.0
            - beta
            - k.c_max
            - k.A_max * (k.b_norm + beta) / lam
        )
        w_zeta = lambert_w_exp_arg(log_zeta)
        tau_min_raw = lam * w_zeta / (k.A_max * k.A_max)
    tau_min = max(tau_min_raw, floor)

    log_y_max = _ladd(
        _log(k.b_norm),
        _lmul(log_tau_max, _log(k.A_max)),
        _log(beta),
    ) - math.log(lam)
    return LevelSetBounds(
        beta=float(beta),
        tau_min_bound=float(tau_min),
        tau_max_bound=float(tau_max),
        y_max_bound=_exp(log_y_max),
        log_tau_max_bound=float(log_tau_max),
        log_y_max_bound=float(log_y_max),
    )


def jacobian_strip_bounds(P: ProblemData, tau_lo: float, tau_hi: float) -> tuple[float, float]:
    """(L, M): sup ||DF|| and sup ||DF^{-1}|| over the strip tau in [tau_lo, tau_hi].

    L = A_max + max(lam + tau_hi ||A||^2 / 2, 1 / tau_lo) and
    M = max(1 / lam, tau_hi); the inverse bound holds pointwise for every
    tau > 0 as max(1 / lam, tau).
    """
    if not (0.0 < tau_lo <= tau_hi):
        raise ValueError(f"need 0 < tau_lo <= tau_hi, got [{tau_lo}, {tau_hi}]")
    k = P.constants
    L = k.A_max + max(P.lam + 0.5 * tau_hi * k.A_opnorm**2, 1.0 / tau_lo)
    M = max(1.0 / P.lam, tau_hi)
    return float(L), float(M)


def lipschitz_DF_bound(P: ProblemData, tau_lo: float, tau_hi: float) -> float:
    """Lipschitz constant of DF on the strip: 3 tau_hi ||A||^3 + 1.5 ||A||^2 + 1/tau_lo^2."""
    if not (0.0 < tau_lo <= tau_hi):
        raise ValueError(f"need 0 < tau_lo <= tau_hi, got [{tau_lo}, {tau_hi}]")
    a = P.constants.A_opnorm
    return 3.0 * tau_hi * a**3 + 1.5 * a**2 + 1.0 / tau_lo**2


def _log_lipschitz_DF(P: ProblemData, tau_lo: float, log_tau_hi: float) -> float:
    a = P.constants.A_opnorm
    return _ladd(
        _lmul(math.log(3.0), log_tau_hi, 3.0 * _log(a)),
        _lmul(math.log(1.5), 2.0 * _log(a)),
        -2.0 * math.log(tau_lo),
    )


def direction_bound(
    P: ProblemData, beta: float, eta_bar: float, level: LevelSetBounds | None = None
) -> float:
    """Ceiling max(1/lam, tau_max) (1 + eta_bar) beta on accepted Newton steps."""
    if level is None:
        level = level_bounds(P, beta)
    return _exp(_log_direction_bound(P, beta, eta_bar, level))


def _log_direction_bound(
    P: ProblemData, beta: float, eta_bar: float, level: LevelSetBounds
) -> float:
    if not (0.0 <= eta_bar < 1.0):
        raise ValueError(f"eta_bar must lie in [0, 1), got {eta_bar}")
    return (
        max(-math.log(P.lam), level.log_tau_max_bound)
        + math.log1p(eta_bar)
        + _log(beta)
    )


def residual_ceiling(
    P: ProblemData, beta: float, delta: float, level: LevelSetBounds | None = None
) -> float:
    """Bound on rho(z + s) for z in the beta sublevel set and ||s|| <= delta."""
    if level is None:
        level = level_bounds(P, beta)
    rho_max, _ = _residual_ceiling_with_log(P, beta, _log(delta), level)
    return rho_max


def _residual_ceiling_with_log(
    P: ProblemData, beta: float, log_delta: float, level: LevelSetBounds
) -> tuple[float, float]:
    if not (log_delta >= -math.inf):
        raise ValueError("delta must be nonnegative")
    k = P.constants
    lam = P.lam
    c_absmax = max(abs(k.c_min), abs(k.c_max))
    half_tau_min = 0.5 * level.tau_min_bound
    log_penalty = max(
        _log(abs(math.log(half_tau_min))),
        _ladd(level.log_tau_max_bound, log_delta),
    )
    log_terms = (
        # F_y ceiling: tau_max A_max + lam y_max + ||b|| + (lam + A_max) delta
        _lmul(level.log_tau_max_bound, _log(k.A_max)),
        _lmul(math.log(lam), level.log_y_max_bound),
        _log(k.b_norm),
        _lmul(_log(lam + k.A_max), log_delta),
        # F_tau ceiling: 1 + ||c||_inf + A_max (y_max + delta)
        #                + max(|log(tau_min/2)|, tau_max + delta) + |log ||q||_1|
        0.0,
        _log(c_absmax),
        _lmul(_log(k.A_max), _ladd(level.log_y_max_bound, log_delta)),
        log_penalty,
        _log(abs(k.log_q_onenorm)),
    )
    log_rho_max = _ladd(*log_terms)
    return _exp(log_rho_max), log_rho_max


@dataclass(frozen=True)
class RateCertificate:
    """A priori linear-rate certificate for the damped inexact Newton iteration.

    one_minus_nu is the per-iteration contraction margin 1 - nu; it is the
    primary quantity, assembled in the log domain.  The float companions
    nu_hat and eta_hat can round to 1.0 when the margin drops below machine
    precision, and `saturated` flags margins whose logs fell below the float64
    range entirely; neither case is an assembly error, only conservatism.
    """

    rho0: float
    beta: float
    level: LevelSetBounds
    level_hat: LevelSetBounds
    L_strip: float
    M_strip: float
    L_D: float
    log_L_D: float
    d_max: float
    log_d_max: float
    rho_max: float
    log_rho_max: float
    alpha_hat: float
    log_alpha_hat: float
    eta_hat: float
    one_minus_eta_hat: float
    alpha_star: float
    log_alpha_star: float
    alpha_hat_star: float
    log_alpha_hat_star: float
    nu_hat: float
    one_minus_nu: float
    log_one_minus_nu: float
    K_dist: float
    saturated: bool

    def iters_to_eps(self, eps: float) -> float:
        """Certified iteration count to drive the merit from rho0 to eps.

        Returns a nonnegative float, inf when the certified margin is too
        small for the bound to fit in float64.
        """
        if not (eps > 0.0):
            raise ValueError(f"eps must be positive, got {eps}")
        t = math.log(self.rho0 / eps)
        if t <= 0.0:
            return 0.0
        if self.one_minus_nu > 0.0:
            denom = -math.log1p(-self.one_minus_nu)
            return float(math.ceil(t / denom))
        if self.log_one_minus_nu == -math.inf:
            return math.inf
        log_iters = math.log(t) - self.log_one_minus_nu
        if log_iters > EXP_OVERFLOW:
            return math.inf
        return float(math.ceil(math.exp(log_iters)))


def rate_certificate(P: ProblemData, cfg: SolverConfig, z0: DualPoint) -> RateCertificate:
    """Assemble the full certificate chain for a solve started at z0.

    Chain: beta -> level bounds -> direction ceiling d_max -> residual ceiling
    beta_hat -> widened level bounds -> Jacobian Lipschitz constant L_D ->
    plain step floor alpha_star -> damped floor alpha_hat_star -> contraction
    margin mu alpha_hat_star (1 - eta_bar) alpha_hat.
    """
    rho0 = eval_F(P, z0).rho
    if not (rho0 > 0.0):
        raise ValueError("certificate is undefined at an exact root (rho(z0) = 0)")
    eta_bar = cfg.resolved_eta_bar()
    beta = cfg.beta_factor * rho0
    lv = level_bounds(P, beta, floor=cfg.tau_floor)

    log_d = _log_direction_bound(P, beta, eta_bar, lv)
    d_max = _exp(log_d)
    rho_max, log_rho_max = _residual_ceiling_with_log(P, beta, log_d, lv)

    lv_hat = level_bounds(P, rho_max, floor=cfg.tau_floor)
    L_strip, M_strip = jacobian_strip_bounds(
        P, 0.5 * lv.tau_min_bound, max(2.0 * lv.tau_max_bound, lv.tau_min_bound)
    )
    # Lipschitz constant of DF on the widened strip [tau_hat_min / 2, 2 tau_hat_max]
    log_L_D = _log_lipschitz_DF(
        P, 0.5 * lv_hat.tau_min_bound, math.log(2.0) + lv_hat.log_tau_max_bound
    )
    L_D = _exp(log_L_D)

    # provisional-step floor: conservative branch min(1, tau_min / (2 d_max))
    log_alpha_hat = min(0.0, _log(lv.tau_min_bound) - math.log(2.0) - log_d)
    alpha_hat = _exp(log_alpha_hat)
    one_minus_eta_hat = _exp(math.log1p(-eta_bar) + log_alpha_hat)
    eta_hat = 1.0 - one_minus_eta_hat

    # plain Newton step floor alpha_star = (1-mu)(1-eta_bar) / (1 + 2 L_D M_hat^2 beta)
    log_M_hat = max(-math.log(P.lam), math.log(2.0) + lv.log_tau_max_bound)
    log_denom = _ladd(0.0, _lmul(math.log(2.0), log_L_D, 2.0 * log_M_hat, _log(beta)))
    log_alpha_star = math.log1p(-cfg.mu) + math.log1p(-eta_bar) - log_denom
    alpha_star = _exp(log_alpha_star)

    log_alpha_hat_star = min(log_alpha_hat, math.log(cfg.gamma) + log_alpha_star)
    alpha_hat_star = _exp(log_alpha_hat_star)

    log_margin = (
        math.log(cfg.mu) + log_alpha_hat_star + math.log1p(-eta_bar) + log_alpha_hat
    )
    one_minus_nu = _exp(log_margin)
    nu_hat = 1.0 - one_minus_nu
    if math.isnan(log_margin) or log_margin >= 0.0 or not (nu_hat > 0.0):
        raise CertificateError(
            f"contraction margin left (0, 1): log(1 - nu) = {log_margin}"
        )

    log_K = (
        max(-math.log(P.lam), lv.log_tau_max_bound)
        + math.log1p(eta_bar)
        + _log(rho0)
        - log_margin
    )
    return RateCertificate(
        rho0=rho0,
        beta=beta,
        level=lv,
        level_hat=lv_hat,
        L_strip=L_strip,
        M_strip=M_strip,
        L_D=L_D,
        log_L_D=log_L_D,
        d_max=d_max,
        log_d_max=log_d,
        rho_max=rho_max,
        log_rho_max=log_rho_max,
        alpha_hat=alpha_hat,
        log_alpha_hat=log_alpha_hat,
        eta_hat=eta_hat,
        one_minus_eta_hat=one_minus_eta_hat,
        alpha_star=alpha_star,
        log_alpha_star=log_alpha_star,
        alpha_hat_star=alpha_hat_star,
        log_alpha_hat_star=log_alpha_hat_star,
        nu_hat=nu_hat,
        one_minus_nu=one_minus_nu,
        log_one_minus_nu=log_margin,
        K_dist=_exp(log_K),
        saturated=(one_minus_nu == 0.0),
    )
