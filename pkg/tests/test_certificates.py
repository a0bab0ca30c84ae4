"""Level-set, Jacobian, and contraction certificates against closed forms and oracles."""

import math

import numpy as np
import pytest

from conftest import random_instance
from scaleshape import (
    DualPoint,
    SolverConfig,
    direction_bound,
    eval_DF,
    eval_F,
    jacobian_strip_bounds,
    level_bounds,
    lipschitz_DF_bound,
    rate_certificate,
    residual_ceiling,
    solve,
    validate,
)

# 0.25 / W(0.25), mpmath lambertw at 40 digits
TAU_MAX_TRIVIAL = 1.226161250676143678570907


def _zero_operator_instance(b0=0.0):
    # A = 0 collapses every bound to a hand-checkable closed form
    return validate(
        np.zeros((1, 1)), np.array([float(b0)]), np.zeros(1), np.zeros(1), 1.0
    )


def test_level_bounds_zero_operator_closed_form():
    P = _zero_operator_instance()
    lv = level_bounds(P, beta=1.0)
    assert lv.beta == 1.0
    # theta = 0, B = 1/4, ceiling = B / W(B)
    assert abs(lv.tau_max_bound - TAU_MAX_TRIVIAL) <= 1e-12 * TAU_MAX_TRIVIAL
    assert abs(lv.log_tau_max_bound - math.log(TAU_MAX_TRIVIAL)) <= 1e-12
    # A = 0 forces the raw scale floor to 0, so the safeguard floor takes over
    assert lv.tau_min_bound == 1e-16
    assert abs(lv.y_max_bound - 1.0) <= 1e-12


def test_level_bounds_floor_and_domain():
    P = _zero_operator_instance()
    lv = level_bounds(P, beta=1.0, floor=1e-8)
    assert lv.tau_min_bound == 1e-8
    with pytest.raises(ValueError, match="beta"):
        level_bounds(P, beta=0.0)
    with pytest.raises(ValueError, match="beta"):
        level_bounds(P, beta=-1.0)
    with pytest.raises(ValueError, match="floor"):
        level_bounds(P, beta=1.0, floor=0.0)


def test_level_bounds_monotone_in_beta():
    rng = np.random.default_rng(101)
    for _ in range(10):
        P = random_instance(rng)
        betas = [0.25, 0.5, 1.0, 2.0, 8.0]
        lvs = [level_bounds(P, b) for b in betas]
        for lo, hi in zip(lvs, lvs[1:]):
            assert hi.tau_max_bound >= lo.tau_max_bound
            assert hi.y_max_bound >= lo.y_max_bound
            assert hi.tau_min_bound <= lo.tau_min_bound


def test_level_bounds_bracket_solved_roots():
    # solve-then-check: the root of every converged instance must sit inside
    # the brackets computed from the starting residual
    rng = np.random.default_rng(17)
    z0 = None
    checked = 0
    for _ in range(50):
        P = random_instance(rng)
        z0 = DualPoint(np.zeros(P.m), 1.0)
        beta = 1.5 * eval_F(P, z0).rho
        lv = level_bounds(P, beta)
        rep = solve(P, SolverConfig(eps=1e-10), z0=z0)
        if rep.status != "Converged":
            continue
        checked += 1
        zf = rep.z_final
        assert lv.tau_min_bound <= zf.tau * (1.0 + 1e-12)
        assert zf.tau <= lv.tau_max_bound * (1.0 + 1e-12)
        assert float(np.linalg.norm(zf.y)) <= lv.y_max_bound * (1.0 + 1e-12)
    assert checked >= 40


def test_jacobian_strip_bounds_closed_form():
    P = _zero_operator_instance()
    L, M = jacobian_strip_bounds(P, 1.0, 1.0)
    assert L == 1.0
    assert M == 1.0
    L2, M2 = jacobian_strip_bounds(P, 0.5, 2.0)
    assert L2 == 2.0
    assert M2 == 2.0


def test_jacobian_strip_bounds_domain():
    P = _zero_operator_instance()
    with pytest.raises(ValueError):
        jacobian_strip_bounds(P, 0.0, 1.0)
    with pytest.raises(ValueError):
        jacobian_strip_bounds(P, 2.0, 1.0)
    with pytest.raises(ValueError):
        lipschitz_DF_bound(P, -1.0, 1.0)


def test_jacobian_strip_bounds_dense_oracle():
    # ||DF|| <= L and ||DF^{-1}|| <= M pointwise for tau inside the strip
    rng = np.random.default_rng(19)
    tau_lo, tau_hi = 0.05, 20.0
    for _ in range(20):
        P = random_instance(rng)
        L, M = jacobian_strip_bounds(P, tau_lo, tau_hi)
        y = rng.standard_normal(P.m) * rng.uniform(0.1, 3.0)
        tau = float(np.exp(rng.uniform(np.log(tau_lo), np.log(tau_hi))))
        J = eval_DF(P, DualPoint(y, tau)).DF
        sv = np.linalg.svd(J, compute_uv=False)
        assert sv[0] <= L * (1.0 + 1e-10)
        assert sv[-1] >= (1.0 / M) * (1.0 - 1e-10)


def test_lipschitz_DF_closed_form_and_monotone():
    P = _zero_operator_instance()
    assert lipschitz_DF_bound(P, 1.0, 2.0) == 1.0
    rng = np.random.default_rng(23)
    Q = random_instance(rng)
    assert lipschitz_DF_bound(Q, 0.5, 2.0) <= lipschitz_DF_bound(Q, 0.25, 2.0)
    assert lipschitz_DF_bound(Q, 0.5, 2.0) <= lipschitz_DF_bound(Q, 0.5, 4.0)


def test_lipschitz_DF_difference_quotient_oracle():
    # ||DF(z1) - DF(z2)|| / ||z1 - z2|| stays under the strip constant
    rng = np.random.default_rng(29)
    tau_lo, tau_hi = 0.5, 2.0
    for _ in range(20):
        P = random_instance(rng)
        L_D = lipschitz_DF_bound(P, tau_lo, tau_hi)
        y1 = rng.standard_normal(P.m)
        y2 = y1 + 0.1 * rng.standard_normal(P.m)
        t1 = float(rng.uniform(tau_lo, tau_hi))
        t2 = float(rng.uniform(tau_lo, tau_hi))
        J1 = eval_DF(P, DualPoint(y1, t1)).DF
        J2 = eval_DF(P, DualPoint(y2, t2)).DF
        gap = float(np.linalg.norm(J1 - J2, 2))
        dist = math.hypot(float(np.linalg.norm(y1 - y2)), t1 - t2)
        assert gap <= L_D * dist * (1.0 + 1e-8) + 1e-14


def test_direction_bound_closed_form():
    # with lam = 1, b = 0, beta = 1/2 the scale ceiling stays below 1, so the
    # prefactor collapses and the bound equals beta itself
    P = _zero_operator_instance()
    lv = level_bounds(P, 0.5)
    assert lv.tau_max_bound < 1.0
    assert abs(direction_bound(P, 0.5, 0.0) - 0.5) <= 1e-12
    assert abs(direction_bound(P, 0.25, 0.0) - 0.25) <= 1e-12
    # eta_bar scales the ceiling by 1 + eta_bar
    assert abs(direction_bound(P, 0.5, 0.5) - 0.75) <= 1e-12


def test_direction_bound_domain():
    P = _zero_operator_instance()
    with pytest.raises(ValueError, match="eta_bar"):
        direction_bound(P, 1.0, 1.0)
    with pytest.raises(ValueError, match="eta_bar"):
        direction_bound(P, 1.0, -0.1)


def test_residual_ceiling_zero_operator_closed_form():
    P = _zero_operator_instance()
    lv = level_bounds(P, 1.0)
    # F_y piece: lam y_max; F_tau piece: 1 + |log(tau_min/2)|; delta adds
    # (lam + A_max) delta while the log penalty stays on the floor branch
    for delta in (0.0, 0.25):
        expected = 1.0 + delta + 1.0 + abs(math.log(0.5 * lv.tau_min_bound))
        got = residual_ceiling(P, 1.0, delta)
        assert abs(got - expected) <= 1e-12 * expected


def test_residual_ceiling_monotone_in_delta():
    rng = np.random.default_rng(31)
    P = random_instance(rng)
    vals = [residual_ceiling(P, 1.0, d) for d in (0.0, 0.1, 1.0, 10.0)]
    for lo, hi in zip(vals, vals[1:]):
        assert hi >= lo
    with pytest.raises(ValueError):
        residual_ceiling(P, 1.0, -1.0)


def test_residual_ceiling_sampling_oracle():
    # perturb sublevel-set iterates by ||s|| <= delta (scale clipped to the
    # half-floor) and confirm the merit never exceeds the ceiling
    rng = np.random.default_rng(37)
    delta = 0.5
    for _ in range(10):
        P = random_instance(rng)
        z0 = DualPoint(np.zeros(P.m), 1.0)
        beta = 1.5 * eval_F(P, z0).rho
        lv = level_bounds(P, beta)
        rho_max = residual_ceiling(P, beta, delta, level=lv)
        rep = solve(P, SolverConfig(eps=1e-8), z0=z0)
        iterates = [z0, rep.z_final]
        for z in iterates:
            for _ in range(5):
                s = rng.standard_normal(P.m + 1)
                s *= delta * rng.uniform(0.0, 1.0) / float(np.linalg.norm(s))
                tau_t = max(z.tau + float(s[-1]), 0.5 * lv.tau_min_bound)
                rho = eval_F(P, DualPoint(z.y + s[:-1], tau_t)).rho
                assert rho <= rho_max * (1.0 + 1e-12)


def test_rate_certificate_random_suite():
    # tiny lam draws legitimately saturate the float margin; the log-domain
    # margin must stay finite and negative either way
    rng = np.random.default_rng(23)
    cfg = SolverConfig()
    unsaturated = 0
    for _ in range(20):
        P = random_instance(rng)
        z0 = DualPoint(np.zeros(P.m), 1.0)
        cert = rate_certificate(P, cfg, z0)
        assert math.isfinite(cert.log_one_minus_nu)
        assert cert.log_one_minus_nu < 0.0
        assert 0.0 < cert.nu_hat <= 1.0
        assert cert.one_minus_nu >= 0.0
        if cert.saturated:
            assert cert.one_minus_nu == 0.0
            assert cert.nu_hat == 1.0
        else:
            unsaturated += 1
            assert cert.one_minus_nu > 0.0
        assert cert.alpha_hat <= 1.0
        assert cert.alpha_star < 1.0
        assert cert.alpha_hat_star <= cert.alpha_hat * (1.0 + 1e-15)
        assert cert.K_dist > 0.0
        assert cert.iters_to_eps(cert.rho0) == 0.0
        assert cert.iters_to_eps(1e-8) >= 1.0
    assert unsaturated >= 1


def test_rate_certificate_chain_consistency():
    rng = np.random.default_rng(41)
    P = random_instance(rng)
    cfg = SolverConfig()
    z0 = DualPoint(np.zeros(P.m), 1.0)
    cert = rate_certificate(P, cfg, z0)
    assert cert.beta == cfg.beta_factor * cert.rho0
    lv = level_bounds(P, cert.beta, floor=cfg.tau_floor)
    assert cert.level.tau_max_bound == lv.tau_max_bound
    d = direction_bound(P, cert.beta, cfg.resolved_eta_bar(), level=lv)
    assert abs(cert.d_max - d) <= 1e-12 * d
    r = residual_ceiling(P, cert.beta, cert.d_max, level=lv)
    assert abs(cert.rho_max - r) <= 1e-12 * r
    # the widened level set is computed at the post-step residual ceiling
    assert cert.level_hat.beta == cert.rho_max
    assert cert.nu_hat == 1.0 - cert.one_minus_nu


def test_rate_certificate_exact_root_rejected():
    # closed-form root: zero operator, unit prior, c = -1, b = 3, lam = 1
    P = validate(
        np.zeros((1, 1)), np.array([3.0]), -np.ones(1), np.zeros(1), 1.0
    )
    root = DualPoint(np.array([3.0]), 1.0)
    assert eval_F(P, root).rho == 0.0
    with pytest.raises(ValueError, match="root"):
        rate_certificate(P, SolverConfig(), root)


def test_iters_to_eps_domain():
    rng = np.random.default_rng(43)
    P = random_instance(rng)
    cert = rate_certificate(P, SolverConfig(), DualPoint(np.zeros(P.m), 1.0))
    with pytest.raises(ValueError, match="eps"):
        cert.iters_to_eps(0.0)
    with pytest.raises(ValueError, match="eps"):
        cert.iters_to_eps(-1e-8)
