"""Dual system tests: stationarity residual, Jacobian, classical comparator."""

import math

import numpy as np
import pytest
from conftest import random_instance

from scaleshape import (
    DualPoint,
    ExponentLedger,
    SolverConfig,
    classical_dual_gradient,
    classical_dual_hessian,
    classical_dual_objective,
    dual_objective,
    eval_DF,
    eval_F,
    primal_from_dual,
    solve,
    validate,
)


def _scalar_root_instance():
    # A = 0, q = 1, c = -1, b = 3, lam = 1 has the closed-form root y = 3, tau = 1
    return validate(np.zeros((1, 1)), np.array([3.0]), np.array([-1.0]),
                    np.array([0.0]), 1.0)


def test_closed_form_root():
    P = _scalar_root_instance()
    ev = eval_F(P, DualPoint(np.array([3.0]), 1.0))
    assert ev.rho <= 1e-14


def test_tau_from_logexp_zeroes_scale_residual():
    rng = np.random.default_rng(2)
    for _ in range(10):
        P = random_instance(rng)
        y = rng.standard_normal(P.m)
        logexp = eval_F(P, DualPoint(y, 1.0)).logexp
        ev = eval_F(P, DualPoint(y, math.exp(logexp - 1.0)))
        assert abs(ev.F_tau) <= 1e-14 * max(1.0, abs(logexp))


def test_F_matches_gradient_of_dual_objective():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(10):
        P = random_instance(rng)
        z = DualPoint(rng.standard_normal(P.m), float(rng.uniform(0.5, 2.0)))
        ev = eval_F(P, z)
        scale = 1.0 + max(float(np.max(np.abs(ev.F_y))), abs(ev.F_tau))
        for i in range(P.m):
            e = np.zeros(P.m)
            e[i] = h
            fd = (dual_objective(P, DualPoint(z.y + e, z.tau))
                  - dual_objective(P, DualPoint(z.y - e, z.tau))) / (2 * h)
            assert abs(fd - ev.F_y[i]) <= 1e-5 * scale
        fd_tau = (dual_objective(P, DualPoint(z.y, z.tau + h))
                  - dual_objective(P, DualPoint(z.y, z.tau - h))) / (2 * h)
        assert abs(fd_tau - ev.F_tau) <= 1e-5 * scale


def test_DF_matches_finite_differences_of_F():
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(20):
        P = random_instance(rng)
        z = DualPoint(rng.standard_normal(P.m), float(rng.uniform(0.5, 2.0)))
        DF = eval_DF(P, z).DF
        fd = np.empty_like(DF)
        for j in range(P.m + 1):
            step_y = np.zeros(P.m)
            step_tau = 0.0
            if j < P.m:
                step_y[j] = h
            else:
                step_tau = h
            ev_p = eval_F(P, DualPoint(z.y + step_y, z.tau + step_tau))
            ev_m = eval_F(P, DualPoint(z.y - step_y, z.tau - step_tau))
            fd[:, j] = np.append((ev_p.F_y - ev_m.F_y) / (2 * h),
                                 (ev_p.F_tau - ev_m.F_tau) / (2 * h))
        gap = float(np.max(np.abs(fd - DF)))
        assert gap <= 1e-5 * (1.0 + float(np.max(np.abs(DF))))


def test_DF_corner_is_inverse_tau_exactly():
    rng = np.random.default_rng(7)
    P = random_instance(rng)
    jac = eval_DF(P, DualPoint(np.zeros(P.m), 2.0))
    assert jac.DF[P.m, P.m] == 0.5


def test_DF_symmetric():
    rng = np.random.default_rng(11)
    for _ in range(10):
        P = random_instance(rng)
        DF = eval_DF(P, DualPoint(rng.standard_normal(P.m), float(rng.uniform(0.1, 5.0)))).DF
        assert float(np.max(np.abs(DF - DF.T))) <= 1e-12


def test_DF_singular_value_bracket():
    rng = np.random.default_rng(13)
    for _ in range(20):
        P = random_instance(rng)
        tau = float(rng.uniform(0.2, 4.0))
        z = DualPoint(rng.standard_normal(P.m), tau)
        sv = np.linalg.svd(eval_DF(P, z).DF, compute_uv=False)
        k = P.constants
        lower = min(P.lam, 1.0 / tau)
        upper = k.A_max + max(P.lam + 0.5 * tau * k.A_opnorm**2, 1.0 / tau)
        assert sv[-1] >= lower - 1e-10
        assert sv[0] <= upper * (1.0 + 1e-10)


def test_dual_objective_concave_in_y():
    rng = np.random.default_rng(17)
    for _ in range(20):
        P = random_instance(rng)
        tau = float(rng.uniform(0.2, 4.0))
        y1 = rng.standard_normal(P.m)
        y2 = rng.standard_normal(P.m)
        mid = dual_objective(P, DualPoint(0.5 * (y1 + y2), tau))
        ends = 0.5 * (dual_objective(P, DualPoint(y1, tau))
                      + dual_objective(P, DualPoint(y2, tau)))
        assert mid >= ends - 1e-12 * (1.0 + abs(mid))


def test_primal_mass_equals_tau():
    rng = np.random.default_rng(19)
    for _ in range(10):
        P = random_instance(rng)
        tau = float(rng.uniform(0.1, 50.0))
        x = primal_from_dual(P, DualPoint(rng.standard_normal(P.m), tau))
        assert (x >= 0.0).all()
        assert abs(float(np.sum(x)) - tau) <= 1e-12 * tau


def test_shape_map_lipschitz():
    # ||p(y1) - p(y2)|| <= (||A|| / 2) ||y1 - y2||
    rng = np.random.default_rng(23)
    for _ in range(30):
        P = random_instance(rng)
        y1 = 3.0 * rng.standard_normal(P.m)
        y2 = 3.0 * rng.standard_normal(P.m)
        p1 = eval_F(P, DualPoint(y1, 1.0)).p
        p2 = eval_F(P, DualPoint(y2, 1.0)).p
        lhs = float(np.linalg.norm(p1 - p2))
        rhs = 0.5 * P.constants.A_opnorm * float(np.linalg.norm(y1 - y2))
        assert lhs <= rhs * (1.0 + 1e-10) + 1e-15


def test_classical_gradient_vanishes_at_scale_shape_root():
    rng = np.random.default_rng(29)
    for _ in range(5):
        P = random_instance(rng)
        rep = solve(P, SolverConfig(eps=1e-12))
        assert rep.status == "Converged"
        grad, _ = classical_dual_gradient(P, rep.z_final.y)
        assert float(np.linalg.norm(grad)) <= 1e-9 * (1.0 + P.constants.b_norm)


def test_classical_max_exponent_reported_before_exp():
    rng = np.random.default_rng(31)
    P = random_instance(rng)
    expected = float(np.max(P.r - 1.0 - P.c))
    for fn in (classical_dual_objective, classical_dual_gradient, classical_dual_hessian):
        _, max_exponent = fn(P, np.zeros(P.m))
        assert max_exponent == expected


def test_classical_overflow_saturates():
    # a huge multiplier drives the bare exponential past the float64 range
    P = validate(np.ones((1, 1)), np.array([1.0]), np.zeros(1), np.zeros(1), 1.0)
    y = np.array([800.0])
    value, max_exponent = classical_dual_objective(P, y)
    assert max_exponent > 709.0
    assert value == -math.inf
    grad, _ = classical_dual_gradient(P, y)
    assert not np.isfinite(grad).all()


def test_eval_F_instrumentation_stays_nonpositive():
    rng = np.random.default_rng(37)
    ledger = ExponentLedger()
    for _ in range(10):
        P = random_instance(rng)
        z = DualPoint(100.0 * rng.standard_normal(P.m), float(rng.uniform(0.1, 10.0)))
        eval_F(P, z, ledger)
        eval_DF(P, z, ledger)
    assert ledger.max_arg <= 0.0


def test_eval_F_point_validation():
    P = _scalar_root_instance()
    with pytest.raises(ValueError):
        eval_F(P, DualPoint(np.zeros(2), 1.0))
    with pytest.raises(ValueError):
        eval_F(P, DualPoint(np.zeros(1), 0.0))
    with pytest.raises(ValueError):
        eval_F(P, DualPoint(np.zeros(1), math.inf))
