"""Shared helpers for the test suite."""

import numpy as np

from scaleshape import validate


def random_instance(rng, m_max=5, n_max=8, lam_lo=1e-3, lam_hi=1.0):
    """Small dense instance with a normalized prior and log-uniform lam."""
    m = int(rng.integers(1, m_max + 1))
    n = int(rng.integers(1, n_max + 1))
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    c = rng.standard_normal(n)
    q = rng.uniform(0.1, 1.0, n)
    r = np.log(q / np.sum(q))
    lam = float(np.exp(rng.uniform(np.log(lam_lo), np.log(lam_hi))))
    return validate(A, b, c, r, lam)
