"""Overflow-proof scalar kernels.

Weighted log-sum-exp and weighted softmax in the max-shift formulation, plus
the Lambert W function on the nonnegative axis.  These are the only places in
the package where exp() is applied to data-dependent arguments, and both
weighted kernels shift so that no argument handed to exp() is ever positive.
An optional :class:`ExponentLedger` records the largest argument actually
exponentiated, which downstream solvers surface as per-iteration diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS = float(np.finfo(np.float64).eps)

# exp() overflows float64 above this argument
EXP_OVERFLOW = math.log(np.finfo(np.float64).max)


class KernelDomainError(ValueError):
    """Input lies outside a kernel's domain (NaN, empty support, negative x)."""


@dataclass
class ExponentLedger:
    """Running maximum of every argument passed to exp() by instrumented code."""

    max_arg: float = -math.inf

    def note(self, value: float) -> None:
        if value > self.max_arg:
            self.max_arg = float(value)


# process-wide ledger covering every shifted-kernel evaluation, so a test run
# can certify afterwards that no positive argument ever reached exp()
GLOBAL_LEDGER = ExponentLedger()


def global_max_exponent() -> float:
    """Largest argument any weighted kernel has passed to exp() so far."""
    return GLOBAL_LEDGER.max_arg


def reset_global_max_exponent() -> None:
    GLOBAL_LEDGER.max_arg = -math.inf


def _weighted_exponents(u, r) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if u.ndim != 1 or r.ndim != 1 or u.shape != r.shape:
        raise ValueError(
            f"u and r must be 1-d vectors of equal length, got {u.shape} and {r.shape}"
        )
    if u.size == 0:
        raise KernelDomainError("empty vectors have no effective support")
    v = r + u
    if np.isnan(v).any():
        raise KernelDomainError("NaN in weighted exponent r + u")
    return v


def _shifted(v: np.ndarray, ledger: ExponentLedger | None):
    shift = float(np.max(v))
    if shift == -math.inf:
        raise KernelDomainError("all entries of r + u are -inf: empty effective support")
    if math.isinf(shift):
        raise KernelDomainError("+inf entry in r + u")
    # after the shift every exponent is <= 0 by construction
    d = v - shift
    worst = float(np.max(d))
    GLOBAL_LEDGER.note(worst)
    if ledger is not None:
        ledger.note(worst)
    return np.exp(d), shift


def logsumexp_w(u, r, ledger: ExponentLedger | None = None) -> float:
    """log(sum_j exp(r_j + u_j)), computed with a max shift.

    Entries with r_j + u_j = -inf are excluded from the support.  No argument
    to exp() is ever positive, so the result is finite for any finite shift.
    """
    e, shift = _shifted(_weighted_exponents(u, r), ledger)
    return shift + float(np.log(np.sum(e)))


def softmax_w(u, r, ledger: ExponentLedger | None = None) -> np.ndarray:
    """exp(r + u - logsumexp_w(u, r)) as an explicitly normalized vector.

    Returns the probability vector p with p_j proportional to exp(r_j + u_j);
    zero-weight entries (r_j = -inf) come out exactly 0.
    """
    e, _ = _shifted(_weighted_exponents(u, r), ledger)
    return e / np.sum(e)


def _halley_we(w: float, x: float) -> float:
    # Halley step for f(w) = w e^w - x, written with x e^{-w} so that
    # neither e^w nor w e^w is ever formed (overflow-proof for huge x).
    z = w - x * math.exp(-w)
    w1 = w + 1.0
    return w - z / (w1 - (w + 2.0) * z / (2.0 * w1))

def _halley_log(w: float, s: float) -> float:
    # Halley step for g(w) = w + log w - s, the log-domain form of W(e^s).
    t = w + math.log(w) - s
    w1 = w + 1.0
    return w - 2.0 * t * w * w1 / (2.0 * w1 * w1 + t)


def lambert_w(x: float) -> float:
    """Principal-branch Lambert W on [0, inf): the w >= 0 with w e^w = x.

    Initial guess log(1 + x), refined by Halley iteration (at most 8 steps).
    """
    x = float(x)
    if math.isnan(x) or math.isinf(x) or x < 0.0:
        raise KernelDomainError(f"lambert_w domain is finite [0, inf), got {x}")
    if x == 0.0:
        return 0.0
    w = math.log1p(x)
    if w == 0.0:
        # x below ~1e-308: W(x) = x to full precision
        return x
    for _ in range(8):
        w_next = _halley_we(w, x)
        if not (w_next > 0.0):
            w_next = 0.5 * w
        if abs(w_next - w) <= EPS * (2.0 + abs(w_next)):
            w = w_next
            break
        w = w_next
    return w


def lambert_w_exp_arg(s: float) -> float:
    """W(e^s) for arbitrary real s, without forming e^s.

    Safe for s far outside the float64 exponent range in both directions:
    for very negative s the value is e^s itself (to double precision), and
    for large s the defining equation w + log w = s is solved directly.
    """
    s = float(s)
    if math.isnan(s):
        raise KernelDomainError("lambert_w_exp_arg got NaN")
    if s == -math.inf:
        return 0.0
    if s == math.inf:
        return math.inf
    if s < -34.0:
        # W(e^s) = e^s (1 - e^s + ...), correction below 2^-53
        return math.exp(s)
    if s <= 700.0:
        return lambert_w(math.exp(s))
    w = s - math.log(s)
    for _ in range(8):
        w_next = _halley_log(w, s)
        if abs(w_next - w) <= EPS * (2.0 + abs(w_next)):
            w = w_next
            break
        w = w_next
    return w
