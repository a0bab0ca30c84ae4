"""Problem data, validation, prior handling, and scale-shape splitting.

A problem instance is min_x (1/(2*lam)) ||A x - b||^2 + <c, x> + g(x) over
x >= 0, where g(x) = sum_j x_j log(x_j / q_j) is relative entropy against a
prior weight vector q.  The prior is stored exclusively as log-weights
r = log q so that priors with entries far below the float64 underflow
threshold remain usable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .kernels import logsumexp_w

PRIOR_FLOOR = 1e-16


class ValidationError(ValueError):
    """A problem field violates its contract; the message names the field."""


@dataclass(frozen=True)
class DataConstants:
    """Scalar summaries of a problem instance used by bounds and certificates."""

    A_max: float      # max column 2-norm
    A_opnorm: float   # spectral norm
    b_norm: float
    c_min: float
    c_max: float
    q_min: float      # smallest prior weight, exp(min r); may underflow to 0
    q_onenorm: float  # sum of prior weights
    r_min: float      # min r, the log of q_min without underflow
    log_q_onenorm: float


@dataclass(frozen=True)
class ProblemData:
    """Validated immutable problem instance; construct through validate()."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    r: np.ndarray   # log prior weights, entries in [-inf, inf)
    lam: float

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @cached_property
    def constants(self) -> DataConstants:
        return data_constants(self)


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def validate(A, b, c, r, lam: float) -> ProblemData:
    """Check shapes and finiteness and return an immutable ProblemData."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValidationError(f"A must be a 2-d matrix with m, n >= 1, got shape {A.shape}")
    m, n = A.shape
    if b.shape != (m,):
        raise ValidationError(f"b must have shape ({m},), got {b.shape}")
    if c.shape != (n,):
        raise ValidationError(f"c must have shape ({n},), got {c.shape}")
    if r.shape != (n,):
        raise ValidationError(f"r must have shape ({n},), got {r.shape}")
    if not np.isfinite(A).all():
        raise ValidationError("A must be finite")
    if not np.isfinite(b).all():
        raise ValidationError("b must be finite")
    if not np.isfinite(c).all():
        raise ValidationError("c must be finite")
    if np.isnan(r).any() or (r == math.inf).any():
        raise ValidationError("r entries must be finite or -inf")
    if not (r > -math.inf).any():
        raise ValidationError("r must keep at least one prior weight positive")
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValidationError(f"lam must be a positive finite real, got {lam}")
    return ProblemData(_readonly(A), _readonly(b), _readonly(c), _readonly(r), lam)


def clip_prior(q, floor: float = PRIOR_FLOOR) -> np.ndarray:
    """Floor a raw prior at `floor`, renormalize to the simplex, return log-weights."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.size == 0:
        raise ValidationError(f"q must be a nonempty 1-d vector, got shape {q.shape}")
    if not np.isfinite(q).all():
        raise ValidationError("q must be finite")
    if (q < 0).any():
        raise ValidationError("q must be nonnegative")
    if not (q > 0).any():
        raise ValidationError("q must have at least one positive entry")
    if not (floor > 0.0):
        raise ValidationError(f"floor must be positive, got {floor}")
    clipped = np.maximum(q, floor)
    return np.log(clipped) - math.log(float(np.sum(clipped)))


@dataclass(frozen=True)
class ScaleShape:
    """Total mass tau >= 0 and shape p on the simplex, so x = tau * p."""

    tau: float
    p: np.ndarray


def decompose(x) -> ScaleShape:
    """Split x >= 0 into (tau, p) = (sum x, x / sum x); x = 0 maps to uniform p."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError(f"x must be a nonempty 1-d vector, got shape {x.shape}")
    if not np.isfinite(x).all() or (x < 0).any():
        raise ValidationError("x must be finite and nonnegative")
    tau = float(np.sum(x))
    if tau == 0.0:
        # zero mass leaves the shape undetermined; pick uniform so the map is total
        return ScaleShape(0.0, np.full(x.size, 1.0 / x.size))
    return ScaleShape(tau, x / tau)


def compose(tau: float, p) -> np.ndarray:
    """Inverse of decompose: x = tau * p for tau >= 0 and p on the simplex."""
    p = np.asarray(p, dtype=np.float64)
    tau = float(tau)
    if not (tau >= 0.0 and math.isfinite(tau)):
        raise ValidationError(f"tau must be nonnegative and finite, got {tau}")
    if (p < 0).any():
        raise ValidationError("p must be nonnegative")
    if abs(float(np.sum(p)) - 1.0) > 1e-8:
        raise ValidationError(f"p must sum to 1, got {float(np.sum(p))}")
    return tau * p


def _power_opnorm(A: np.ndarray, rel_tol: float = 1e-10, max_iter: int = 20000) -> float:
    """Spectral norm by power iteration on A^T A with a fixed seeded start."""
    n = A.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        sigma_new = math.sqrt(nw)
        if abs(sigma_new - sigma) <= rel_tol * sigma_new:
            return sigma_new
        sigma = sigma_new
    return sigma


def data_constants(P: ProblemData) -> DataConstants:
    """Compute the scalar summaries that the level-set and rate bounds consume."""
    col_norms = np.linalg.norm(P.A, axis=0)
    A_max = float(np.max(col_norms))
    A_opnorm = _power_opnorm(P.A)
    r_min = float(np.min(P.r))
    log_q_onenorm = logsumexp_w(np.zeros(P.n), P.r)
    return DataConstants(
        A_max=A_max,
        A_opnorm=A_opnorm,
        b_norm=float(np.linalg.norm(P.b)),
        c_min=float(np.min(P.c)),
        c_max=float(np.max(P.c)),
        q_min=math.exp(r_min) if r_min > -math.inf else 0.0,
        q_onenorm=math.exp(log_q_onenorm),
        r_min=r_min,
        log_q_onenorm=log_q_onenorm,
    )


def entropy_term(P: ProblemData, x) -> float:
    """g(x) + <c, x> with g(x) = sum_j x_j log(x_j / q_j); 0 log 0 = 0."""
    x = np.asarray(x, dtype=np.float64)
    pos = x > 0.0
    g = float(np.sum(x[pos] * (np.log(x[pos]) - P.r[pos])))
    return g + float(P.c @ x)


def data_fit_term(P: ProblemData, x) -> float:
    """0.5 * ||A x - b||^2."""
    res = P.A @ np.asarray(x, dtype=np.float64) - P.b
    return 0.5 * float(res @ res)


def primal_objective(P: ProblemData, x) -> float:
    """(1/(2 lam)) ||A x - b||^2 + <c, x> + g(x)."""
    return data_fit_term(P, x) / P.lam + entropy_term(P, x)


def problem_to_dict(P: ProblemData) -> dict:
    """Serialize to the documented JSON problem layout (prior as plain weights)."""
    return {
        "m": P.m,
        "n": P.n,
        "A": [float(v) for v in P.A.ravel(order="C")],
        "b": [float(v) for v in P.b],
        "c": [float(v) for v in P.c],
        "q": [float(v) for v in np.exp(P.r)],
        "lambda": P.lam,
    }


def problem_from_dict(doc: dict, clip_floor: float = PRIOR_FLOOR) -> ProblemData:
    """Parse the documented JSON problem layout; the prior is clipped and renormalized."""
    try:
        m = int(doc["m"])
        n = int(doc["n"])
        A = np.asarray(doc["A"], dtype=np.float64).reshape(m, n)
        b = np.asarray(doc["b"], dtype=np.float64)
        c = np.asarray(doc["c"], dtype=np.float64)
        q = np.asarray(doc["q"], dtype=np.float64)
        lam = float(doc["lambda"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed problem document: {exc}") from exc
    r = clip_prior(q, clip_floor)
    return validate(A, b, c, r, lam)


def load_problem(path, clip_floor: float = PRIOR_FLOOR) -> ProblemData:
    with open(path, "r", encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh), clip_floor)


def save_problem(P: ProblemData, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(P), fh)
        fh.write("\n")
