"""Solver configuration shared by the iteration and the certificate assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass


def _parse_eta_schedule(spec: str) -> tuple[str, float]:
    s = spec.strip().lower()
    if s == "exact":
        return "exact", 0.0
    for prefix in ("const:", "constant:"):
        if s.startswith(prefix):
            v = float(s[len(prefix):])
            if not (0.0 <= v < 1.0):
                raise ValueError(f"eta_schedule constant must lie in [0, 1), got {v}")
            return "const", v
    if s.startswith("power:"):
        v = float(s[len("power:"):])
        if not (v > 0.0):
            raise ValueError(f"eta_schedule power exponent must be positive, got {v}")
        return "power", v
    raise ValueError(f"eta_schedule must be 'exact', 'const:<c>' or 'power:<p>', got {spec!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Damped inexact Newton settings.

    mu and gamma are the backtracking acceptance and halving parameters;
    eta_schedule controls the forcing terms eta_k; beta_factor sets the merit
    level beta = beta_factor * rho(z0) used by the safeguard and certificate;
    tau_floor is the absolute floor applied to the lower scale estimate.
    """

    mu: float = 0.49
    gamma: float = 0.5
    eta_schedule: str = "exact"
    eta_bar: float | None = None
    beta_factor: float = 1.5
    eps: float = 1e-8
    max_iter: int = 300
    tau_floor: float = 1e-16
    backtrack_max: int = 60

    def __post_init__(self) -> None:
        if not (0.0 < self.mu < 1.0):
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not (self.beta_factor > 1.0):
            raise ValueError(f"beta_factor must exceed 1, got {self.beta_factor}")
        if not (self.eps >= 0.0):
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if not (self.max_iter >= 0):
            raise ValueError(f"max_iter must be nonnegative, got {self.max_iter}")
        if not (self.tau_floor > 0.0):
            raise ValueError(f"tau_floor must be positive, got {self.tau_floor}")
        if self.backtrack_max < 1:
            raise ValueError(f"backtrack_max must be at least 1, got {self.backtrack_max}")
        kind, value = _parse_eta_schedule(self.eta_schedule)
        if self.eta_bar is not None and not (0.0 <= self.eta_bar < 1.0):
            raise ValueError(f"eta_bar must lie in [0, 1), got {self.eta_bar}")
        if kind == "const" and self.eta_bar is not None and value > self.eta_bar:
            raise ValueError("constant eta_schedule exceeds eta_bar")
        object.__setattr__(self, "_eta_kind", kind)
        object.__setattr__(self, "_eta_value", value)

    def resolved_eta_bar(self) -> float:
        """The cap sup_k eta_k used by the certificate."""
        if self.eta_bar is not None:
            return self.eta_bar
        if self._eta_kind == "const":
            return self._eta_value
        if self._eta_kind == "power":
            return 0.5
        return 0.0

    def eta_k(self, k: int, rho: float) -> float:
        """Forcing term for iteration k at current merit rho."""
        if self._eta_kind == "exact":
            return 0.0
        if self._eta_kind == "const":
            return self._eta_value
        return min(self.resolved_eta_bar(), math.pow(rho, self._eta_value))
