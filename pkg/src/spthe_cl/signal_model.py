"""Measured signal ``psi = phi(t)' theta* + d(t)`` and the learning signal chi.

Regressors and disturbances are plain callables supplied by the user together
with declared uniform bounds; nothing here estimates those bounds.  Callables
must be re-entrant if models are shared across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "RegressorModel",
    "TrueSystem",
    "measure",
    "chi",
    "xi",
    "section5_model",
    "zero_disturbance",
]


def zero_disturbance(t: float) -> float:
    return 0.0


@dataclass(frozen=True)
class RegressorModel:
    """Known regressor ``phi: R -> R^n`` with ``sup |phi| <= phi_bound``."""

    dimension: int
    phi: Callable[[float], np.ndarray]
    phi_bound: float

    def __call__(self, t: float) -> np.ndarray:
        value = np.asarray(self.phi(t), dtype=float)
        if value.shape != (self.dimension,):
            raise ValueError(f"regressor returned shape {value.shape}, expected ({self.dimension},)")
        return value


@dataclass(frozen=True)
class TrueSystem:
    """Unknown parameter and disturbance; ``|d(t)| <= disturbance_bound``."""

    theta_star: np.ndarray
    disturbance: Callable[[float], float] = zero_disturbance
    disturbance_bound: float = 0.0

    def __post_init__(self):
        theta = np.array(self.theta_star, dtype=float)
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)

    @property
    def dimension(self) -> int:
        return self.theta_star.shape[0]

    def without_disturbance(self) -> "TrueSystem":
        return TrueSystem(self.theta_star, zero_disturbance, 0.0)


def _as_param(theta, n: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n,):
        raise ValueError(f"parameter has shape {theta.shape}, expected ({n},)")
    return theta


def measure(sys: TrueSystem, reg: RegressorModel, t: float) -> float:
    """Measured scalar signal ``psi(theta*, t)``."""
    return float(reg(t) @ sys.theta_star + sys.disturbance(t))


def chi(sys: TrueSystem, reg: RegressorModel, theta, t: float) -> np.ndarray:
    """Real-time learning signal ``phi(t) (phi(t)' theta - psi(theta*, t))``."""
    theta = _as_param(theta, reg.dimension)
    p = reg(t)
    return p * (p @ theta - p @ sys.theta_star - sys.disturbance(t))


def xi(reg: RegressorModel, t: float) -> np.ndarray:
    """Rank-one matrix ``phi(t) phi(t)'``."""
    p = reg(t)
    return np.outer(p, p)


def _section5_phi(t: float) -> np.ndarray:
    s = math.sin(t)
    return np.array([1.0, s, s * s])


def _section5_disturbance(t: float) -> float:
    return 0.25 * math.tanh(t)


def section5_model(disturbed: bool = True) -> tuple[TrueSystem, RegressorModel]:
    """The three-parameter benchmark ``psi = (sin t - 1)^2 + tanh(t)/4``.

    ``theta* = (1, -2, 1)`` with ``phi(t) = (1, sin t, sin^2 t)``.  Pass
    ``disturbed=False`` for the noise-free variant.
    """
    reg = RegressorModel(3, _section5_phi, math.sqrt(3.0))
    if disturbed:
        sys = TrueSystem(np.array([1.0, -2.0, 1.0]), _section5_disturbance, 0.25)
    else:
        sys = TrueSystem(np.array([1.0, -2.0, 1.0]))
    return sys, reg
