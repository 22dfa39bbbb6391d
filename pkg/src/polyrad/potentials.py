"""Almost-Hardy potentials: |V(r)| <= mu * r^{-2k}, optionally mollified.

The mollifier eta is a genuine C-infinity transition, 0 on (-inf, 1] and 1 on
[2, inf); mollified potentials vanish identically on r <= eps and agree with
the base profile on r >= 2 eps, staying in the same Hardy class.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import RadialGrid


def smooth_step(t):
    """C-infinity step: 0 for t<=1, 1 for t>=2, monotone in between."""
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        b = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    out = a / (a + b)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HardyPotential:
    """Potential profile with the bound |V(r)| <= mu r^{-2k}."""

    mu: float
    k: int
    profile: Callable[[np.ndarray], np.ndarray]
    mollification_eps: float = 0.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.mollification_eps < 0:
            raise ValueError("mollification_eps must be nonnegative")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        v = np.asarray(self.profile(r), dtype=float)
        return float(v) if v.ndim == 0 else v

    def check_bound(self, grid: RadialGrid, rtol: float = 1e-9) -> bool:
        """Verify |V(r_i)| r_i^{2k} <= mu at every node."""
        r = grid.nodes
        return bool(np.all(np.abs(self(r)) * r ** (2 * self.k)
                           <= self.mu * (1.0 + rtol) + 1e-300))


def zero_potential(k: int) -> HardyPotential:
    return HardyPotential(0.0, k, lambda r: np.zeros_like(np.asarray(r, float)))


def inverse_power_potential(mu: float, k: int) -> HardyPotential:
    """V(r) = mu * r^{-2k}, the borderline member of the class."""
    return HardyPotential(mu, k, lambda r: mu * np.asarray(r, float) ** (-2 * k))


def mollify(V: HardyPotential, eps: float) -> HardyPotential:
    """eta(r/eps) V(r): zero on r <= eps, V on r >= 2 eps, smooth between."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = V.profile

    def profile(r):
        r = np.asarray(r, dtype=float)
        return smooth_step(r / eps) * np.asarray(base(r), dtype=float)

    return HardyPotential(V.mu, V.k, profile, mollification_eps=eps)
