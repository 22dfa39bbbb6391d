"""Problem parameters and sphere constants for the radial polyharmonic setup.

Sign convention used throughout the package: the Laplacian is the *positive*
(analysts') one, Delta = -sum_i d^2/dx_i^2, so that on radial functions

    Delta g = -(g'' + (n-1)/r * g').

Under Dirichlet conditions this makes int u Delta^k u = int (Delta^{k/2} u)^2
nonnegative, the first eigenvalue of Delta^k positive, and the center-pole
Green's function of the unit ball positive.  Every formula in the package is
written under this convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def sphere_area(n: int) -> float:
    """Area omega_{n-1} of the unit (n-1)-sphere in R^n: 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class SphereConstants:
    """Unit-sphere area for a given ambient dimension."""

    n: int
    omega: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "omega", sphere_area(self.n))


@dataclass(frozen=True)
class ProblemParams:
    """Dimension n, polyharmonic order k, spectral parameter lambda.

    Requires n > 2k >= 2; carries the critical exponent two_star = 2n/(n-2k).
    """

    n: int
    k: int
    lam: float = 0.0
    two_star: float = field(init=False)

    def __post_init__(self):
        if not (isinstance(self.n, int) and isinstance(self.k, int)):
            raise TypeError("n and k must be integers")
        if not self.n > 2 * self.k or not self.k >= 1:
            raise ValueError(f"requires n > 2k >= 2, got n={self.n}, k={self.k}")
        object.__setattr__(self, "two_star", (2.0 * self.n) / (self.n - 2 * self.k))

    @property
    def omega(self) -> float:
        return sphere_area(self.n)

    def with_lambda(self, lam: float) -> "ProblemParams":
        return ProblemParams(self.n, self.k, lam)
