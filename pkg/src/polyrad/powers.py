"""Exact calculus on finite sums of radial powers c * r^m.

The fundamental profile r^{2k-n} and everything the boundary identities build
from it (radial Laplacians, normal derivatives, the dilation generator) stay
inside this class, so those identities can be evaluated in exact rational
arithmetic.  Double-precision stencils cannot verify 5th-derivative
cancellations to 1e-7; this backend can, and the finite-difference path is
cross-checked against it where the noise floor allows.
"""

from __future__ import annotations

from fractions import Fraction


class PowerSum:
    """Finite sum  sum_m  c_m r^m  with Fraction coefficients, integer m."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, Fraction] | None = None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items()
                      if c != 0}

    @staticmethod
    def monomial(c, m: int) -> "PowerSum":
        return PowerSum({int(m): Fraction(c)})

    def __add__(self, other: "PowerSum") -> "PowerSum":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return PowerSum(out)

    def __sub__(self, other: "PowerSum") -> "PowerSum":
        return self + other.scale(-1)

    def scale(self, c) -> "PowerSum":
        c = Fraction(c)
        return PowerSum({m: cc * c for m, cc in self.terms.items()})

    def deriv(self) -> "PowerSum":
        return PowerSum({m - 1: c * m for m, c in self.terms.items() if m != 0})

    def xdr(self) -> "PowerSum":
        """r * d/dr, the scaling derivative."""
        return PowerSum({m: c * m for m, c in self.terms.items()})

    def laplacian(self, n: int) -> "PowerSum":
        """Positive radial Laplacian: -(f'' + (n-1)/r f')."""
        return PowerSum({m - 2: -c * m * (m + n - 2)
                         for m, c in self.terms.items()})

    def __call__(self, r: float) -> float:
        return float(sum(float(c) * r ** m for m, c in self.terms.items()))

    def __repr__(self):
        body = " + ".join(f"({c})r^{m}" for m, c in sorted(self.terms.items()))
        return f"PowerSum({body or '0'})"


def fundamental_profile(n: int, k: int) -> PowerSum:
    """The Delta^k-harmonic profile r^{2k-n} (unnormalized)."""
    return PowerSum.monomial(1, 2 * k - n)
