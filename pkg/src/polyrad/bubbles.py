"""Extremal radial profiles of the critical polyharmonic equation.

The equation Delta^k u = |u|^{2*-2} u on R^n (positive Laplacian) is solved
by the two-parameter family

    u(r) = eps * (mu / (mu^2 + a * r^2))^{(n-2k)/2},

where a = bubble_shape_constant(n, k).  These "bubbles" are the universal
blow-up profiles of the boundary-value explorer, so this module both
evaluates them and measures how exactly the discrete calculus reproduces
their defining equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fdcalc import iterated_laplacian
from .field import RadialField, sample
from .grid import RadialGrid, make_grid
from .params import ProblemParams
from .quadrature import weighted_integral


def bubble_shape_constant(n: int, k: int) -> float:
    """a(n,k) = (prod_{j=-k}^{k-1} (n+2j))^{-1/k}; positive since n > 2k."""
    ProblemParams(n, k)  # validates the parameter domain
    prod = 1
    for j in range(-k, k):
        prod *= n + 2 * j
    return float(prod) ** (-1.0 / k)


@dataclass(frozen=True)
class BubbleProfile:
    """One member of the extremal family: scale mu > 0 and sign eps."""

    p: ProblemParams
    mu: float = 1.0
    eps: int = 1
    ank: float = field(init=False)

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("scale mu must be positive")
        if self.eps not in (-1, 1):
            raise ValueError("eps must be -1 or +1")
        object.__setattr__(
            self, "ank", bubble_shape_constant(self.p.n, self.p.k))

    def __call__(self, r):
        return bubble_eval(self, r)


def bubble_eval(b: BubbleProfile, r):
    """eps * (mu/(mu^2 + a r^2))^{(n-2k)/2}; decreasing in r for eps=+1."""
    r = np.asarray(r, dtype=float)
    expo = 0.5 * (b.p.n - 2 * b.p.k)
    val = b.eps * (b.mu / (b.mu ** 2 + b.ank * r ** 2)) ** expo
    return float(val) if val.ndim == 0 else val


def bubble_field(b: BubbleProfile, grid: RadialGrid) -> RadialField:
    return sample(lambda r: bubble_eval(b, r), grid, parity="even")


def bubble_residual(b: BubbleProfile, grid: RadialGrid,
                    r_window: tuple[float, float] = (0.05, 10.0),
                    details: bool = False):
    """Normalized max-node defect of Delta^k U = |U|^{2*-2} U on r_window.

    Normalization is max |U|^{2*-1} over the window so that (n,k) pairs are
    comparable.  With details=True also reports a truncation estimate from a
    coarsened stencil pass; the check is inconclusive when that estimate
    exceeds the residual itself.
    """
    p = b.p
    u = bubble_field(b, grid)
    lap = iterated_laplacian(u, p, p.k, smooth=True, scale=b.mu)
    rhs = np.abs(u.values) ** (p.two_star - 2.0) * u.values
    mask = (grid.nodes >= r_window[0]) & (grid.nodes <= r_window[1])
    if not np.any(mask):
        raise ValueError("r_window contains no grid nodes")
    scale = np.max(np.abs(u.values[mask]) ** (p.two_star - 1.0))
    res = float(np.max(np.abs(lap.values[mask] - rhs[mask])) / scale)
    if not details:
        return res
    lap2 = iterated_laplacian(u, p, p.k, smooth=True, scale=1.4 * b.mu)
    est = float(np.max(np.abs(lap.values[mask] - lap2.values[mask])) / scale)
    return {"residual": res, "truncation_estimate": est,
            "inconclusive": est > res}


def bubble_integrals(p: ProblemParams, tail_tol: float = 1e-8) -> dict:
    """Whole-space masses of U^{2*} and U^{2*-1} for the mu=1 profile.

    Quadrature runs on a geometric grid out to a radius R where the power-law
    tail majorant drops below tail_tol relative; the analytic tail estimate is
    added and both R and the bound are reported.
    """
    b = BubbleProfile(p, mu=1.0, eps=1)
    a = b.ank
    out = {}
    for key, q in (("massU2s", p.two_star), ("massU2sm1", p.two_star - 1.0)):
        # integrand (1+a r^2)^{-q(n-2k)/2} r^{n-1} ~ a^{-qe} r^{n-1-2qe}
        e = 0.5 * q * (p.n - 2 * p.k)
        decay = 2 * e - p.n  # tail exponent of the dx-integral, > 0
        if decay <= 0:
            raise ValueError("non-integrable bubble power")
        # crude total estimate for the relative tolerance target
        rough = p.omega * a ** (-p.n / 2.0) / decay
        R = 1.0
        while _tail_majorant(p, a, e, R) > tail_tol * rough:
            R *= 2.0
            if R > 1e9:
                raise ValueError(f"tail bound not met; needs R > {R:.1e}")
        grid = _geometric_grid(R)
        f = sample(lambda r: (1.0 + a * r ** 2) ** (-e), grid, parity="even")
        core = weighted_integral(f, p)
        tail = _tail_exact(p, a, e, R)
        out[key] = core + tail
        out[key + "_R"] = R
        out[key + "_tailbound"] = _tail_majorant(p, a, e, R)
    out["ank"] = a
    return out


def _tail_majorant(p: ProblemParams, a: float, e: float, R: float) -> float:
    # (1+a r^2)^{-e} <= (a r^2)^{-e} pointwise
    return p.omega * a ** (-e) * R ** (p.n - 2 * e) / (2 * e - p.n)


def _tail_exact(p: ProblemParams, a: float, e: float, R: float) -> float:
    # two-term expansion of the tail integral; error bounded by the next term
    lead = _tail_majorant(p, a, e, R)
    nxt = p.omega * e * a ** (-e - 1.0) * R ** (p.n - 2 * e - 2.0) \
        / (2 * e + 2 - p.n)
    return lead - nxt


def _geometric_grid(R: float, n_points: int = 2400) -> RadialGrid:
    nodes = np.geomspace(R * 1e-7, R, n_points)
    nodes[-1] = R
    return RadialGrid(nodes, "clustered", R)


def default_bubble_grid(n_points: int = 600, r_max: float = 12.0) -> RadialGrid:
    """Clustered grid wide enough for residual checks on [0.05, 10]."""
    return make_grid(n_points, "clustered", r_max)
