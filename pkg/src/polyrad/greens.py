"""Green's functions for the radial polyharmonic operator and perturbations.

Three constructions live here and cross-validate each other where they
overlap:

* the explicit fundamental solution C(n,k) |x-y|^{2k-n};
* Boggio's closed form for the center-pole Dirichlet kernel on the unit ball;
* discrete kernels obtained by inverting the assembled operator against a
  quadrature-normalized delta (any pole radius, any Hardy potential).

On top of the kernels: Monte-Carlo certification of the Giraud growth of
Neumann-series iterates, pointwise-bound certificates of the form
(max/min)^gamma |x-y|^{2k-n}, and the weighted interior-regularity constant
for discrete kernel elements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .fdcalc import differentiate
from .field import RadialField
from .grid import RadialGrid
from .operators import DiscreteOperator, coercivity_ok
from .params import ProblemParams, sphere_area
from .quadrature import _interval_weights, lp_norm


# ---------------------------------------------------------------------------
# explicit kernels
# ---------------------------------------------------------------------------

def fundamental_constant(n: int, k: int) -> float:
    """C(n,k) = 1/((n-2) omega_{n-1} prod_{i=1}^{k-1} (n-2k+2(i-1))(2k-2i))."""
    ProblemParams(n, k)
    prod = 1.0
    for i in range(1, k):
        prod *= (n - 2 * k + 2 * (i - 1)) * (2 * k - 2 * i)
    return 1.0 / ((n - 2) * sphere_area(n) * prod)


def fundamental_solution(n: int, k: int, rho: float) -> float:
    """C(n,k) rho^{2k-n}, the free-space kernel at separation rho > 0."""
    if rho <= 0:
        raise ValueError("separation rho must be positive")
    return fundamental_constant(n, k) * rho ** (2 * k - n)


def _boggio_integral(n: int, k: int, r: float) -> float:
    """int_1^{1/r} (v^2-1)^{k-1} v^{1-n} dv, written with t = 1/v so the
    integrand (1-t^2)^{k-1} t^{n-2k-1} is smooth on [r, 1]."""
    val, _ = quad(lambda t: (1.0 - t * t) ** (k - 1) * t ** (n - 2 * k - 1),
                  r, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _boggio_integral_full(n: int, k: int) -> float:
    """Same integral up to v = infinity: (1/2) B((n-2k)/2, k)."""
    return 0.5 * math.gamma((n - 2 * k) / 2.0) * math.gamma(float(k)) \
        / math.gamma(n / 2.0)


def boggio_normalization(n: int, k: int) -> float:
    """A(k,n) fixed by singularity matching: the center-pole kernel must carry
    the fundamental solution's leading coefficient, so
    A = C(n,k) / int_1^inf (v^2-1)^{k-1} v^{1-n} dv."""
    return fundamental_constant(n, k) / _boggio_integral_full(n, k)


@dataclass(frozen=True)
class KernelConstants:
    """Fundamental-solution constant and Boggio normalization for (n,k)."""

    n: int
    k: int
    cnk: float = field(init=False)
    akn: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cnk", fundamental_constant(self.n, self.k))
        object.__setattr__(self, "akn", boggio_normalization(self.n, self.k))


def boggio_center(n: int, k: int, r) -> float | np.ndarray:
    """Center-pole Dirichlet Green's function of Delta^k on the unit ball:

        G0(r) = A(k,n) r^{2k-n} int_1^{1/r} (v^2-1)^{k-1} v^{1-n} dv,

    positive on (0,1) and vanishing (with k-1 derivatives) at r=1.
    """
    A = boggio_normalization(n, k)
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("boggio_center needs 0 < r < 1")
    out = np.array([A * ri ** (2 * k - n) * _boggio_integral(n, k, ri)
                    for ri in arr])
    return float(out[0]) if np.isscalar(r) or np.asarray(r).ndim == 0 else out


# ---------------------------------------------------------------------------
# discrete Green tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GreenTable:
    """Sampled kernel values G(pole, r_j) with quadrature weights.

    weights[j] are the full dx-measure weights omega r^{n-1} w_j, so that
    sum_j weights[j] * G[j] * f(r_j) reproduces solutions of op u = f.
    """

    pole: float
    grid: RadialGrid
    values: np.ndarray
    weights: np.ndarray
    provenance: str
    p: ProblemParams
    mu: float = 0.0

    def interp(self, r) -> np.ndarray:
        """Linear-in-log interpolation off the pole (diagnostic use)."""
        return np.interp(np.asarray(r, float), self.grid.nodes, self.values)

    def to_csv(self, path: str | Path | None = None) -> str:
        lines = ["pole,r,G"]
        for rr, gg in zip(self.grid.nodes, self.values):
            lines.append(f"{self.pole:.17g},{rr:.17g},{gg:.17g}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def sidecar(self, worst_constants: dict | None = None) -> dict:
        return {"provenance": self.provenance, "n": self.p.n, "k": self.p.k,
                "lambda": self.p.lam, "mu": self.mu,
                "worst_constants": worst_constants or {}}

    def write(self, stem: str | Path, worst_constants: dict | None = None):
        stem = Path(stem)
        self.to_csv(stem.with_suffix(".csv"))
        stem.with_suffix(".json").write_text(
            json.dumps(self.sidecar(worst_constants), indent=2, sort_keys=True))


def dx_weights(grid: RadialGrid, p: ProblemParams) -> np.ndarray:
    """Nodewise dx-measure weights omega_{n-1} r^{n-1} w_j."""
    return p.omega * grid.nodes ** (p.n - 1) * _interval_weights(grid)


_CORE_SHELL = 11  # innermost admissible pole index: resolved interior shell


def discrete_green(op: DiscreteOperator, pole_radius: float) -> GreenTable:
    """Kernel column from operator inversion against a discrete delta.

    The delta sits at the node nearest pole_radius with unit mass under the
    dx-measure weights, so the reproducing property
    sum_j weights[j] G[j] f_j = (op^{-1} f)(pole) holds by construction.
    pole_radius -> 0 snaps to the innermost node that still has a resolved
    shell of nodes inside it (the quadrature cell of the very first node is
    not a faithful measure chunk); that pole radius shrinks under grid
    refinement, so the recorded table converges to the center-pole kernel.
    """
    if not coercivity_ok(op):
        raise ValueError("operator is singular; no discrete kernel")
    grid = op.grid
    if pole_radius >= grid.r_max * (1.0 - 1e-9):
        raise ValueError("pole must be strictly inside the ball")
    j0 = int(np.argmin(np.abs(grid.nodes - pole_radius)))
    j0 = max(j0, _CORE_SHELL)
    if j0 >= len(grid) - op.n_bc:
        raise ValueError("pole collides with a boundary row")
    W = dx_weights(grid, op.p)
    rhs = np.zeros(len(grid))
    rhs[j0] = 1.0 / W[j0]
    vals = op.solve(rhs)
    return GreenTable(pole=float(grid.nodes[j0]), grid=grid, values=vals,
                      weights=W, provenance="discrete", p=op.p, mu=op.V.mu)


# ---------------------------------------------------------------------------
# Neumann-series iterates and Giraud growth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GiraudReport:
    """Empirical growth constant of one Neumann iterate against its majorant."""

    i: int
    regime: str               # "power", "log", or "bounded"
    exponent: float           # 2ki - n (meaningful in the power regime)
    empirical_constant: float
    per_pair: np.ndarray
    rel_std_error: float
    inconclusive: bool
    seed: int


def _giraud_majorant(n: int, k: int, i: int, rho: np.ndarray) -> tuple[np.ndarray, str]:
    e = 2 * k * i - n
    if e < 0:
        return rho ** e, "power"
    if e == 0:
        return 1.0 + np.abs(np.log(rho)), "log"
    return np.ones_like(rho), "bounded"


def _sample_ball(rng: np.random.Generator, n: int, m: int,
                 centers: np.ndarray, k: int):
    """Mixture sampler importance-weighted near each kernel singularity.

    Returns points z (m,n), the mixture density q(z) (m,), and the mask of
    points inside the unit ball.  Component 0 is uniform on the ball; each
    center contributes a |z-c|^{2k-n}-weighted cloud of radius 1 around c.
    Points outside the ball carry zero integrand, not zero density, so the
    caller must keep them in the sample mean.
    """
    ncomp = 1 + len(centers)
    comp = rng.integers(0, ncomp, size=m)
    dirs = rng.normal(size=(m, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = rng.random(m)
    z = np.empty((m, n))
    vol_ball = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
    uni = comp == 0
    z[uni] = dirs[uni] * (u[uni] ** (1.0 / n))[:, None]
    for c_i, c in enumerate(centers, start=1):
        sel = comp == c_i
        # radial density ~ rho^{2k-n} rho^{n-1} = rho^{2k-1} on rho in (0,1]
        rho = u[sel] ** (1.0 / (2 * k))
        z[sel] = c + dirs[sel] * rho[:, None]
    inside = np.linalg.norm(z, axis=1) < 1.0
    q = np.where(inside, 1.0 / vol_ball, 0.0) / ncomp
    area = sphere_area(n)
    for c in centers:
        rho = np.linalg.norm(z - c, axis=1)
        dens = np.where(rho <= 1.0,
                        2 * k / area * np.maximum(rho, 1e-300) ** (2 * k - n),
                        0.0)
        q += dens / ncomp
    return z, q, inside


def neumann_iterate(n: int, k: int, h_bound: float, i: int,
                    sample_pairs: np.ndarray, seed: int = 0,
                    n_samples: int = 100_000,
                    rel_err_threshold: float = 0.2) -> GiraudReport:
    """Estimate Gamma_i at sample pairs for the model source f_z = -h Gamma_z.

    Gamma_1(x,y) = -h Gamma(x,y) exactly; higher iterates convolve against
    the free kernel by importance-sampled Monte Carlo over the unit ball with
    an explicit seed.  Reports sup |Gamma_i| / majorant with the majorant in
    the power/log/bounded regime selected by the sign of 2ki - n.
    """
    if i < 1:
        raise ValueError("iterate index must be >= 1")
    pairs = np.asarray(sample_pairs, dtype=float)
    if pairs.ndim != 3 or pairs.shape[1] != 2 or pairs.shape[2] != n:
        raise ValueError("sample_pairs must have shape (m, 2, n)")
    h = float(h_bound)
    cnk = fundamental_constant(n, k)
    rng = np.random.default_rng(seed)
    xs, ys = pairs[:, 0, :], pairs[:, 1, :]
    rho_xy = np.linalg.norm(xs - ys, axis=1)
    if np.any(rho_xy <= 0):
        raise ValueError("sample pairs must have x != y")

    if i == 1:
        gam = -h * cnk * rho_xy ** (2 * k - n)
        se = 0.0
    else:
        gam = np.empty(len(pairs))
        ses = np.empty(len(pairs))
        for m_i, (x, y) in enumerate(zip(xs, ys)):
            est, se_i = _mc_iterate(x, y, n, k, h, i, rng, n_samples)
            gam[m_i] = est
            ses[m_i] = se_i
        se = float(np.max(ses / np.maximum(np.abs(gam), 1e-300)))
    maj, regime = _giraud_majorant(n, k, i, rho_xy)
    ratios = np.abs(gam) / maj
    inconclusive = (i > 1) and (se > rel_err_threshold)
    return GiraudReport(i=i, regime=regime, exponent=float(2 * k * i - n),
                        empirical_constant=float(np.max(ratios)),
                        per_pair=ratios, rel_std_error=float(se),
                        inconclusive=inconclusive, seed=seed)


def _mc_iterate(x: np.ndarray, y: np.ndarray, n: int, k: int, h: float,
                i: int, rng: np.random.Generator, m: int) -> tuple[float, float]:
    """(i-1)-fold Monte-Carlo convolution Gamma(x,z1)...Gamma(z_{i-1},y)."""
    cnk = fundamental_constant(n, k)
    e = 2 * k - n
    centers = np.stack([x, y])
    layers, dens, masks = [], [], []
    for _ in range(i - 1):
        z, q, inside = _sample_ball(rng, n, m, centers, k)
        layers.append(z)
        dens.append(q)
        masks.append(inside)
    chain = [np.broadcast_to(x, (m, n))] + layers + [np.broadcast_to(y, (m, n))]
    integrand = np.ones(m)
    for a, b in zip(chain[:-1], chain[1:]):
        rho = np.linalg.norm(a - b, axis=1)
        integrand *= cnk * np.maximum(rho, 1e-14) ** e
    keep = np.logical_and.reduce(masks)
    integrand = np.where(keep, integrand, 0.0)
    q_tot = np.ones(m)
    for q in dens:
        q_tot *= np.maximum(q, 1e-300)
    samples = ((-h) ** i) * integrand / q_tot
    est = float(np.mean(samples))
    se = float(np.std(samples) / math.sqrt(m))
    return est, se


# ---------------------------------------------------------------------------
# pointwise-bound certificates and weighted regularity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Worst empirical constants of the (max/min)^gamma |x-y|^{2k-n} bound."""

    gamma: float
    mu: float
    worst: float
    worst_derivative: dict
    n_pairs: int
    excluded_band: float

    @property
    def finite(self) -> bool:
        vals = [self.worst] + list(self.worst_derivative.values())
        return bool(np.all(np.isfinite(vals)))


def green_bound_certificate(tables, gamma: float, mu: float,
                            derivative_orders: tuple[int, ...] | None = None
                            ) -> BoundReport:
    """Certify |G(x,y)| <= C (max(|x|,|y|)/min)^gamma |x-y|^{2k-n} on tables.

    Accepts one GreenTable or a list (several poles of the same operator).
    Nodes within 3 local spacings of the pole are excluded: the discrete
    delta pollutes its nearest cells.  Derivative ratios use numerical
    d^l/dy^l of the table column against the majorant with exponent gamma
    (pole inside) or gamma + l (pole outside), and l runs over
    derivative_orders, default {1, ..., min(2k-1, 2)}.
    """
    if isinstance(tables, GreenTable):
        tables = [tables]
    p = tables[0].p
    if not (0.0 < gamma < p.n - 2 * p.k):
        raise ValueError("gamma must lie in (0, n-2k)")
    if derivative_orders is None:
        derivative_orders = tuple(range(1, min(2 * p.k - 1, 2) + 1))
    worst = 0.0
    worst_d = {l: 0.0 for l in derivative_orders}
    n_pairs = 0
    band = 0.0
    for tab in tables:
        r = tab.grid.nodes
        x = tab.pole
        spacing = np.gradient(r)
        keep = np.abs(r - x) > 3.0 * np.maximum(spacing, spacing[min(
            np.searchsorted(r, x), len(r) - 1)])
        keep &= r < tab.grid.r_max * (1.0 - 1e-12)
        band = max(band, 3.0 * float(spacing.min()))
        rho = np.abs(r - x)[keep]
        rk = r[keep]
        ratio_arg = np.maximum(rk, x) / np.minimum(rk, x)
        maj = ratio_arg ** gamma * rho ** (2 * p.k - p.n)
        worst = max(worst, float(np.max(np.abs(tab.values[keep]) / maj)))
        n_pairs += int(np.count_nonzero(keep))
        gfield = RadialField(tab.grid, tab.values, "none")
        for l in derivative_orders:
            dvals = differentiate(gfield, l).values[keep]
            expo = np.where(rk < x, gamma + l, gamma)
            majd = ratio_arg ** expo * rho ** (2 * p.k - p.n - l)
            worst_d[l] = max(worst_d[l], float(np.max(np.abs(dvals) / majd)))
    return BoundReport(gamma=gamma, mu=mu, worst=worst,
                       worst_derivative={int(l): v for l, v in worst_d.items()},
                       n_pairs=n_pairs, excluded_band=band)


def weighted_regularity_check(phi: RadialField, gamma: float, p_exp: float,
                              op: DiscreteOperator,
                              residual_tol: float = 1e-6) -> float:
    """Empirical constant C0 in sup r^gamma |phi| <= C0 ||phi||_{L^p}.

    phi must be an approximate kernel element of op away from the origin:
    the interior residual (relative to the operator scale) is verified first
    and the call refuses fields that fail it.
    """
    p = op.p
    if not (0.0 < gamma < p.n - 2 * p.k):
        raise ValueError("gamma must lie in (0, n-2k)")
    if not np.any(phi.values):
        return 0.0
    res = op.matrix @ phi.values
    interior = op.interior.copy()
    # judge the residual away from any pole-like spike: use a robust scale
    scale = np.percentile(np.abs(op.matrix) @ np.abs(phi.values), 90)
    bad = np.abs(res[interior]) > residual_tol * max(scale, 1e-300)
    if np.count_nonzero(bad) > 0.02 * len(res):
        raise ValueError(
            "field is not an approximate kernel element of the operator")
    r = phi.grid.nodes
    half = r <= 0.5 * phi.grid.r_max
    sup_w = float(np.max(r[half] ** gamma * np.abs(phi.values[half])))
    denom = lp_norm(phi, p, p_exp)
    return sup_w / denom
