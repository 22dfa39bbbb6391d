"""Sobolev and Hardy quotients, coercivity margins, mollification.

The discrete H-k norm proxy is the Delta^k quadratic form itself, so the
unperturbed margin is exactly 1 and perturbations read as spectral shifts of
the generalized eigenproblem  Q_{Delta^k + h - V} u = margin * Q_{Delta^k} u
on Dirichlet-constrained vectors.  The reported sufficient smallness
threshold for Hardy potentials is mu_0 = 1 / (2 C_H L): below it the
perturbed form keeps at least half its coercivity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .field import RadialField
from .grid import RadialGrid
from .operators import laplacian_matrix
from .params import ProblemParams
from .potentials import HardyPotential, mollify
from .quadrature import hk_seminorm, lp_norm, weighted_integral
from .greens import dx_weights


def sobolev_quotient(f: RadialField, p: ProblemParams,
                     boundary_tol: float = 1e-6,
                     spacing_floor: float | str = 0.0) -> float:
    """||f||_{2*}^2 / int (Delta^{k/2} f)^2 dx for compactly supported f."""
    scale = float(np.max(np.abs(f.values)))
    if scale == 0.0:
        raise ValueError("quotient of the zero field is undefined")
    if abs(f.values[-1]) > boundary_tol * scale:
        raise ValueError("field must (numerically) vanish at r_max")
    num = lp_norm(f, p, p.two_star) ** 2
    den = hk_seminorm(f, p, spacing_floor)
    return num / den


def hardy_quotient(f: RadialField, p: ProblemParams,
                   boundary_tol: float = 1e-6,
                   spacing_floor: float | str = 0.0) -> float:
    """int f^2 r^{-2k} dx / int (Delta^{k/2} f)^2 dx.

    The weighted integral's first-cell power fit raises when f^2 r^{-2k} is
    not integrable against r^{n-1} near the origin.
    """
    scale = float(np.max(np.abs(f.values)))
    if scale == 0.0:
        raise ValueError("quotient of the zero field is undefined")
    if abs(f.values[-1]) > boundary_tol * scale:
        raise ValueError("field must (numerically) vanish at r_max")
    weighted = RadialField(
        f.grid, f.values ** 2 * f.grid.nodes ** (-2.0 * p.k),
        "even" if f.parity == "even" else "none")
    num = weighted_integral(weighted, p)
    den = hk_seminorm(f, p, spacing_floor)
    return num / den


def hardy_best_constant(n: int, k: int) -> float | None:
    """Sharp constant of the k-th order Hardy inequality when known in closed
    form (k=1: (2/(n-2))^2); None otherwise."""
    if k == 1:
        return (2.0 / (n - 2.0)) ** 2
    return None


def _halfop_matrix(p: ProblemParams, grid: RadialGrid) -> np.ndarray:
    """Matrix of Delta^{k/2} (gradient form for odd k) with even folding."""
    L = laplacian_matrix(grid, p.n)
    C = np.eye(len(grid))
    for _ in range(p.k // 2):
        C = L @ C
    if p.k % 2 == 1:
        from .fdcalc import _plan
        D1 = np.zeros_like(L)
        for i, (src, wt) in enumerate(_plan(grid, 1, 0.0, "even")):
            np.add.at(D1[i], src, wt)
        C = D1 @ C
    return C


@dataclass(frozen=True)
class CoercivityReport:
    """Relative coercivity margin of Delta^k + h - V against Delta^k."""

    margin: float
    hardy_constant_used: float
    mu_threshold: float
    L_bound: float
    lambda1_form: float

    def as_dict(self) -> dict:
        return {"margin": self.margin,
                "hardy_constant_used": self.hardy_constant_used,
                "mu_threshold": self.mu_threshold,
                "L_bound": self.L_bound,
                "lambda1_form": self.lambda1_form}


def coercivity_margin(p: ProblemParams, h_field: RadialField | None,
                      V: HardyPotential | None, grid: RadialGrid,
                      L_bound: float | None = None) -> CoercivityReport:
    """Smallest generalized eigenvalue of the perturbed quadratic form.

    h_field is a bounded zeroth-order coefficient (None means 0); V is an
    almost-Hardy potential subtracted from the operator.  Dirichlet
    conditions are imposed by clamping the k outermost nodes.
    """
    r = grid.nodes
    h_vals = np.zeros_like(r) if h_field is None else h_field.values
    v_vals = np.zeros_like(r) if V is None else V(r)
    C = _halfop_matrix(p, grid)
    W = dx_weights(grid, p)
    free = np.arange(len(grid) - p.k)
    Q0 = (C.T * W) @ C
    Q0 = Q0[np.ix_(free, free)]
    Q0 = 0.5 * (Q0 + Q0.T)

    # empirical Hardy constant of the discretization: max of the Hardy form
    # against the reference form
    H = np.diag(W * r ** (-2.0 * p.k))[np.ix_(free, free)]
    hardy_disc = float(sla.eigh(H, Q0, eigvals_only=True,
                                subset_by_index=[len(free) - 1,
                                                 len(free) - 1])[0])
    sharp = hardy_best_constant(p.n, p.k)
    hardy_used = sharp if sharp is not None else hardy_disc

    M1 = np.diag(W)[np.ix_(free, free)]
    lam1_form = 1.0 / float(sla.eigh(M1, Q0, eigvals_only=True,
                                     subset_by_index=[len(free) - 1,
                                                      len(free) - 1])[0])
    if L_bound is None:
        L_bound = max(1.0, float(np.max(np.abs(h_vals))))
    mu_threshold = 1.0 / (2.0 * hardy_used * L_bound)

    if not np.any(h_vals) and not np.any(v_vals):
        margin = 1.0  # identical quadratic forms
    else:
        P = np.diag(W * (h_vals - v_vals))[np.ix_(free, free)]
        Q1 = Q0 + 0.5 * (P + P.T)
        margin = float(sla.eigh(Q1, Q0, eigvals_only=True,
                                subset_by_index=[0, 0])[0])
    return CoercivityReport(margin=margin, hardy_constant_used=hardy_used,
                            mu_threshold=mu_threshold, L_bound=L_bound,
                            lambda1_form=lam1_form)


def mollify_potential(V: HardyPotential, eps: float) -> HardyPotential:
    """Smoothly kill V inside r <= eps, keep it intact beyond 2 eps."""
    return mollify(V, eps)
