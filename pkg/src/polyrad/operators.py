"""Discrete radial Delta^k - lambda - V with Dirichlet boundary rows.

The one-Laplacian matrix L realizes -(d^2/dr^2 + (n-1)/r d/dr) with
even-parity folding across the origin (ghost columns reflect back onto
interior ones), Delta^k is its k-th power, and the last k rows are replaced
by the boundary conditions u = u' = ... = u^{(k-1)} = 0 at r = r_max.
Rows stay banded with bandwidth ~ k * stencil width; the matrix is kept dense
for factorization simplicity at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .fdcalc import _plan, fornberg_weights
from .field import RadialField
from .grid import RadialGrid
from .params import ProblemParams
from .potentials import HardyPotential, zero_potential


def laplacian_matrix(grid: RadialGrid, n: int) -> np.ndarray:
    """Dense matrix of the positive radial Laplacian with even folding."""
    key = ("lapmat", n)
    if key in grid._caches:
        return grid._caches[key]
    nn = len(grid)
    L = np.zeros((nn, nn))
    plan1 = _plan(grid, 1, 0.0, "even")
    plan2 = _plan(grid, 2, 0.0, "even")
    r = grid.nodes
    for i in range(nn):
        src1, w1 = plan1[i]
        src2, w2 = plan2[i]
        np.add.at(L[i], src2, -w2)
        np.add.at(L[i], src1, -(n - 1) / r[i] * w1)
    grid._caches[key] = L
    return L


def boundary_rows(grid: RadialGrid, k: int) -> np.ndarray:
    """Rows imposing u^{(j)}(r_max) = 0 for j = 0..k-1 (one-sided stencils)."""
    nn = len(grid)
    rows = np.zeros((k, nn))
    w = 9
    idx = np.arange(nn - w, nn)
    rows[0, -1] = 1.0
    for j in range(1, k):
        rows[j, idx] = fornberg_weights(grid.nodes[idx], grid.r_max, j)
    return rows


@dataclass
class DiscreteOperator:
    """Banded-structure discrete operator A u = (Delta^k - lambda - V) u."""

    p: ProblemParams
    grid: RadialGrid
    V: HardyPotential
    matrix: np.ndarray = field(repr=False)
    bandwidth: int
    n_bc: int

    @cached_property
    def lu(self):
        return sla.lu_factor(self.matrix)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self.lu, rhs)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ u

    @property
    def interior(self) -> np.ndarray:
        """Mask of rows carrying the differential equation (not BCs)."""
        m = np.ones(len(self.grid), dtype=bool)
        m[-self.n_bc:] = False
        return m

    def interior_apply(self, f: RadialField) -> np.ndarray:
        return (self.matrix @ f.values)[self.interior]


def assemble_operator(p: ProblemParams, V: HardyPotential | None,
                      grid: RadialGrid) -> DiscreteOperator:
    """Radial Delta^k - lambda - V on the grid, Dirichlet rows at r_max."""
    if V is None:
        V = zero_potential(p.k)
    if V.k != p.k:
        raise ValueError("potential class order does not match the operator")
    if len(grid) < 4 * p.k + 2:
        raise ValueError(
            f"grid has {len(grid)} nodes; order k={p.k} needs >= {4 * p.k + 2}")
    L = laplacian_matrix(grid, p.n)
    A = np.eye(len(grid))
    for _ in range(p.k):
        A = L @ A
    r = grid.nodes
    A -= np.diag(p.lam + V(r))
    A[-p.k:, :] = boundary_rows(grid, p.k)
    bw = p.k * 10  # stencil window is order+7 <= 9 per Laplacian factor
    return DiscreteOperator(p=p, grid=grid, V=V, matrix=A,
                            bandwidth=bw, n_bc=p.k)


def coercivity_ok(op: DiscreteOperator) -> bool:
    """Cheap invertibility probe: finite LU factors with nonzero pivots."""
    try:
        lu, piv = op.lu
    except Exception:
        return False
    d = np.abs(np.diag(lu))
    return bool(np.all(np.isfinite(lu)) and d.min() > 0.0)
