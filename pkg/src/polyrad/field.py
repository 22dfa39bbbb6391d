"""Sampled radial functions with parity metadata and CSV round-tripping."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import RadialGrid


@dataclass(frozen=True)
class RadialField:
    """Function samples on a RadialGrid.

    parity == "even" declares that the underlying function extends evenly
    across r=0 (all odd derivatives vanish there); differentiation then uses
    reflected ghost values.  parity == "none" makes no claim and one-sided
    stencils are used near the innermost node.
    """

    grid: RadialGrid
    values: np.ndarray
    parity: str = "none"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.grid.nodes.shape:
            raise ValueError("values must match the grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite at every node")
        if self.parity not in ("even", "none"):
            raise ValueError("parity must be 'even' or 'none'")

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def __add__(self, other: "RadialField") -> "RadialField":
        self._check_same_grid(other)
        return RadialField(self.grid, self.values + other.values,
                           self._combine_parity(other))

    def __sub__(self, other: "RadialField") -> "RadialField":
        self._check_same_grid(other)
        return RadialField(self.grid, self.values - other.values,
                           self._combine_parity(other))

    def __mul__(self, c: float) -> "RadialField":
        return RadialField(self.grid, self.values * float(c), self.parity)

    __rmul__ = __mul__

    def _check_same_grid(self, other: "RadialField"):
        if other.grid is not self.grid and not np.array_equal(
                other.grid.nodes, self.grid.nodes):
            raise ValueError("fields live on different grids")

    def _combine_parity(self, other: "RadialField") -> str:
        return "even" if self.parity == other.parity == "even" else "none"

    def to_csv(self, path: str | Path | None = None) -> str:
        """Serialize as 'r,value' rows with 17 significant digits."""
        buf = io.StringIO()
        buf.write("r,value\n")
        for r, v in zip(self.grid.nodes, self.values):
            buf.write(f"{r:.17g},{v:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @staticmethod
    def from_csv(path: str | Path, scheme: str = "uniform",
                 parity: str = "none") -> "RadialField":
        raw = np.loadtxt(path, delimiter=",", skiprows=1)
        grid = RadialGrid(raw[:, 0], scheme, float(raw[-1, 0]))
        return RadialField(grid, raw[:, 1], parity)


def sample(fn, grid: RadialGrid, parity: str = "none") -> RadialField:
    """Sample a vectorized callable on the grid."""
    return RadialField(grid, np.asarray(fn(grid.nodes), dtype=float), parity)
