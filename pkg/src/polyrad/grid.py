"""Radial grids on (0, r_max].

The origin is never a sample point: every singular object handled here
(fundamental solutions, Green kernels, blow-up cores) is singular exactly at
r = 0.  Values and derivatives at small r are recovered through even-parity
ghost extension across the origin (see fdcalc).

Two public schemes:

* ``uniform``    -- nodes i*r_max/N.
* ``clustered``  -- tanh-graded map clustering at both ends; with the default
  steepness, a bit under 30% of the nodes land in (0, r_max/10], which is what
  blow-up cores and kernel poles need.

``core_graded_nodes`` builds the composite grids used when a solution
concentrates at a scale ``core`` much smaller than r_max: a uniform block of
nodes across the core glued to a geometric progression out to r_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_NODES = 6  # 4k+2 for k=1; operations with larger k re-check their own needs

_CLUSTER_BETA = 5.0


def _tanh_map(s: np.ndarray, beta: float) -> np.ndarray:
    # increasing bijection [0,1]->[0,1], derivative smallest at both ends
    t0 = np.tanh(beta / 2.0)
    return (np.tanh(beta * (s - 0.5)) + t0) / (2.0 * t0)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing nodes in (0, r_max]."""

    nodes: np.ndarray
    scheme: str
    r_max: float
    _caches: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or len(nodes) < MIN_NODES:
            raise ValueError(f"grid needs at least {MIN_NODES} nodes")
        if nodes[0] <= 0.0:
            raise ValueError("first node must be strictly positive")
        if not np.all(np.diff(nodes) > 0.0):
            raise ValueError("nodes must be strictly increasing")
        if not np.isclose(nodes[-1], self.r_max, rtol=1e-12):
            raise ValueError("last node must equal r_max")

    def __len__(self) -> int:
        return len(self.nodes)

    def __hash__(self):
        return id(self)

    @property
    def extended(self) -> np.ndarray:
        """Nodes with their mirror images across r=0 prepended (even ghost set)."""
        key = "extended"
        if key not in self._caches:
            self._caches[key] = np.concatenate([-self.nodes[::-1], self.nodes])
        return self._caches[key]

    def index_of(self, r: float, tol: float = 1e-9) -> int:
        """Index of the node equal to r (within tol relative to r_max)."""
        i = int(np.argmin(np.abs(self.nodes - r)))
        if abs(self.nodes[i] - r) > tol * max(1.0, self.r_max):
            raise ValueError(f"r={r} is not a grid node (nearest {self.nodes[i]})")
        return i


def make_grid(n_points: int, scheme: str = "uniform", r_max: float = 1.0,
              beta: float = _CLUSTER_BETA) -> RadialGrid:
    """Build a radial grid on (0, r_max].

    ``beta`` steepens the clustered map; the default puts >=25% of the nodes
    in (0, r_max/10].
    """
    if r_max <= 0.0:
        raise ValueError("r_max must be positive")
    if n_points < MIN_NODES:
        raise ValueError(
            f"n_points={n_points} is below the stencil minimum {MIN_NODES}")
    s = np.arange(1, n_points + 1, dtype=float) / n_points
    if scheme == "uniform":
        nodes = r_max * s
    elif scheme == "clustered":
        nodes = r_max * _tanh_map(s, beta)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    nodes[-1] = r_max
    return RadialGrid(nodes, scheme, float(r_max))


def core_graded_nodes(n_points: int, r_max: float, core: float,
                      core_nodes: int = 40) -> RadialGrid:
    """Uniform block across (0, 5*core] glued to a geometric tail up to r_max.

    Keeps ``core_nodes`` samples inside five core lengths, with a constant
    points-per-decade budget outside; suited to fields varying on scale
    ``core`` near the origin and on scale r further out.
    """
    if not 0 < core < r_max / 20.0:
        raise ValueError("core scale must sit well inside (0, r_max)")
    m = min(core_nodes, n_points // 3)
    edge = 5.0 * core
    inner = edge * np.arange(1, m + 1, dtype=float) / m
    n_out = n_points - m
    q = (r_max / edge) ** (1.0 / n_out)
    outer = edge * q ** np.arange(1, n_out + 1, dtype=float)
    nodes = np.concatenate([inner, outer])
    nodes[-1] = r_max
    return RadialGrid(nodes, "clustered", float(r_max))
