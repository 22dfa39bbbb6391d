import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from polyrad import (ProblemParams, RadialField, assemble_operator,
                     default_branch_grid, track_to_barrier)
from polyrad.bvp import principal_eigenpair


@pytest.fixture(scope="session")
def branch_n3():
    """Deep Brezis-Nirenberg branch for k=1, n=3 (shared by the heavy tests)."""
    p = ProblemParams(3, 1)
    lam1 = np.pi ** 2
    grid = default_branch_grid(360)
    op = assemble_operator(p, None, grid)
    _, phi = principal_eigenpair(op)
    seed = RadialField(grid, 1.5 * phi.values, "even")
    return track_to_barrier(p, 0.9 * lam1, seed, step_frac=0.12,
                            min_step_frac=5e-5, sup_cap_factor=120.0,
                            tol=1e-9, n_points=400)


@pytest.fixture(scope="session")
def eigpair_n3():
    p = ProblemParams(3, 1)
    grid = default_branch_grid(300)
    op = assemble_operator(p, None, grid)
    return principal_eigenpair(op)
