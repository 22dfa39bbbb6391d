"""polyrad: a desk-scale laboratory for radial polyharmonic critical problems.

Grids, high-order radial calculus, extremal bubble profiles, Green's
functions (explicit, Boggio, and discrete), Pohozaev boundary identities,
Hardy/Sobolev quotients with coercivity margins, and a Newton/continuation
explorer for the critical boundary-value problem on the unit ball.
"""

from .params import ProblemParams, SphereConstants, sphere_area
from .grid import RadialGrid, make_grid, core_graded_nodes
from .field import RadialField, sample
from .fdcalc import (differentiate, iterated_laplacian, laplacian,
                     dilation_generator, auto_floor)
from .quadrature import (weighted_integral, integral_between, ball_integral,
                         hk_seminorm, lp_norm)
from .bubbles import (BubbleProfile, bubble_shape_constant, bubble_eval,
                      bubble_field, bubble_residual, bubble_integrals,
                      default_bubble_grid)
from .potentials import (HardyPotential, zero_potential,
                         inverse_power_potential, mollify, smooth_step)
from .operators import DiscreteOperator, assemble_operator, laplacian_matrix
from .greens import (KernelConstants, fundamental_constant,
                     fundamental_solution, boggio_center,
                     boggio_normalization, GreenTable, discrete_green,
                     neumann_iterate, GiraudReport, green_bound_certificate,
                     BoundReport, weighted_regularity_check, dx_weights)
from .pohozaev import (PohozaevReport, deltap_identity_residual,
                       boundary_bilinear, pohozaev_boundary,
                       pohozaev_residual, pohozaev_profile_constant,
                       solution_identity_check)
from .bvp import (principal_eigenvalue, newton_solve, NewtonResult,
                  continuation, track_to_barrier, SolutionBranch, BranchEntry,
                  blowup_diagnostics, BlowupReport, bubble_guess,
                  verify_entry_residual, even_interpolant,
                  default_branch_grid)
from .inequalities import (sobolev_quotient, hardy_quotient,
                           coercivity_margin, CoercivityReport,
                           mollify_potential, hardy_best_constant)
from .powers import PowerSum, fundamental_profile

__version__ = "0.1.0"
