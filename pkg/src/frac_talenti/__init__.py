"""Boundary Talenti comparisons for the fractional Dirichlet problem on the unit ball."""

from .errors import ConditionNotSatisfied, ConvergenceError, DomainError, FracTalentiError, PositivityError
from .kernels import green, martin, martin_from_green_limit, poisson, t_moment
from .solver import (
    SolutionHandle,
    boundary_trace,
    harmonic_mean_value,
    radial_boundary_value,
    radial_solution_profile,
    solve_at,
    symmetrized_boundary_value,
    torsion_oracle,
)
from .sources import (
    BoundaryTrace,
    BumpSource,
    RadialProfile,
    angular_model_rearranged,
    distribution_mu,
    lp_norm,
    schwarz,
    truncate,
)
from .special import INFINITY, LogBranch, Normalization, ProblemParams, kappa, torsion_constant
from .talenti import (
    VerificationReport,
    locate_crossing,
    max_admissible_rho,
    verify_bump_boundary_talenti,
    verify_classical_equality,
    verify_green_boundary_talenti,
    verify_higher_order_bump,
    verify_mass_concentration,
    verify_reverse_boundary_talenti,
    verify_s_gt1,
)

__version__ = "0.1.0"
