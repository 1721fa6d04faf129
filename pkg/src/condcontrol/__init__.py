"""Optimal control of diffusions conditioned on survival in a bounded domain.

The package discretises the coupled backward/forward optimality system of the
survival-conditioned control problem (a Hamilton-Jacobi-Bellman equation with
nonlocal mass couplings, paired with a Fokker-Planck equation), the associated
stationary principal-eigenvalue system, and a growth-compensated reformulation
for long horizons, plus a killed-diffusion Monte Carlo oracle for validation.
"""

from .coupled import (
    FixedPointResult,
    recover_control,
    solve_finite_horizon,
    solve_scaled,
    turnpike_distances,
    unscale,
)
from .errors import (
    CondControlError,
    ConfigError,
    DegenerateMassError,
    EigenConvergenceError,
    NewtonError,
    SingularOperatorError,
    StructureError,
)
from .fp import assemble_B, fp_forward_sweep, fp_forward_sweep_drift
from .grid import (
    Field,
    GradPair,
    Grid,
    SpaceTimeField,
    centered_gradient,
    d_plus,
    grad_h,
    interior_grad_pairs,
    laplacian_h,
    mass,
    norm_l2,
    norm_l2_spacetime,
)
from .hamiltonian import (
    check_H,
    numerical_H,
    numerical_H_partials,
    optimal_control,
    truncate,
)
from .hjb import assemble_F, assemble_G, hjb_backward_sweep
from .linalg import lu_solve, principal_eigenpair
from .montecarlo import (
    SurvivalEstimate,
    histogram_proportions,
    pde_bin_masses,
    simulate_killed,
)
from .problem import (
    ControlTrajectory,
    ProblemSpec,
    case_1,
    case_2,
    case_3,
    case_4,
    case_5,
    clipped_bump,
    discretize_p0,
    eval_cost,
    exp_bump,
    linear_gradient,
)
from .stationary import StationaryResult, solve_stationary

__version__ = "0.1.0"
