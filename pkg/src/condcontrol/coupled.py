r"""Fixed-point iteration coupling the backward and forward sweeps.

One outer iteration maps the lagged pair ``(P, U)`` to

    U_bar = backward sweep with lagged (P, U);   U' = (1-theta) U + theta U_bar
    P_bar = forward sweep with fresh U', lagged masses of P;
                                                 P' = (1-theta) P + theta P_bar

and stops when the weighted space-time l2 distance of both updates drops below
the tolerance.  ``theta`` starts at 1 (plain iteration) and is halved, down to
1/16, whenever the larger of the two gaps grows from one iteration to the
next; relaxation is often needed for long horizons where the final mass is
tiny and the terminal data correspondingly large.

The scaled formulation adds ``gamma u`` / ``gamma p`` to the right-hand sides
of the two sweeps (implicitly, in the slice being solved for).  With ``gamma``
near the principal decay rate the scaled density keeps O(1) mass over long
horizons; :func:`unscale` maps the scaled pair back via ``p = exp(-gamma t)
p_s`` and ``u = exp(+gamma t) u_s``.  Running with ``gamma = 0`` goes through
the identical code path as the plain solver.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMassError
from .fp import fp_forward_sweep
from .grid import Grid, SpaceTimeField, centered_gradient, norm_l2, norm_l2_spacetime
from .hamiltonian import truncate
from .hjb import hjb_backward_sweep
from .problem import ControlTrajectory, ProblemSpec

logger = logging.getLogger(__name__)

__all__ = [
    "FixedPointResult",
    "solve_finite_horizon",
    "solve_scaled",
    "unscale",
    "recover_control",
    "turnpike_distances",
]

THETA_MIN = 1.0 / 16.0


@dataclass
class FixedPointResult:
    """Converged (or flagged) output of the coupled iteration."""

    P: SpaceTimeField
    U: SpaceTimeField
    B: ControlTrajectory | None
    converged: bool
    iterations: int
    gaps_p: np.ndarray
    gaps_u: np.ndarray
    pairing: np.ndarray  # max_n |h^d sum U^n P^n + eps| per iteration
    thetas: np.ndarray
    gamma: float = 0.0

    @property
    def masses(self) -> np.ndarray:
        return self.P.masses()


def _pairing_deviation(grid: Grid, eps: float, P: np.ndarray, U: np.ndarray) -> float:
    axes = tuple(range(1, P.ndim))
    pair = grid.cell_volume * np.sum(P * U, axis=axes)
    return float(np.max(np.abs(pair + eps)))


def _unpack_init(grid: Grid, init) -> tuple[np.ndarray, np.ndarray]:
    P0, U0 = init
    P = np.array(P0.values if isinstance(P0, SpaceTimeField) else P0, dtype=float)
    U = np.array(U0.values if isinstance(U0, SpaceTimeField) else U0, dtype=float)
    want = (grid.n_t + 1,) + grid.shape
    if P.shape != want or U.shape != want:
        raise ValueError(f"initial trajectories must have shape {want}, got "
                         f"{P.shape} and {U.shape}")
    return P, U


def _fixed_point(spec, grid, gamma, theta, tol, max_iters, tol_newton, init=None):
    if init is None:
        U = np.zeros((grid.n_t + 1,) + grid.shape)
        P = fp_forward_sweep(spec, grid, U, None, gamma).values
    else:
        P, U = _unpack_init(grid, init)

    gaps_p, gaps_u, pairing, thetas = [], [], [], []
    converged = False
    for k in range(1, max_iters + 1):
        U_bar = hjb_backward_sweep(spec, grid, P, U, gamma, tol_newton).values
        U_new = (1.0 - theta) * U + theta * U_bar
        P_bar = fp_forward_sweep(spec, grid, U_new, P, gamma).values
        P_new = (1.0 - theta) * P + theta * P_bar

        gap_u = norm_l2_spacetime(grid, U_new - U)
        gap_p = norm_l2_spacetime(grid, P_new - P)
        gaps_u.append(gap_u)
        gaps_p.append(gap_p)
        pairing.append(_pairing_deviation(grid, spec.epsilon, P_new, U_new))
        thetas.append(theta)
        U, P = U_new, P_new

        if gap_u <= tol and gap_p <= tol:
            converged = True
            break
        if k >= 2 and max(gap_p, gap_u) > max(gaps_p[-2], gaps_u[-2]) and theta > THETA_MIN:
            theta = max(theta / 2.0, THETA_MIN)
            logger.info("iteration %d: gap grew, relaxing with theta=%g", k, theta)

    if not converged:
        logger.warning(
            "fixed point not converged after %d iterations (gaps %.3e / %.3e)",
            len(gaps_p), gaps_p[-1], gaps_u[-1],
        )
    return (
        SpaceTimeField(grid, P),
        SpaceTimeField(grid, U),
        converged,
        len(gaps_p),
        np.asarray(gaps_p),
        np.asarray(gaps_u),
        np.asarray(pairing),
        np.asarray(thetas),
    )


def recover_control(spec: ProblemSpec, P: SpaceTimeField, U: SpaceTimeField) -> ControlTrajectory:
    """Feedback drift of the converged pair, one block per time step.

    Step ``n`` pairs the mass at level ``n+1`` (the one the scheme couples to)
    with the centred gradient of the value slice ``n``, clipped to the control
    bound.  Boundary nodes carry zero drift; the density vanishes there.
    """
    grid = P.grid
    masses = P.masses()
    if np.any(masses <= 0):
        raise DegenerateMassError("cannot recover a control from a null density")
    vals = np.zeros((grid.n_t,) + grid.shape + (grid.dim,))
    for n in range(grid.n_t):
        g = centered_gradient(grid, U.values[n])
        vals[n] = truncate(masses[n + 1] * g, spec.M, axis=-1)
    return ControlTrajectory(grid, vals)


def solve_finite_horizon(
    spec: ProblemSpec,
    grid: Grid,
    *,
    init=None,
    continuation: bool = False,
    theta: float = 1.0,
    tol: float = 1e-6,
    max_iters: int = 500,
    tol_newton: float = 1e-10,
) -> FixedPointResult:
    """Solve the coupled optimality system on ``[0, T]``.

    Starts from ``U = 0`` and the drift-free (killed heat) density, or from
    ``init = (P, U)`` when given; returns the converged trajectories, the
    recovered feedback control, and the iteration diagnostics.
    ``converged=False`` flags an exhausted iteration budget; the last
    iterates are still returned.

    ``continuation=True`` first solves on the half horizon (same step size)
    and warm-starts the full problem from that solution, holding the final
    slices flat over the second half.  Useful for long horizons where the
    cold-started iteration needs heavy relaxation.
    """
    if continuation and init is None and grid.n_t >= 2:
        n_half = grid.n_t // 2
        half = Grid(grid.x_max, grid.n_h, T=grid.dt * n_half, n_t=n_half)
        warm = solve_finite_horizon(
            spec.with_horizon(half.T), half,
            theta=theta, tol=tol, max_iters=max_iters, tol_newton=tol_newton,
        )
        shape = (grid.n_t + 1,) + grid.shape
        P0, U0 = np.empty(shape), np.empty(shape)
        P0[: n_half + 1], U0[: n_half + 1] = warm.P.values, warm.U.values
        P0[n_half + 1 :], U0[n_half + 1 :] = warm.P.values[-1], warm.U.values[-1]
        init = (P0, U0)
    P, U, ok, iters, gp, gu, pr, th = _fixed_point(
        spec, grid, 0.0, theta, tol, max_iters, tol_newton, init
    )
    B = recover_control(spec, P, U)
    return FixedPointResult(P, U, B, ok, iters, gp, gu, pr, th, gamma=0.0)


def solve_scaled(
    spec: ProblemSpec,
    grid: Grid,
    gamma: float,
    *,
    init=None,
    theta: float = 1.0,
    tol: float = 1e-6,
    max_iters: int = 500,
    tol_newton: float = 1e-10,
) -> FixedPointResult:
    """Solve the growth-compensated system; fields returned are the scaled ones.

    The attached control is computed from the unscaled pair (the physically
    meaningful drift).  Note the returned ``P``/``U`` require :func:`unscale`
    before being compared with plain solutions.
    """
    P, U, ok, iters, gp, gu, pr, th = _fixed_point(
        spec, grid, gamma, theta, tol, max_iters, tol_newton, init
    )
    P_phys, U_phys = unscale(P, U, gamma)
    B = recover_control(spec, P_phys, U_phys)
    return FixedPointResult(P, U, B, ok, iters, gp, gu, pr, th, gamma=gamma)


def unscale(P_s: SpaceTimeField, U_s: SpaceTimeField, gamma: float):
    """Map scaled trajectories back: ``p = e^(-gamma t) p_s, u = e^(gamma t) u_s``."""
    grid = P_s.grid
    t = grid.times
    decay = np.exp(-gamma * t).reshape((-1,) + (1,) * grid.dim)
    growth = np.exp(gamma * t).reshape((-1,) + (1,) * grid.dim)
    return (
        SpaceTimeField(grid, P_s.values * decay),
        SpaceTimeField(grid, U_s.values * growth),
    )


def turnpike_distances(P: SpaceTimeField, U: SpaceTimeField, stationary):
    """Spatial l2 distances to the stationary pair along the trajectory.

    Compares the mass-normalised density against the stationary density and
    the mass-weighted value against the stationary value, time level by time
    level.  Returns ``(times, dist_p, dist_u)``.
    """
    grid = P.grid
    p_inf = stationary.p.values
    u_inf = stationary.u.values
    if p_inf.shape != grid.shape:
        raise ValueError("stationary solution lives on an incompatible grid")
    masses = P.masses()
    if np.any(masses <= 0):
        raise DegenerateMassError("density trajectory lost all its mass")
    dist_p = np.empty(grid.n_t + 1)
    dist_u = np.empty(grid.n_t + 1)
    for n in range(grid.n_t + 1):
        dist_p[n] = norm_l2(grid, P.values[n] / masses[n] - p_inf)
        dist_u[n] = norm_l2(grid, masses[n] * U.values[n] - u_inf)
    return grid.times, dist_p, dist_u
