r"""Discrete transport operator and the implicit Fokker-Planck forward sweep.

The scheme marches

    (P^{n+1} - P^n)/dt - sigma^2/2 Lap_h P^{n+1} - B(P^{n+1}) = gamma P^{n+1}

with zero boundary data, where the discrete transport operator

    B_i(P) = sum_axes (1/h_a) [ P_i d1_a(i) - P_{i-e_a} d1_a(i-e_a)
                                + P_{i+e_a} d2_a(i+e_a) - P_i d2_a(i) ]

uses the upwind Hamiltonian partials ``d1 = dH/dxi1 <= 0`` and
``d2 = dH/dxi2 >= 0`` as split velocities; it is the exact adjoint of the
transport linearisation appearing in the backward sweep's Newton matrices.
The step matrix is an M-matrix: off-diagonals are nonpositive and interior
column sums are nonnegative, which gives exact positivity preservation and a
nonincreasing total mass (for ``gamma = 0``).

``gamma`` is the growth compensation used by the scaled formulation; it is
applied implicitly in the unknown time slice.
"""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import DegenerateMassError, StructureError
from .grid import Grid, SpaceTimeField, interior_grad_pairs
from .hamiltonian import numerical_H_partials
from .problem import ControlTrajectory, ProblemSpec, discretize_p0

logger = logging.getLogger(__name__)

__all__ = [
    "transport_coefficients",
    "transport_matrix",
    "assemble_B",
    "fp_forward_sweep",
    "fp_forward_sweep_drift",
]

#: densities this far below zero are clamped; anything lower aborts the run
NEGATIVITY_TOL = 1e-12


def transport_coefficients(spec: ProblemSpec, grid: Grid, U_values: np.ndarray, mu: float):
    """Upwind split velocities ``(d1, d2)`` per axis at the interior nodes."""
    gp = interior_grad_pairs(grid, U_values)
    fx = spec.f_values(grid, interior=True)
    parts = numerical_H_partials(fx, mu, gp, spec.M)
    return parts.xi1, parts.xi2


def _masked_wrap(data: np.ndarray, n_fast: int) -> np.ndarray:
    """Zero the entries of a +/-1 off-diagonal that would cross a grid row.

    For both unit offsets the invalid flattened positions are those where
    ``m + 1`` is a multiple of the fast-axis length.
    """
    out = data.copy()
    idx = np.arange(out.size)
    out[(idx + 1) % n_fast == 0] = 0.0
    return out


def transport_matrix(grid: Grid, d1, d2) -> sp.csr_matrix:
    """Assemble B on the interior nodes from per-axis split velocities.

    ``d1``/``d2`` are tuples of interior-shaped arrays (nonpositive resp.
    nonnegative for coefficients coming from the numerical Hamiltonian).
    """
    if grid.dim == 1:
        h = grid.h[0]
        c1 = np.asarray(d1[0], dtype=float).ravel()
        c2 = np.asarray(d2[0], dtype=float).ravel()
        diag = (c1 - c2) / h
        sub = -c1[:-1] / h
        sup = c2[1:] / h
        return sp.diags([sub, diag, sup], [-1, 0, 1], format="csr")

    h0, h1 = grid.h
    n1 = grid.n_h[1] - 1
    c1_0 = np.asarray(d1[0], dtype=float).ravel()
    c1_1 = np.asarray(d1[1], dtype=float).ravel()
    c2_0 = np.asarray(d2[0], dtype=float).ravel()
    c2_1 = np.asarray(d2[1], dtype=float).ravel()
    diag = (c1_0 - c2_0) / h0 + (c1_1 - c2_1) / h1
    sub1 = _masked_wrap(-c1_1[:-1] / h1, n1)
    sup1 = _masked_wrap(c2_1[1:] / h1, n1)
    sub0 = -c1_0[:-n1] / h0
    sup0 = c2_0[n1:] / h0
    return sp.diags(
        [sub0, sub1, diag, sup1, sup0], [-n1, -1, 0, 1, n1], format="csr"
    )


def assemble_B(spec: ProblemSpec, grid: Grid, U_values: np.ndarray, mu: float) -> sp.csr_matrix:
    """Transport operator at mass ``mu`` and value slice ``U_values``."""
    d1, d2 = transport_coefficients(spec, grid, U_values, mu)
    return transport_matrix(grid, d1, d2)


def _fp_step_1d(grid, sigma, d1, d2, gamma, p_int):
    h = grid.h[0]
    dt = grid.dt
    c1 = d1[0].ravel()
    c2 = d2[0].ravel()
    diag = 1.0 + dt * (sigma**2 / h**2 - (c1 - c2) / h - gamma)
    sub = dt * (-(sigma**2) / (2 * h**2) + c1[:-1] / h)
    sup = dt * (-(sigma**2) / (2 * h**2) - c2[1:] / h)
    return linalg.solve_tridiagonal(sub, diag, sup, p_int)


def _fp_step_nd(grid, sigma, d1, d2, gamma, p_int, lap):
    dt = grid.dt
    n = grid.n_interior
    B = transport_matrix(grid, d1, d2)
    M = sp.identity(n, format="csr") - dt * (0.5 * sigma**2 * lap + B + gamma * sp.identity(n, format="csr"))
    return linalg.lu_solve(M, p_int)


def _sweep(spec, grid, coefficient_fn, gamma, p0_values):
    """Shared forward marching loop; ``coefficient_fn(n) -> (d1, d2)``."""
    if p0_values is None:
        p0_values = discretize_p0(spec, grid).values
    core = grid.interior
    out = np.zeros((grid.n_t + 1,) + grid.shape)
    out[0] = p0_values
    lap = linalg.dirichlet_laplacian(grid) if grid.dim > 1 else None
    clamped = 0
    for n in range(grid.n_t):
        d1, d2 = coefficient_fn(n)
        p_int = out[n][core].ravel()
        if grid.dim == 1:
            nxt = _fp_step_1d(grid, spec.sigma, d1, d2, gamma, p_int)
        else:
            nxt = _fp_step_nd(grid, spec.sigma, d1, d2, gamma, p_int, lap)
        low = nxt.min()
        if low < -NEGATIVITY_TOL:
            raise StructureError(
                f"density step {n} produced negativity {low:.3e} beyond "
                f"{-NEGATIVITY_TOL:.0e}; the scheme structure is broken"
            )
        if low < 0.0:
            clamped += int(np.count_nonzero(nxt < 0.0))
            nxt = np.maximum(nxt, 0.0)
        out[n + 1][core] = nxt.reshape(d1[0].shape)
    if clamped:
        logger.warning("clamped %d round-off-negative density entries", clamped)
    return SpaceTimeField(grid, out)


def fp_forward_sweep(
    spec: ProblemSpec,
    grid: Grid,
    U,
    P_lagged=None,
    gamma: float = 0.0,
    p0_values: np.ndarray | None = None,
) -> SpaceTimeField:
    """Forward sweep with transport coefficients from the value function ``U``.

    ``U`` supplies one slice per time level; step ``n`` uses the gradient of
    slice ``n`` together with the lagged mass of ``P_lagged`` at level ``n+1``
    (all ones when ``P_lagged`` is None, as in the very first iteration where
    the transport vanishes anyway).
    """
    U_values = U.values if isinstance(U, SpaceTimeField) else np.asarray(U, dtype=float)
    if P_lagged is None:
        lag_masses = np.ones(grid.n_t + 1)
    else:
        lag = P_lagged.values if isinstance(P_lagged, SpaceTimeField) else np.asarray(P_lagged)
        axes = tuple(range(1, lag.ndim))
        lag_masses = grid.cell_volume * lag.sum(axis=axes)
        if np.any(lag_masses[1:] <= 0):
            raise DegenerateMassError("lagged density trajectory has nonpositive mass")

    def coeffs(n):
        return transport_coefficients(spec, grid, U_values[n], float(lag_masses[n + 1]))

    return _sweep(spec, grid, coeffs, gamma, p0_values)


def fp_forward_sweep_drift(
    spec: ProblemSpec,
    grid: Grid,
    B: ControlTrajectory,
    p0_values: np.ndarray | None = None,
) -> SpaceTimeField:
    """Forward sweep under an explicit drift, upwind-split per axis.

    Used to price arbitrary controls (cost comparisons, simulation
    cross-checks): the split velocities are ``min(b, 0)`` / ``max(b, 0)``
    componentwise, which reduces to the optimality-system transport when ``b``
    comes from the Hamiltonian gradient.
    """
    core = grid.interior

    def coeffs(n):
        v = B.values[n]
        d1 = tuple(np.minimum(v[core + (a,)], 0.0) for a in range(grid.dim))
        d2 = tuple(np.maximum(v[core + (a,)], 0.0) for a in range(grid.dim))
        return d1, d2

    return _sweep(spec, grid, coeffs, 0.0, p0_values)
