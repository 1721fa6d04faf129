"""Monte Carlo oracle: Euler-Maruyama paths killed at the boundary.

Provides an independent estimate of the survival probability and of the
conditioned (surviving-path) distribution for the controlled diffusion

    dX = -b(t, X) dt + sigma dW,     killed when X leaves the closed box.

Controls are sampled piecewise-constant in time (one slice per PDE step) and
multilinear in space.  Killing checks the step endpoint only — no boundary
bridge correction — so survival estimates carry a small O(sigma sqrt(dt))
upward bias in addition to the binomial noise; validation tolerances must
budget for both.

Everything is driven by a single seeded generator, so results are reproducible
bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .problem import ControlTrajectory, ProblemSpec, discretize_p0

__all__ = [
    "SurvivalEstimate",
    "simulate_killed",
    "histogram_proportions",
    "pde_bin_masses",
]


@dataclass
class SurvivalEstimate:
    """Survival curve with binomial errors plus the survivors' final positions."""

    times: np.ndarray
    survival: np.ndarray
    stderr: np.ndarray
    final_positions: np.ndarray  # (n_alive, dim), at the last checkpoint
    n_paths: int
    dt: float
    seed: int


def _sample_initial(spec: ProblemSpec, grid: Grid, n_paths: int, rng) -> np.ndarray:
    """Draw starting points from the discretised initial density.

    Nodes are weighted by their quadrature mass and positions jittered
    uniformly inside the node cell (clipped to the box), i.e. a midpoint-rule
    representation of the initial density.
    """
    P0 = discretize_p0(spec, grid).values
    w = P0.ravel() * grid.cell_volume
    w = w / w.sum()
    picks = rng.choice(w.size, size=n_paths, p=w)
    idx = np.unravel_index(picks, grid.shape)
    X = np.empty((n_paths, grid.dim))
    for a in range(grid.dim):
        jitter = rng.uniform(-0.5 * grid.h[a], 0.5 * grid.h[a], size=n_paths)
        X[:, a] = np.clip(grid.xs[a][idx[a]] + jitter, 0.0, grid.x_max[a])
    return X


def _interp_control(grid: Grid, B: ControlTrajectory, n_slice: int, X: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of the control slice at the path positions."""
    vals = B.values[n_slice]
    out = np.empty_like(X)
    if grid.dim == 1:
        for a in range(1):
            out[:, a] = np.interp(X[:, 0], grid.xs[0], vals[:, a])
        return out
    x0, x1 = grid.xs
    h0, h1 = grid.h
    i = np.clip((X[:, 0] / h0).astype(int), 0, grid.n_h[0] - 1)
    j = np.clip((X[:, 1] / h1).astype(int), 0, grid.n_h[1] - 1)
    s = (X[:, 0] - x0[i]) / h0
    t = (X[:, 1] - x1[j]) / h1
    for a in range(2):
        v = vals[..., a]
        out[:, a] = (
            (1 - s) * (1 - t) * v[i, j]
            + s * (1 - t) * v[i + 1, j]
            + (1 - s) * t * v[i, j + 1]
            + s * t * v[i + 1, j + 1]
        )
    return out


def simulate_killed(
    spec: ProblemSpec,
    grid: Grid,
    B: ControlTrajectory | None = None,
    *,
    n_paths: int = 100_000,
    dt: float = 1e-4,
    seed: int = 0,
    n_checkpoints: int = 10,
    checkpoint_times: np.ndarray | None = None,
) -> SurvivalEstimate:
    """Simulate killed paths and record the survival curve at checkpoints.

    Checkpoints default to ``n_checkpoints`` evenly spaced times ending at
    ``T``; pass ``checkpoint_times`` (increasing, in (0, T]) to place them
    explicitly, e.g. to start recording only once killing is statistically
    resolvable at the given path count.  ``B`` is the control (the drift
    applied is ``-B``); ``None`` means drift-free motion.
    """
    rng = np.random.default_rng(seed)
    T = spec.T
    n_steps = max(1, round(T / dt))
    dt_eff = T / n_steps
    if checkpoint_times is None:
        check_times = np.linspace(T / n_checkpoints, T, n_checkpoints)
    else:
        check_times = np.asarray(checkpoint_times, dtype=float)
        if check_times.ndim != 1 or np.any(np.diff(check_times) <= 0):
            raise ValueError("checkpoint_times must be strictly increasing")
        if check_times[0] <= 0 or check_times[-1] > T + 1e-12:
            raise ValueError("checkpoint_times must lie in (0, T]")
        n_checkpoints = check_times.size
    check_steps = np.rint(check_times / dt_eff).astype(int)

    X = _sample_initial(spec, grid, n_paths, rng)
    alive = np.ones(n_paths, dtype=bool)
    lo = np.zeros(grid.dim)
    hi = np.asarray(grid.x_max)

    survival = np.empty(n_checkpoints)
    stderr = np.empty(n_checkpoints)
    ci = 0
    root_dt = np.sqrt(dt_eff)
    for step in range(1, n_steps + 1):
        t = (step - 1) * dt_eff
        noise = rng.standard_normal((n_paths, grid.dim))
        if B is not None:
            n_slice = min(int(t / grid.dt), grid.n_t - 1)
            drift = -_interp_control(grid, B, n_slice, X) * dt_eff
        else:
            drift = 0.0
        X = np.where(alive[:, None], X + drift + spec.sigma * root_dt * noise, X)
        alive &= np.all((X >= lo) & (X <= hi), axis=1)
        while ci < n_checkpoints and check_steps[ci] == step:
            frac = alive.mean()
            survival[ci] = frac
            stderr[ci] = np.sqrt(frac * (1.0 - frac) / n_paths)
            ci += 1

    return SurvivalEstimate(
        times=check_times,
        survival=survival,
        stderr=stderr,
        final_positions=X[alive].copy(),
        n_paths=n_paths,
        dt=dt_eff,
        seed=seed,
    )


def histogram_proportions(positions: np.ndarray, edges: np.ndarray):
    """Bin proportions of surviving paths with their binomial standard errors."""
    x = positions[:, 0] if positions.ndim == 2 else positions
    counts, _ = np.histogram(x, bins=edges)
    n = x.size
    props = counts / n
    return props, np.sqrt(props * (1.0 - props) / n)


def pde_bin_masses(grid: Grid, P_values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Mass of the normalised density in each bin (1D, trapezoid quadrature)."""
    if grid.dim != 1:
        raise ValueError("bin masses are a 1D diagnostic")
    x = grid.xs[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (P_values[1:] + P_values[:-1]) * grid.h[0])])
    cum_at = np.interp(edges, x, cum)
    masses = np.diff(cum_at)
    return masses / cum[-1]
