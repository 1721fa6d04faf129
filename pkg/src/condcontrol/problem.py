"""Problem data for survival-conditioned control runs.

A :class:`ProblemSpec` collects the diffusion strength, horizon, control bound,
the running-cost potential ``f`` (the part of ``L(x,b) = f(x) + |b|^2/2`` that
does not depend on the control), the mean-field cost gradients, the terminal
normalisation weight ``epsilon``, and the initial density.  Mean-field costs
enter through their discrete gradients: callables mapping a normalised node
vector ``q`` to a node vector.  The shipped cases all use linear functionals,
whose gradient is a fixed potential; :func:`linear_gradient` builds those.

Preset cases
------------
``case_1`` / ``case_2``  : 1D, mass starts near x=0.25, terminal cost well at
                           x=0.7, horizon 0.2 resp. 2.0.
``case_3`` / ``case_4``  : 2D, mass starts at the centre; terminal cost either
                           pushes it away from the centre or attracts it to two
                           foci.  Bump locations/widths follow the published
                           figures qualitatively and are config-exposed.
``case_5``               : 1D stationary regime, running-cost well at x=0.7.

Every exponential bump carries a sign switch: ``figure`` uses decaying bumps
(the behaviour shown in the published figures), ``printed`` uses the literal
growing-exponent variants.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DegenerateMassError
from .grid import Field, Grid, SpaceTimeField, mass
from .hamiltonian import truncate

__all__ = [
    "ProblemSpec",
    "ControlTrajectory",
    "linear_gradient",
    "exp_bump",
    "clipped_bump",
    "discretize_p0",
    "eval_cost",
    "case_1",
    "case_2",
    "case_3",
    "case_4",
    "case_5",
    "COST_SIGNS",
]

COST_SIGNS = ("figure", "printed")


def _sign_of(cost_sign: str) -> float:
    if cost_sign not in COST_SIGNS:
        raise ValueError(f"cost_sign must be one of {COST_SIGNS}, got {cost_sign!r}")
    return -1.0 if cost_sign == "figure" else 1.0


def exp_bump(center, width2: float, amplitude: float = 1.0, sign: float = -1.0):
    """Exponential bump ``amplitude * exp(sign * |x - center|^2 / width2)``."""
    center = np.atleast_1d(np.asarray(center, dtype=float))

    def fn(*coords):
        r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, center))
        return amplitude * np.exp(sign * r2 / width2)

    return fn


def clipped_bump(center, width2: float, cutoff: float = 0.05, sign: float = -1.0):
    """Compactly supported bump ``max(0, exp(sign |x-c|^2 / w2) - cutoff)``."""
    base = exp_bump(center, width2, 1.0, sign)

    def fn(*coords):
        return np.maximum(0.0, base(*coords) - cutoff)

    return fn


def linear_gradient(potential: Callable):
    """Discrete gradient of the linear functional ``q -> h^d sum(q * potential)``.

    Linear functionals have a constant gradient, so the returned callable
    ignores its density argument and just samples the potential.
    """

    def grad(grid: Grid, q: np.ndarray) -> np.ndarray:
        return np.broadcast_to(
            np.asarray(potential(*grid.meshgrid()), dtype=float), grid.shape
        )

    return grad


@dataclass(frozen=True)
class ProblemSpec:
    """Data of one control problem (see module docstring)."""

    sigma: float
    T: float
    p0: Callable
    epsilon: float = 0.0
    M: float = np.inf
    f: Callable | None = None
    F_grad: Callable | None = None
    G_grad: Callable | None = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if not self.M > 0:
            raise ValueError("control bound M must be positive")

    def f_values(self, grid: Grid, interior: bool = False):
        """Running-cost potential at the nodes (scalar 0.0 when absent)."""
        if self.f is None:
            return 0.0
        pts = grid.interior_meshgrid() if interior else grid.meshgrid()
        return np.broadcast_to(
            np.asarray(self.f(*pts), dtype=float), pts[0].shape
        ).copy()

    def with_horizon(self, T: float) -> "ProblemSpec":
        return replace(self, T=T)


@dataclass(frozen=True)
class ControlTrajectory:
    """Feedback drift samples, one ``grid.shape + (dim,)`` block per time step."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_t,) + self.grid.shape + (self.grid.dim,)
        if vals.shape != expected:
            raise ValueError(f"control shaped {vals.shape}, expected {expected}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls, grid: Grid) -> "ControlTrajectory":
        return cls(grid, np.zeros((grid.n_t,) + grid.shape + (grid.dim,)))

    def clipped(self, M: float) -> "ControlTrajectory":
        return ControlTrajectory(self.grid, truncate(self.values, M, axis=-1))


def discretize_p0(spec: ProblemSpec, grid: Grid) -> Field:
    """Sample ``p0`` at the nodes, zero the boundary, normalise to unit mass."""
    vals = np.asarray(spec.p0(*grid.meshgrid()), dtype=float)
    vals = np.broadcast_to(vals, grid.shape).copy()
    vals[grid.boundary_mask] = 0.0
    if np.any(vals < 0):
        raise DegenerateMassError("initial density has negative samples")
    total = grid.cell_volume * vals.sum()
    if total <= 0:
        raise DegenerateMassError("initial density vanishes on this grid")
    return Field(grid, vals / total)


def _functional_value(grid: Grid, grad: Callable | None, q: np.ndarray) -> float:
    """Value of a linear functional from its gradient: ``h^d sum(q * grad)``.

    Exact for the linear family shipped here; nonlinear functionals would need
    their own value callables.
    """
    if grad is None:
        return 0.0
    return float(grid.cell_volume * np.sum(q * grad(grid, q)))


def eval_cost(
    spec: ProblemSpec, P: SpaceTimeField, B: ControlTrajectory | None = None
) -> float:
    """Total cost of a density trajectory driven by the control ``B``.

    Rectangle rule in time over the running cost of the *conditioned* density
    plus terminal cost and the ``-epsilon log(final mass)`` normalisation term.
    """
    grid = P.grid
    vol = grid.cell_volume
    masses = P.masses()
    if np.any(masses <= 0):
        raise DegenerateMassError("density trajectory loses all mass")
    fx = spec.f_values(grid)
    total = 0.0
    for n in range(grid.n_t):
        Pn = P.values[n]
        if B is None:
            b2 = 0.0
        else:
            b2 = np.sum(B.values[n] ** 2, axis=-1)
        L = fx + 0.5 * b2
        qn = Pn / masses[n]
        total += grid.dt * (
            float(vol * np.sum(Pn * L)) / masses[n]
            + _functional_value(grid, spec.F_grad, qn)
        )
    qT = P.values[-1] / masses[-1]
    total += _functional_value(grid, spec.G_grad, qT)
    total -= spec.epsilon * float(np.log(masses[-1]))
    return total


# -- preset cases ------------------------------------------------------------


def _start_left_p0(sign: float):
    return clipped_bump(0.25, 0.01, cutoff=0.05, sign=sign)


def case_1(h: float = 5e-4, dt: float = 2e-4, cost_sign: str = "figure"):
    """1D, T=0.2: mass starts near 0.25, terminal cost well at 0.7."""
    s = _sign_of(cost_sign)
    T = 0.2
    spec = ProblemSpec(
        sigma=0.8,
        T=T,
        epsilon=0.0,
        p0=_start_left_p0(s),
        G_grad=linear_gradient(exp_bump(0.7, 0.04, amplitude=-0.5, sign=s)),
    )
    grid = Grid(x_max=1.0, n_h=round(1.0 / h), T=T, n_t=round(T / dt))
    return spec, grid


def case_2(h: float = 5e-4, dt: float = 2e-4, cost_sign: str = "figure"):
    """Same data as case 1 with the long horizon T=2.0."""
    spec, _ = case_1(h=h, dt=dt, cost_sign=cost_sign)
    T = 2.0
    spec = replace(spec, T=T)
    grid = Grid(x_max=1.0, n_h=round(1.0 / h), T=T, n_t=round(T / dt))
    return spec, grid


def _case_2d(g_T: Callable, h: float, dt: float, cost_sign: str):
    s = _sign_of(cost_sign)
    T = 0.2
    spec = ProblemSpec(
        sigma=0.8,
        T=T,
        epsilon=0.0,
        p0=clipped_bump((0.5, 0.5), 0.01, cutoff=0.05, sign=s),
        G_grad=linear_gradient(g_T),
    )
    n = round(1.0 / h)
    grid = Grid(x_max=(1.0, 1.0), n_h=(n, n), T=T, n_t=round(T / dt))
    return spec, grid


def case_3(h: float = 1.0 / 80.0, dt: float = 5e-3, cost_sign: str = "figure"):
    """2D evacuation: terminal cost discourages staying at the centre."""
    s = _sign_of(cost_sign)
    return _case_2d(exp_bump((0.5, 0.5), 0.04, amplitude=0.5, sign=s), h, dt, cost_sign)


def case_4(h: float = 1.0 / 80.0, dt: float = 5e-3, cost_sign: str = "figure"):
    """2D two-focus attraction: terminal cost wells at two diagonal points."""
    s = _sign_of(cost_sign)
    b1 = exp_bump((0.3, 0.3), 0.04, amplitude=-0.5, sign=s)
    b2 = exp_bump((0.7, 0.7), 0.04, amplitude=-0.5, sign=s)
    return _case_2d(lambda x, y: b1(x, y) + b2(x, y), h, dt, cost_sign)


def case_5(h: float = 1e-3, cost_sign: str = "figure"):
    """1D stationary regime: running-cost well at 0.7, no terminal cost.

    Also used for turnpike experiments: the finite-horizon problem with this
    data (and zero terminal cost) hovers near the stationary pair away from
    the endpoints of the time interval.
    """
    s = _sign_of(cost_sign)
    spec = ProblemSpec(
        sigma=0.8,
        T=1.0,
        epsilon=0.0,
        p0=_start_left_p0(s),
        f=exp_bump(0.7, 0.04, amplitude=-0.5, sign=s),
    )
    grid = Grid(x_max=1.0, n_h=round(1.0 / h))
    return spec, grid
