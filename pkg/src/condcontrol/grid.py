"""Uniform grids on boxes and the finite-difference operators built on them.

Space is the box ``(0, x_max[0]) x ... x (0, x_max[d-1])`` with ``d in {1, 2}``,
discretised by nodes ``x_i = i * h`` along each axis, ``i = 0 .. n_h``; the first
and last node of each axis lie on the boundary.  Time is the interval ``[0, T]``
split into ``n_t`` steps of size ``dt = T / n_t``.

Fields store nodal values shaped like the grid (``(n_h+1,)`` in 1D,
``(n_h0+1, n_h1+1)`` in 2D); space-time fields carry ``n_t + 1`` such slices.
The upwind gradient pair at an interior node collects, per axis, the forward
difference at the node itself and the forward difference one node to the left
(equivalently the backward difference at the node).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "SpaceTimeField",
    "GradPair",
    "d_plus",
    "laplacian_h",
    "grad_h",
    "interior_grad_pairs",
    "centered_gradient",
    "mass",
    "norm_l2",
    "norm_l2_spacetime",
    "field_from_function",
]


def _as_float_tuple(v) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    return tuple(float(a) for a in arr)


def _as_int_tuple(v) -> tuple[int, ...]:
    arr = np.atleast_1d(np.asarray(v))
    return tuple(int(a) for a in arr)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid with an attached uniform time step.

    Parameters
    ----------
    x_max : float or tuple of float
        Box side lengths; the domain is the open box with these extents.
    n_h : int or tuple of int
        Number of cells per axis (so each axis carries ``n_h + 1`` nodes).
    T : float, optional
        Time horizon.  Irrelevant for stationary problems; defaults to 1.
    n_t : int, optional
        Number of time steps; ``dt = T / n_t``.
    """

    x_max: tuple[float, ...] = (1.0,)
    n_h: tuple[int, ...] = (100,)
    T: float = 1.0
    n_t: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x_max", _as_float_tuple(self.x_max))
        object.__setattr__(self, "n_h", _as_int_tuple(self.n_h))
        # broadcast scalars so square boxes read naturally: Grid((1, 1), 80)
        if len(self.x_max) == 1 and len(self.n_h) > 1:
            object.__setattr__(self, "x_max", self.x_max * len(self.n_h))
        if len(self.n_h) == 1 and len(self.x_max) > 1:
            object.__setattr__(self, "n_h", self.n_h * len(self.x_max))
        if len(self.x_max) != len(self.n_h):
            raise ValueError("x_max and n_h must have the same length")
        if not 1 <= len(self.n_h) <= 2:
            raise ValueError("only 1D and 2D grids are supported")
        if any(a <= 0 for a in self.x_max):
            raise ValueError("box extents must be positive")
        if any(n < 2 for n in self.n_h):
            raise ValueError("need at least 2 cells per axis")
        if self.T <= 0 or self.n_t < 1:
            raise ValueError("need T > 0 and n_t >= 1")

    # -- geometry -----------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.n_h)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(a / n for a, n in zip(self.x_max, self.n_h))

    @property
    def dt(self) -> float:
        return self.T / self.n_t

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.n_h)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        """Quadrature weight h^d of the rectangle rule."""
        return float(np.prod(self.h))

    @property
    def xs(self) -> tuple[np.ndarray, ...]:
        """One coordinate array per axis."""
        return tuple(np.linspace(0.0, a, n + 1) for a, n in zip(self.x_max, self.n_h))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_t + 1)

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays shaped like the grid (``indexing='ij'``)."""
        return tuple(np.meshgrid(*self.xs, indexing="ij"))

    @property
    def interior(self) -> tuple[slice, ...]:
        """Slices selecting the interior nodes of a grid-shaped array."""
        return tuple(slice(1, -1) for _ in range(self.dim))

    @property
    def n_interior(self) -> int:
        return int(np.prod([n - 1 for n in self.n_h]))

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    def interior_meshgrid(self) -> tuple[np.ndarray, ...]:
        return tuple(m[self.interior] for m in self.meshgrid())

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


@dataclass(frozen=True)
class Field:
    """Nodal values of a scalar function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"field values shaped {vals.shape}, expected {self.grid.shape}"
            )
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SpaceTimeField:
    """One grid-shaped slice per time level (``n_t + 1`` slices in total)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_t + 1,) + self.grid.shape
        if vals.shape != expected:
            raise ValueError(f"values shaped {vals.shape}, expected {expected}")
        object.__setattr__(self, "values", vals)

    def time_slice(self, n: int) -> Field:
        return Field(self.grid, self.values[n])

    def masses(self) -> np.ndarray:
        """Total mass of every time slice (rectangle rule)."""
        axes = tuple(range(1, self.values.ndim))
        return self.grid.cell_volume * self.values.sum(axis=axes)


class GradPair(NamedTuple):
    """Per-axis upwind gradient pair (forward difference, backward difference)."""

    xi1: tuple  # (D+ W)_i per axis
    xi2: tuple  # (D+ W)_{i-1} per axis


# -- operators --------------------------------------------------------------


def d_plus(W: Field, axis: int = 0) -> np.ndarray:
    """Forward difference ``(W_{i+1} - W_i) / h`` along ``axis``.

    The result lives on cell faces, so it has one fewer entry than the field
    along the chosen axis.
    """
    g = W.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for a {g.dim}D grid")
    return np.diff(W.values, axis=axis) / g.h[axis]


def laplacian_h(W: Field) -> Field:
    """Second-difference Laplacian; boundary entries of the result are 0."""
    g = W.grid
    v = W.values
    out = np.zeros_like(v)
    core = [slice(1, -1)] * g.dim
    for ax in range(g.dim):
        lo = [slice(1, -1)] * g.dim
        hi = [slice(1, -1)] * g.dim
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        ctr = tuple(core)
        out[ctr] += (v[tuple(hi)] - 2.0 * v[ctr] + v[tuple(lo)]) / g.h[ax] ** 2
    return Field(g, out)


def _node_index(g: Grid, i) -> tuple[int, ...]:
    idx = (int(i),) if np.isscalar(i) else tuple(int(k) for k in i)
    if len(idx) != g.dim:
        raise ValueError(f"node index {idx} does not match grid dimension {g.dim}")
    return idx


def grad_h(W: Field, i) -> GradPair:
    """Upwind gradient pair at the interior node ``i``.

    Per axis this is ``(forward difference at i, forward difference at i-1)``;
    the second entry equals the backward difference at ``i``.  Boundary nodes
    have no such pair and raise ``ValueError``.
    """
    g = W.grid
    idx = _node_index(g, i)
    for ax, k in enumerate(idx):
        if not 1 <= k <= g.n_h[ax] - 1:
            raise ValueError(f"node {idx} is not interior along axis {ax}")
    xi1, xi2 = [], []
    v = W.values
    for ax in range(g.dim):
        up = list(idx)
        dn = list(idx)
        up[ax] += 1
        dn[ax] -= 1
        xi1.append((v[tuple(up)] - v[idx]) / g.h[ax])
        xi2.append((v[idx] - v[tuple(dn)]) / g.h[ax])
    return GradPair(tuple(xi1), tuple(xi2))


def interior_grad_pairs(grid: Grid, values: np.ndarray) -> GradPair:
    """Vectorised :func:`grad_h` over all interior nodes.

    Returns interior-shaped arrays per axis, in the same layout the solvers
    use for their unknowns.
    """
    core = grid.interior
    xi1, xi2 = [], []
    for ax in range(grid.dim):
        lo = [slice(1, -1)] * grid.dim
        hi = [slice(1, -1)] * grid.dim
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        fwd = (values[tuple(hi)] - values[core]) / grid.h[ax]
        bwd = (values[core] - values[tuple(lo)]) / grid.h[ax]
        xi1.append(fwd)
        xi2.append(bwd)
    return GradPair(tuple(xi1), tuple(xi2))


def centered_gradient(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Centred difference gradient at interior nodes, zero at the boundary.

    Returns an array shaped ``grid.shape + (dim,)``.
    """
    out = np.zeros(grid.shape + (grid.dim,))
    core = grid.interior
    for ax in range(grid.dim):
        lo = [slice(1, -1)] * grid.dim
        hi = [slice(1, -1)] * grid.dim
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out[core + (ax,)] = (values[tuple(hi)] - values[tuple(lo)]) / (2.0 * grid.h[ax])
    return out


def mass(P: Field) -> float:
    """Total mass by the rectangle rule, ``h^d * sum`` over all nodes."""
    return float(P.grid.cell_volume * P.values.sum())


def norm_l2(grid: Grid, values: np.ndarray) -> float:
    """Grid-weighted spatial l2 norm ``(h^d sum v^2)^(1/2)``."""
    return float(np.sqrt(grid.cell_volume * np.sum(np.asarray(values) ** 2)))


def norm_l2_spacetime(grid: Grid, values: np.ndarray) -> float:
    """Space-time l2 norm ``(h^d dt sum_n sum_i v^2)^(1/2)``."""
    return float(np.sqrt(grid.cell_volume * grid.dt * np.sum(np.asarray(values) ** 2)))


def field_from_function(grid: Grid, fn: Callable) -> Field:
    """Sample a vectorised callable ``fn(x)`` / ``fn(x, y)`` at the nodes."""
    vals = np.asarray(fn(*grid.meshgrid()), dtype=float)
    vals = np.broadcast_to(vals, grid.shape).copy()
    return Field(grid, vals)
