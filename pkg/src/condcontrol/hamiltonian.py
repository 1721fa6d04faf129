r"""Truncated-quadratic Hamiltonians and their Godunov upwind discretisation.

The running cost is ``L(x, b) = f(x) + |b|^2 / 2`` with controls constrained to
``|b| <= M`` (``M = inf`` means unconstrained).  The associated Hamiltonian is

    H(x, z) = max_{|b| <= M} ( z . b - L(x, b) ),

and the mass-rescaled form used by the conditioned problem is

    check_H(x, mu, xi) = H(x, mu xi) / mu
                       = mu |xi|^2 / 2 - f(x)/mu              if mu |xi| <= M,
                         M |xi| - f(x)/mu - M^2 / (2 mu)      otherwise.

Its monotone numerical counterpart replaces ``|xi|`` by the upwind norm

    s = sqrt( sum_axes  (xi1^-)^2 + (xi2^+)^2 ),

where per axis ``xi1`` is the forward and ``xi2`` the backward difference, and
``a^+ = max(a, 0)``, ``a^- = max(-a, 0)``.  The two branches match in value and
first derivatives on the seam ``mu s = M``, so the scheme's Jacobians stay
continuous; the numerical Hamiltonian is nonincreasing in ``xi1``, nondecreasing
in ``xi2``, convex, and consistent: collapsing both slots to the same vector
recovers ``check_H``.

All functions take the potential ``f`` already evaluated at the relevant nodes
(``fx``, scalar 0 allowed) so the hot loops never re-evaluate callables.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .grid import GradPair

__all__ = [
    "truncate",
    "check_H",
    "numerical_H",
    "numerical_H_partials",
    "optimal_control",
    "HamiltonianPartials",
]


class HamiltonianPartials(NamedTuple):
    """Partial derivatives of the numerical Hamiltonian."""

    mu: np.ndarray
    xi1: tuple  # per-axis d/d xi1
    xi2: tuple  # per-axis d/d xi2


def truncate(xi, M: float, axis: int | None = None):
    """Project onto the closed ball of radius ``M``.

    With ``axis=None`` entries are treated as independent scalar controls
    (1D problems); otherwise ``axis`` indexes the vector components.
    """
    xi = np.asarray(xi, dtype=float)
    if not M > 0:
        raise ValueError("control bound M must be positive")
    if np.isinf(M):
        return xi.copy() if xi.ndim else float(xi)
    if axis is None:
        out = np.clip(xi, -M, M)
    else:
        nrm = np.sqrt(np.sum(xi**2, axis=axis, keepdims=True))
        scale = np.where(nrm > M, M / np.where(nrm > 0, nrm, 1.0), 1.0)
        out = xi * scale
    return out if out.ndim else float(out)


def _check_mu(mu):
    if not np.all(np.asarray(mu) > 0):
        raise ValueError("mass argument mu must be positive")


def check_H(fx, mu, xi, M: float = np.inf, axis: int | None = None):
    """Rescaled Hamiltonian ``H(x, mu xi) / mu`` (see module docstring)."""
    _check_mu(mu)
    xi = np.asarray(xi, dtype=float)
    nrm = np.abs(xi) if axis is None else np.sqrt(np.sum(xi**2, axis=axis))
    quad = 0.5 * mu * nrm**2 - fx / mu
    if np.isinf(M):
        return quad if quad.ndim else float(quad)
    trunc = M * nrm - fx / mu - M * M / (2.0 * mu)
    out = np.where(mu * nrm <= M, quad, trunc)
    return out if out.ndim else float(out)


def _upwind_parts(gp: GradPair):
    """Per-axis ``xi1^- = max(-xi1, 0)`` and ``xi2^+ = max(xi2, 0)``."""
    neg1 = tuple(np.maximum(-np.asarray(x, dtype=float), 0.0) for x in gp.xi1)
    pos2 = tuple(np.maximum(np.asarray(x, dtype=float), 0.0) for x in gp.xi2)
    return neg1, pos2


def numerical_H(fx, mu, gp: GradPair, M: float = np.inf):
    """Godunov upwind numerical Hamiltonian at mass ``mu``."""
    _check_mu(mu)
    neg1, pos2 = _upwind_parts(gp)
    s2 = sum(a**2 for a in neg1) + sum(b**2 for b in pos2)
    quad = 0.5 * mu * s2 - fx / mu
    if np.isinf(M):
        return quad if np.ndim(quad) else float(quad)
    s = np.sqrt(s2)
    trunc = M * s - fx / mu - M * M / (2.0 * mu)
    out = np.where(mu * s <= M, quad, trunc)
    return out if out.ndim else float(out)


def numerical_H_partials(fx, mu, gp: GradPair, M: float = np.inf) -> HamiltonianPartials:
    """Derivatives of :func:`numerical_H` w.r.t. ``mu`` and both gradient slots.

    On the quadratic branch (``mu s <= M``):
        d/d xi1 = -mu xi1^-,   d/d xi2 = mu xi2^+,   d/d mu = s^2/2 + f/mu^2;
    on the truncated branch the gradient direction saturates at modulus ``M``
    and d/d mu = f/mu^2 + M^2/(2 mu^2).  Both agree on the seam.
    """
    _check_mu(mu)
    neg1, pos2 = _upwind_parts(gp)
    s2 = sum(a**2 for a in neg1) + sum(b**2 for b in pos2)
    if np.isinf(M):
        d1 = tuple(-mu * a for a in neg1)
        d2 = tuple(mu * b for b in pos2)
        dmu = 0.5 * s2 + fx / mu**2
        return HamiltonianPartials(np.asarray(dmu, dtype=float), d1, d2)
    s = np.sqrt(s2)
    on_quad = mu * s <= M
    safe_s = np.where(s > 0, s, 1.0)
    d1 = tuple(np.where(on_quad, -mu * a, -M * a / safe_s) for a in neg1)
    d2 = tuple(np.where(on_quad, mu * b, M * b / safe_s) for b in pos2)
    dmu = np.where(on_quad, 0.5 * s2 + fx / mu**2, fx / mu**2 + M * M / (2.0 * mu**2))
    return HamiltonianPartials(np.asarray(dmu, dtype=float), d1, d2)


def optimal_control(mu, xi, M: float = np.inf, axis: int | None = None):
    """Maximising control ``T_M(mu xi)`` for the truncated-quadratic cost.

    ``xi`` is a (centred) gradient of the value function; the feedback drift is
    the gradient scaled by the current mass and clipped to the control bound.
    """
    _check_mu(mu)
    return truncate(mu * np.asarray(xi, dtype=float), M, axis=axis)
