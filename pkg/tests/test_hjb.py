"""Backward value sweep: nonlocal sources, Newton steps, ordering."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from condcontrol import Grid, ProblemSpec, case_1, hjb_backward_sweep
from condcontrol.errors import DegenerateMassError, NewtonError
from condcontrol.hjb import assemble_F, assemble_G, newton_hjb_interior


def _spec(**kw):
    kw.setdefault("sigma", 1.0)
    kw.setdefault("T", 1.0)
    kw.setdefault("p0", lambda *x: np.ones_like(x[0]))
    return ProblemSpec(**kw)


def _random_density(grid, rng, total=1.0):
    P = np.zeros(grid.shape)
    P[grid.interior] = rng.uniform(0.1, 1.0, [n - 1 for n in grid.n_h])
    return P * (total / (grid.cell_volume * P.sum()))


# ---------------------------------------------------------------- sources


def test_terminal_source_trivial_and_constant():
    g = Grid(1.0, 10)
    rng = np.random.default_rng(0)
    P = _random_density(g, rng, total=0.5)
    assert np.all(assemble_G(_spec(epsilon=0.0), g, P) == 0.0)
    assert_allclose(assemble_G(_spec(epsilon=1.0), g, P), -2.0)


def test_terminal_source_pairs_to_minus_epsilon():
    """h^d sum P*G(P) = -eps exactly, whatever the terminal functional."""
    rng = np.random.default_rng(4)
    for spec, g in [
        (_spec(epsilon=0.37, G_grad=lambda grid, q: q**2 - 3.0), Grid(1.0, 40)),
        (case_1()[0], Grid(1.0, 50)),
    ]:
        P = _random_density(g, rng, total=rng.uniform(0.2, 1.5))
        G = assemble_G(spec, g, P)
        pairing = g.cell_volume * float(np.sum(P * G))
        assert pairing == pytest.approx(-spec.epsilon, abs=1e-14)


def test_running_source_examples():
    g = Grid(1.0, 10)
    rng = np.random.default_rng(1)
    P = _random_density(g, rng, total=1.0)
    U = np.zeros(g.shape)
    # no running cost, flat value: every term vanishes
    assert_allclose(assemble_F(_spec(), g, P, U), 0.0, atol=1e-15)
    # f = 1 at unit mass: dH/dmu = f/mu^2 = 1, so F = -1 everywhere
    spec = _spec(f=lambda x: np.ones_like(x))
    assert_allclose(assemble_F(spec, g, P, U), -1.0, rtol=1e-14)


def test_running_source_scaling_degree():
    """F(cP, U/c) = F(P, U)/c -- the joint scaling that makes the
    gauge-fixed stationary system well posed."""
    rng = np.random.default_rng(2)
    g = Grid(1.0, 30)
    spec = _spec(
        sigma=0.7,
        M=2.0,
        epsilon=0.3,
        f=lambda x: np.cos(3.0 * x),
        F_grad=lambda grid, q: np.exp(-q),
    )
    P = _random_density(g, rng, total=0.8)
    U = rng.standard_normal(g.shape)
    c = 2.0
    assert_allclose(
        assemble_F(spec, g, c * P, U / c),
        assemble_F(spec, g, P, U) / c,
        rtol=1e-12,
        atol=1e-14,
    )


# ------------------------------------------------------------------ sweep


@pytest.mark.parametrize("dim", [1, 2])
def test_zero_value_is_exact_fixed_point(dim):
    """Without costs or terminal penalty the value function is zero."""
    rng = np.random.default_rng(3)
    g = Grid(1.0, 16, T=0.2, n_t=5) if dim == 1 else Grid((1.0, 1.0), 8, T=0.2, n_t=5)
    spec = _spec(T=0.2, M=2.0)
    P = np.stack([_random_density(g, rng) for _ in range(g.n_t + 1)])
    U = hjb_backward_sweep(spec, g, P, np.zeros_like(P))
    assert np.all(U.values == 0.0)


def test_terminal_slice_carries_full_grid_data_and_interior_is_pinned():
    rng = np.random.default_rng(5)
    g = Grid(1.0, 12, T=0.2, n_t=4)
    spec = _spec(T=0.2, epsilon=0.4)
    P = np.stack([_random_density(g, rng, total=0.5) for _ in range(g.n_t + 1)])
    U = hjb_backward_sweep(spec, g, P, np.zeros_like(P))
    assert_allclose(U.values[-1], -0.8)  # -eps/m everywhere, boundary included
    assert np.all(U.values[:-1, 0] == 0.0) and np.all(U.values[:-1, -1] == 0.0)


def test_vanishing_control_budget_reduces_to_heat_equation():
    """With M ~ 0 the sweep is linear; march the terminal constant through a
    hand-built dense implicit heat step and compare every slice."""
    sigma, eps = 0.9, 0.5
    g = Grid(1.0, 16, T=0.1, n_t=5)
    spec = _spec(sigma=sigma, T=0.1, epsilon=eps, M=1e-12)
    rng = np.random.default_rng(6)
    P = np.stack([_random_density(g, rng, total=0.5) for _ in range(g.n_t + 1)])
    U = hjb_backward_sweep(spec, g, P, np.zeros_like(P), tol_newton=1e-13)

    n, h, dt = 15, g.h[0], g.dt
    lap = (np.diag(np.full(n - 1, 1.0), -1) - 2.0 * np.eye(n) + np.diag(np.full(n - 1, 1.0), 1)) / h**2
    A = np.eye(n) + dt * 0.5 * sigma**2 * (-lap)
    u = np.full(n, -eps / 0.5)
    for k in range(g.n_t - 1, -1, -1):
        u = np.linalg.solve(A, u)
        assert_allclose(U.values[k][1:-1], u, rtol=0, atol=1e-10)


def test_larger_terminal_penalty_lowers_the_value():
    """Comparison principle: increasing eps pushes the whole value field down
    when the lagged inputs are held fixed."""
    rng = np.random.default_rng(7)
    g = Grid(1.0, 20, T=0.2, n_t=6)
    P = np.stack([_random_density(g, rng, total=0.7) for _ in range(g.n_t + 1)])
    U_lag = 0.3 * rng.standard_normal((g.n_t + 1,) + g.shape)
    kw = dict(sigma=0.7, T=0.2, M=2.0, f=lambda x: np.cos(3.0 * x))
    Ua = hjb_backward_sweep(_spec(epsilon=0.0, **kw), g, P, U_lag)
    Ub = hjb_backward_sweep(_spec(epsilon=0.5, **kw), g, P, U_lag)
    assert np.min(Ua.values - Ub.values) >= -1e-9
    assert np.max(Ua.values - Ub.values) > 0.1  # ordering is strict somewhere


def test_dead_density_rejected():
    g = Grid(1.0, 8, T=0.1, n_t=2)
    P = np.zeros((3, 9))
    with pytest.raises(DegenerateMassError):
        hjb_backward_sweep(_spec(T=0.1), g, P, np.zeros_like(P))


# ----------------------------------------------------------------- Newton


def test_newton_converges_fast_and_reports_residuals():
    g = Grid(1.0, 40)
    spec = _spec(sigma=0.6, M=1.0, f=lambda x: 0.5 * np.sin(2.0 * x))
    rhs = 2.0 * np.sin(2.0 * np.pi * g.xs[0][1:-1])
    full, residuals = newton_hjb_interior(
        spec, g, 0.8, rhs, np.zeros(g.shape), lin_coeff=1.0, tol=1e-12
    )
    assert full[0] == 0.0 and full[-1] == 0.0
    assert len(residuals) <= 8
    assert residuals[-1] <= 1e-9
    # residual drops monotonically once the branch pattern settles
    assert all(b < a for a, b in zip(residuals[1:], residuals[2:]))


def test_newton_budget_exhaustion_raises():
    g = Grid(1.0, 40)
    spec = _spec(sigma=0.6, M=1.0)
    rhs = 2.0 * np.sin(2.0 * np.pi * g.xs[0][1:-1])
    with pytest.raises(NewtonError):
        newton_hjb_interior(
            spec, g, 0.8, rhs, np.zeros(g.shape), lin_coeff=1.0, tol=1e-13, max_iter=1
        )
