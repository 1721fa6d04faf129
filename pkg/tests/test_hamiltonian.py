"""Hamiltonian kernels against brute-force maximization oracles.

The closed forms under test are all suprema of an upwind Lagrangian over a
truncated control set, so every value can be cross-checked by direct grid
search over controls: no reuse of the implementation's own branch logic.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from condcontrol import GradPair
from condcontrol.hamiltonian import (
    check_H,
    numerical_H,
    numerical_H_partials,
    optimal_control,
    truncate,
)


# -- oracles -----------------------------------------------------------------


def _refine_max(objective, lo, hi, n=2001, stages=3):
    """Nested grid search for a smooth concave objective on a box."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    best = None
    for _ in range(stages):
        axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = objective(pts)
        flat = np.argmax(vals)
        best = pts.reshape(-1, pts.shape[-1])[flat]
        span = (hi - lo) / (n - 1)
        lo = best - 2 * span
        hi = best + 2 * span
    return float(np.max(vals)), best


def oracle_check_H(f, mu, xi, M):
    """sup over |b| <= M of b.xi - f/mu - |b|^2/(2 mu), by grid search."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    r = min(M, mu * np.linalg.norm(xi) + 1.0)

    def obj(pts):
        b2 = np.sum(pts**2, axis=-1)
        val = pts @ xi - f / mu - b2 / (2 * mu)
        return np.where(b2 <= M**2 + 1e-30, val, -np.inf)

    n = 2001 if xi.size == 1 else 301
    val, _ = _refine_max(obj, -r * np.ones(xi.size), r * np.ones(xi.size), n=n)
    return val


def oracle_numerical_H(f, mu, xi1, xi2, M):
    """Brute-force upwind Hamiltonian.

    One sign-constrained control per one-sided difference: b1 <= 0 pairs with
    the forward difference, b2 >= 0 with the backward one, all inside a single
    control ball of radius M.  Search points are projected onto the feasible
    set (orthant, then ball) rather than masked, so boundary optima on the
    control sphere are reachable exactly.
    """
    xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    d = xi1.size
    s_hint = np.sqrt(np.sum(np.minimum(xi1, 0) ** 2) + np.sum(np.maximum(xi2, 0) ** 2))
    r = min(M, mu * s_hint + 1.0)

    def obj(pts):
        b1 = np.minimum(pts[..., :d], 0.0)
        b2 = np.maximum(pts[..., d:], 0.0)
        norm = np.sqrt(np.sum(b1**2, axis=-1) + np.sum(b2**2, axis=-1))
        shrink = np.where(norm > M, M / np.where(norm > 0, norm, 1.0), 1.0)[..., None]
        b1 = b1 * shrink
        b2 = b2 * shrink
        b2_total = np.sum(b1**2, axis=-1) + np.sum(b2**2, axis=-1)
        return (
            np.sum(b1 * xi1, axis=-1)
            + np.sum(b2 * xi2, axis=-1)
            - f / mu
            - b2_total / (2 * mu)
        )

    n = 801 if d == 1 else 41
    lo = np.concatenate([-2 * r * np.ones(d), np.zeros(d)])
    hi = np.concatenate([np.zeros(d), 2 * r * np.ones(d)])
    val, _ = _refine_max(obj, lo, hi, n=n)
    return val


def _H(f, mu, xi1, xi2, M):
    """Scalar convenience wrapper around the vectorized kernel."""
    gp = GradPair(
        tuple(np.array([v], dtype=float) for v in np.atleast_1d(xi1)),
        tuple(np.array([v], dtype=float) for v in np.atleast_1d(xi2)),
    )
    return float(numerical_H(f, mu, gp, M)[0])


def _partials(f, mu, xi1, xi2, M):
    gp = GradPair(
        tuple(np.array([v], dtype=float) for v in np.atleast_1d(xi1)),
        tuple(np.array([v], dtype=float) for v in np.atleast_1d(xi2)),
    )
    return numerical_H_partials(f, mu, gp, M)


# -- truncation --------------------------------------------------------------


def test_truncate_examples():
    assert truncate(1.0, 2.0) == 1.0
    assert truncate(-3.0, 2.0) == -2.0
    assert_allclose(truncate(np.array([3.0, 4.0]), 5.0, axis=-1), [3.0, 4.0])
    assert_allclose(truncate(np.array([3.0, 4.0]), 1.0, axis=-1), [0.6, 0.8])
    x = np.array([[1.0, 0.0], [30.0, 40.0]])
    assert_allclose(truncate(x, 5.0, axis=-1), [[1.0, 0.0], [3.0, 4.0]])
    assert_allclose(truncate(x, np.inf, axis=-1), x)


# -- rescaled Hamiltonian ----------------------------------------------------


def test_check_H_quadratic_branch():
    assert check_H(0.0, 1.0, np.array(1.0), 2.0) == pytest.approx(0.5)
    assert check_H(1.0, 2.0, np.array(0.0), 7.0) == pytest.approx(-0.5)


def test_check_H_truncated_branch_vs_oracle():
    got = check_H(0.0, 1.0, np.array(3.0), 2.0)
    assert got == pytest.approx(4.0)
    assert got == pytest.approx(oracle_check_H(0.0, 1.0, 3.0, 2.0), abs=1e-9)


@pytest.mark.parametrize("seed", [0, 1])
def test_check_H_random_vs_oracle(seed):
    rng = np.random.default_rng(seed)
    for _ in range(25):
        f = rng.uniform(-2, 2)
        mu = rng.uniform(0.05, 3.0)
        xi = rng.uniform(-4, 4)
        M = rng.choice([np.inf, rng.uniform(0.2, 5.0)])
        got = float(check_H(f, mu, np.array(xi), M))
        want = oracle_check_H(f, mu, xi, M)
        assert got == pytest.approx(want, abs=1e-8), (f, mu, xi, M)


def test_check_H_vector_argument():
    got = float(check_H(0.3, 1.5, np.array([1.0, -2.0]), 2.5, axis=-1))
    want = oracle_check_H(0.3, 1.5, np.array([1.0, -2.0]), 2.5)
    assert got == pytest.approx(want, abs=1e-6)


# -- upwind numerical Hamiltonian --------------------------------------------


def test_numerical_H_printed_examples():
    assert _H(0.0, 1.0, -1.0, 1.0, np.inf) == pytest.approx(1.0)
    assert _H(0.0, 1.0, 1.0, -1.0, 4.0) == pytest.approx(0.0)
    assert _H(0.0, 1.0, -3.0, 0.0, 2.0) == pytest.approx(4.0)


@pytest.mark.parametrize("M", [np.inf, 2.0, 0.7])
def test_numerical_H_1d_vs_oracle(M):
    rng = np.random.default_rng(17)
    for _ in range(20):
        f = rng.uniform(-1, 1)
        mu = rng.uniform(0.1, 2.5)
        xi1, xi2 = rng.uniform(-3, 3, size=2)
        got = _H(f, mu, xi1, xi2, M)
        want = oracle_numerical_H(f, mu, xi1, xi2, M)
        assert got == pytest.approx(want, abs=1e-8), (f, mu, xi1, xi2, M)


@pytest.mark.parametrize("M", [np.inf, 1.5])
def test_numerical_H_2d_vs_oracle(M):
    rng = np.random.default_rng(23)
    for _ in range(4):
        f = rng.uniform(-1, 1)
        mu = rng.uniform(0.3, 2.0)
        xi1 = rng.uniform(-2, 2, size=2)
        xi2 = rng.uniform(-2, 2, size=2)
        got = _H(f, mu, xi1, xi2, M)
        want = oracle_numerical_H(f, mu, xi1, xi2, M)
        assert got == pytest.approx(want, abs=2e-5), (f, mu, xi1, xi2, M)


def test_consistency_with_check_H():
    """Evaluating both one-sided slots at the same gradient recovers check_H."""
    rng = np.random.default_rng(5)
    xi = rng.uniform(-4, 4, size=1_000_000)
    mu = 0.8
    gp = GradPair((xi,), (xi,))
    diag = numerical_H(0.2, mu, gp, 1.3)
    direct = 0.5 * mu * np.minimum(np.abs(xi), 1.3 / mu) ** 2 - 0.2 / mu
    direct = np.where(
        mu * np.abs(xi) <= 1.3,
        0.5 * mu * xi**2 - 0.2 / mu,
        1.3 * np.abs(xi) - 0.2 / mu - 1.3**2 / (2 * mu),
    )
    assert np.max(np.abs(diag - direct)) < 1e-12


def test_monotonicity_in_each_slot():
    """Nonincreasing in the forward slot, nondecreasing in the backward one."""
    rng = np.random.default_rng(11)
    n = 1_000_000
    xi1 = rng.uniform(-3, 3, size=n)
    xi2 = rng.uniform(-3, 3, size=n)
    delta = rng.uniform(0.0, 0.5, size=n)
    base = numerical_H(0.0, 1.2, GradPair((xi1,), (xi2,)), 2.0)
    up1 = numerical_H(0.0, 1.2, GradPair((xi1 + delta,), (xi2,)), 2.0)
    up2 = numerical_H(0.0, 1.2, GradPair((xi1,), (xi2 + delta,)), 2.0)
    assert np.max(up1 - base) <= 1e-12
    assert np.min(up2 - base) >= -1e-12


def test_joint_homogeneity():
    """H(c*mu, xi/c) = H(mu, xi)/c on both branches."""
    rng = np.random.default_rng(7)
    n = 200_000
    xi1 = rng.uniform(-3, 3, size=n)
    xi2 = rng.uniform(-3, 3, size=n)
    c = rng.uniform(0.2, 5.0, size=n)
    base = numerical_H(0.4, 1.0, GradPair((xi1,), (xi2,)), 1.1)
    scaled = numerical_H(0.4, c, GradPair((xi1 / c,), (xi2 / c,)), 1.1)
    assert_allclose(scaled, base / c, rtol=1e-12, atol=1e-13)


def test_euler_relation_links_partials():
    """H - xi.H_xi = -mu H_mu, the differential form of the homogeneity."""
    rng = np.random.default_rng(13)
    n = 200_000
    xi1 = rng.uniform(-3, 3, size=n)
    xi2 = rng.uniform(-3, 3, size=n)
    mu = rng.uniform(0.1, 4.0, size=n)
    gp = GradPair((xi1,), (xi2,))
    H = numerical_H(0.6, mu, gp, 1.7)
    parts = numerical_H_partials(0.6, mu, gp, 1.7)
    lhs = H - xi1 * parts.xi1[0] - xi2 * parts.xi2[0]
    assert_allclose(lhs, -mu * parts.mu, rtol=1e-11, atol=1e-12)


def test_partials_printed_example():
    parts = _partials(0.0, 1.0, -1.0, 1.0, np.inf)
    assert parts.xi1[0][0] == pytest.approx(-1.0)
    assert parts.xi2[0][0] == pytest.approx(1.0)
    assert parts.mu[0] == pytest.approx(1.0)

    flat = _partials(0.0, 1.0, 0.5, -0.5, np.inf)
    assert flat.xi1[0][0] == 0.0 and flat.xi2[0][0] == 0.0

    only_f = _partials(1.0, 2.0, 0.0, 0.0, 3.0)
    assert only_f.mu[0] == pytest.approx(1.0 / 4.0)


@pytest.mark.parametrize("M", [np.inf, 1.4])
def test_partials_match_central_differences(M):
    rng = np.random.default_rng(29)
    step = 1e-6
    checked = 0
    while checked < 40:
        f = rng.uniform(-1, 1)
        mu = rng.uniform(0.2, 3.0)
        xi1, xi2 = rng.uniform(-2.5, 2.5, size=2)
        s = np.hypot(min(xi1, 0.0), max(xi2, 0.0))
        # stay away from the branch seam and the one-sided kinks
        if abs(mu * s - M) < 1e-2 or abs(xi1) < 1e-2 or abs(xi2) < 1e-2:
            continue
        checked += 1
        parts = _partials(f, mu, xi1, xi2, M)
        fd_mu = (_H(f, mu + step, xi1, xi2, M) - _H(f, mu - step, xi1, xi2, M)) / (2 * step)
        fd_x1 = (_H(f, mu, xi1 + step, xi2, M) - _H(f, mu, xi1 - step, xi2, M)) / (2 * step)
        fd_x2 = (_H(f, mu, xi1, xi2 + step, M) - _H(f, mu, xi1, xi2 - step, M)) / (2 * step)
        assert parts.mu[0] == pytest.approx(fd_mu, abs=1e-4)
        assert parts.xi1[0][0] == pytest.approx(fd_x1, abs=1e-4)
        assert parts.xi2[0][0] == pytest.approx(fd_x2, abs=1e-4)


def test_branch_seam_is_c1():
    """Value and derivatives agree across the truncation seam mu*s = M."""
    M, mu = 1.3, 0.7
    xi2 = 0.0
    for eps in (1e-8, -1e-8):
        xi1 = -(M / mu) * (1.0 + eps)
        inner = _H(0.2, mu, -(M / mu) * (1.0 - 1e-8), xi2, M)
        outer = _H(0.2, mu, xi1, xi2, M)
        assert outer == pytest.approx(inner, abs=1e-7)
    p_in = _partials(0.2, mu, -(M / mu) * (1 - 1e-8), xi2, M)
    p_out = _partials(0.2, mu, -(M / mu) * (1 + 1e-8), xi2, M)
    assert p_in.xi1[0][0] == pytest.approx(p_out.xi1[0][0], abs=1e-6)
    assert p_in.mu[0] == pytest.approx(p_out.mu[0], abs=1e-6)


# -- feedback control --------------------------------------------------------


def test_optimal_control_examples():
    assert optimal_control(1.0, np.array(0.0), 5.0) == 0.0
    assert optimal_control(1.0, np.array(0.3), 1.0) == pytest.approx(0.3)
    assert optimal_control(1.0, np.array(3.0), 2.0) == pytest.approx(2.0)
    b = optimal_control(2.0, np.array([3.0, 4.0]), 5.0, axis=-1)
    assert_allclose(b, [3.0, 4.0])  # |mu xi| = 10 -> radial projection to M=5


def test_optimal_control_is_oracle_argmax():
    """The feedback law is the maximizer of the rescaled Lagrangian."""
    rng = np.random.default_rng(41)
    for _ in range(10):
        mu = rng.uniform(0.2, 2.0)
        xi = rng.uniform(-3, 3)
        M = rng.choice([np.inf, 1.0])
        b = float(optimal_control(mu, np.array(xi), M))
        grid = np.linspace(-min(M, 10), min(M, 10), 400_001)
        vals = grid * (mu * xi) - grid**2 / 2.0
        assert b == pytest.approx(grid[np.argmax(vals)], abs=1e-4)
