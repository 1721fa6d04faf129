"""Sparse operators, direct solves, and the principal-eigenpair iteration.

Operators are stored in compressed-row form (scipy CSR: row offsets, column
indices, values); ``SparseOperator`` is an alias for that type.  Per-step
systems in one space dimension are tridiagonal and go through the LAPACK
banded solver, everything else through a sparse LU factorisation.

The principal eigenpair (smallest eigenvalue, positive eigenvector) of the
discrete survival generators is computed by shift-inverted power iteration:
factor ``A - shift I`` once, iterate ``v <- (A - shift I)^{-1} v`` with
normalisation, and read the eigenvalue off a Rayleigh quotient.  For the
M-matrix-like operators assembled here the eigenvalue of smallest modulus is
real, simple, and carries the Perron eigenvector, so the iteration with
``shift = 0`` converges geometrically and needs no Arnoldi machinery.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .errors import EigenConvergenceError, SingularOperatorError, StructureError
from .grid import Grid

__all__ = [
    "SparseOperator",
    "dirichlet_laplacian",
    "lu_solve",
    "solve_tridiagonal",
    "principal_eigenpair",
    "eigen_residual",
]

SparseOperator = sp.csr_matrix


def _interior_laplacian_1d(n_cells: int, h: float) -> sp.csr_matrix:
    n = n_cells - 1
    main = np.full(n, -2.0 / h**2)
    off = np.full(n - 1, 1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def dirichlet_laplacian(grid: Grid) -> sp.csr_matrix:
    """Second-difference Laplacian on the interior nodes (zero boundary data).

    Interior nodes are flattened row-major, matching ``values[grid.interior]``.
    The operator is negative definite; schemes use ``-sigma^2/2`` times it.
    """
    if grid.dim == 1:
        return _interior_laplacian_1d(grid.n_h[0], grid.h[0])
    L0 = _interior_laplacian_1d(grid.n_h[0], grid.h[0])
    L1 = _interior_laplacian_1d(grid.n_h[1], grid.h[1])
    I0 = sp.identity(grid.n_h[0] - 1, format="csr")
    I1 = sp.identity(grid.n_h[1] - 1, format="csr")
    return (sp.kron(L0, I1) + sp.kron(I0, L1)).tocsr()


def _splu_or_raise(A):
    try:
        lu = splu(A.tocsc())
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SingularOperatorError(str(exc)) from exc
    return lu


def lu_solve(A, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = rhs`` by sparse LU; raises on singular operators."""
    if not sp.issparse(A):
        A = sp.csr_matrix(np.asarray(A, dtype=float))
    x = _splu_or_raise(A).solve(np.asarray(rhs, dtype=float))
    if not np.all(np.isfinite(x)):
        raise SingularOperatorError("sparse LU produced non-finite entries")
    return x


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Direct solve of a tridiagonal system (sub-, main, super-diagonal)."""
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    try:
        return solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError(str(exc)) from exc


def eigen_residual(A, lam: float, v: np.ndarray) -> float:
    """Max-norm eigen residual ``|| A v - lam v ||_inf / || v ||_inf``."""
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(A @ v - lam * v)) / np.max(np.abs(v)))


def principal_eigenpair(
    A,
    *,
    cell_volume: float = 1.0,
    shift: float = 0.0,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> tuple[float, np.ndarray]:
    """Eigenvalue of smallest modulus with its (nonnegative) eigenvector.

    The eigenvector is sign-fixed and normalised to unit discrete mass,
    ``cell_volume * sum(v) = 1``.  Raises :class:`EigenConvergenceError` when
    the iteration stalls and :class:`StructureError` when the converged vector
    has genuinely mixed signs (i.e. it is not a Perron eigenvector).
    """
    if not sp.issparse(A):
        A = sp.csr_matrix(np.asarray(A, dtype=float))
    A = A.tocsr()
    n = A.shape[0]
    I = sp.identity(n, format="csc")
    try:
        lu = _splu_or_raise((A - shift * I).tocsc())
    except SingularOperatorError:
        # the shift itself is an eigenvalue; nudge it off the spectrum
        backoff = shift - 1e-8 * (1.0 + abs(shift))
        lu = _splu_or_raise((A - backoff * I).tocsc())

    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        w = lu.solve(v)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise SingularOperatorError("inverse iteration produced a null vector")
        w /= nrm
        Aw = A @ w
        lam = float(w @ Aw)
        if np.max(np.abs(Aw - lam * w)) <= tol * max(1.0, abs(lam)) * np.max(np.abs(w)):
            v = w
            break
        v = w
    else:
        raise EigenConvergenceError(
            f"no convergence to tol={tol:g} within {max_iter} iterations"
        )

    if v.sum() < 0:
        v = -v
    vmax = v.max()
    if vmax <= 0 or v.min() < -1e-8 * vmax:
        raise StructureError("principal eigenvector has mixed signs")
    v = np.maximum(v, 0.0)
    total = cell_volume * v.sum()
    return lam, v / total
