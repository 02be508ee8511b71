"""Periodic Poisson problems on uniform torus grids."""

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla


def periodic_laplacian(nx, ny, hx, hy):
    """Five-point Laplacian on an nx x ny periodic grid (C-ordered, i major)."""

    def second_difference(n, h):
        main = -2.0 * np.ones(n)
        off = np.ones(n - 1)
        D = sps.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
        D[0, n - 1] = 1.0
        D[n - 1, 0] = 1.0
        return D.tocsr() / h**2

    Ix, Iy = sps.identity(nx, format="csr"), sps.identity(ny, format="csr")
    return (sps.kron(second_difference(nx, hx), Iy) + sps.kron(Ix, second_difference(ny, hy))).tocsr()


def apply_periodic_laplacian(psi, hx, hy):
    return (
        (np.roll(psi, -1, 0) - 2 * psi + np.roll(psi, 1, 0)) / hx**2
        + (np.roll(psi, -1, 1) - 2 * psi + np.roll(psi, 1, 1)) / hy**2
    )


def solve_periodic_poisson(rhs, hx, hy, tol=1e-12, maxiter=None):
    """Zero-mean solution of the five-point periodic Poisson problem.

    The right-hand side is projected onto the zero-mean subspace before
    conjugate gradients; the caller is responsible for deciding whether the
    removed mean was negligible.

    Returns
    -------
    psi : ndarray
        Zero-mean solution with the shape of ``rhs``.
    residual : float
        Max-norm of ``lap(psi) - rhs_projected``.
    """
    rhs = np.asarray(rhs, dtype=float)
    nx, ny = rhs.shape
    b = (rhs - rhs.mean()).ravel()
    scale = np.max(np.abs(b))
    if scale == 0.0:
        return np.zeros_like(rhs), 0.0
    A = periodic_laplacian(nx, ny, hx, hy)
    # CG on -A (positive semi-definite); b is orthogonal to the kernel.
    rtol = tol * scale / np.linalg.norm(b)
    x, info = spla.cg(-A, -b, rtol=rtol, atol=0.0, maxiter=maxiter or 200 * (nx + ny))
    if info != 0:
        raise RuntimeError(f"conjugate gradients did not converge (info={info})")
    psi = x.reshape(nx, ny)
    psi -= psi.mean()
    residual = float(np.max(np.abs(apply_periodic_laplacian(psi, hx, hy) - b.reshape(nx, ny))))
    return psi, residual
