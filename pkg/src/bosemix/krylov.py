"""Lanczos approximation of exp(-i t H) v for Hermitian H given as a matvec."""

import numpy as np
from scipy.linalg import eigh_tridiagonal


class LanczosError(RuntimeError):
    """Raised when the Krylov propagator cannot reach the requested tolerance."""


def lanczos_basis(matvec, v, numiter):
    """Run `numiter` Lanczos iterations with full reorthogonalization.

    Returns (alpha, beta, V) where V has the Krylov vectors as rows. The
    iteration stops early on happy breakdown, in which case the returned
    arrays are shorter than `numiter` and the final beta is 0.
    """
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("starting vector is zero")
    V = np.zeros((numiter + 1, v.size), dtype=complex)
    V[0] = v.ravel() / nrm
    alpha = np.zeros(numiter)
    beta = np.zeros(numiter)
    for j in range(numiter):
        w = np.asarray(matvec(V[j]), dtype=complex).ravel()
        alpha[j] = np.vdot(V[j], w).real
        # two passes of Gram-Schmidt keep V orthonormal to machine precision
        for _ in range(2):
            w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-13 * max(1.0, abs(alpha[j])):
            beta[j] = 0.0
            return alpha[: j + 1], beta[: j + 1], V[: j + 1]
        V[j + 1] = w / beta[j]
    return alpha, beta, V[: numiter + 1]


def _krylov_step(matvec, v, t, krylov_dim):
    nrm = np.linalg.norm(v)
    alpha, beta, V = lanczos_basis(matvec, v, krylov_dim)
    m = alpha.size
    evals, evecs = eigh_tridiagonal(alpha, beta[: m - 1]) if m > 1 else (alpha, np.ones((1, 1)))
    coeffs = evecs @ (np.exp(-1j * t * evals) * evecs[0].conj())
    # a-posteriori error: weight leaking into the next Krylov direction
    err = nrm * abs(beta[m - 1] * coeffs[m - 1])
    out = nrm * (coeffs @ V[:m])
    return out, err


def expm_multiply_hermitian(matvec, v, t, krylov_dim=20, tol=1e-10, max_substeps=4096):
    """Return exp(-i t H) v.

    The interval is split into equal substeps whenever the Lanczos error
    estimate of a substep exceeds `tol * ||v|| * (substep / t)`, so the
    accumulated error stays below `tol * ||v||`.
    """
    v = np.asarray(v, dtype=complex)
    shape = v.shape
    if t == 0 or not np.any(v):
        return v.copy()
    nrm = np.linalg.norm(v)
    # the estimate itself carries rounding error of order eps * beta; below that it is noise
    floor = 1e3 * np.finfo(float).eps * nrm
    nsub = 1
    while nsub <= max_substeps:
        dt = t / nsub
        w = v.ravel()
        ok = True
        for _ in range(nsub):
            w, err = _krylov_step(matvec, w, dt, krylov_dim)
            if err > max(tol * nrm / nsub, floor):
                ok = False
                break
        if ok:
            return w.reshape(shape)
        nsub *= 2
    raise LanczosError(
        f"Lanczos did not converge to tol={tol:g} with Krylov dimension {krylov_dim} "
        f"and {max_substeps} substeps (last error estimate {err:.3e})"
    )
