import numpy as np
import pytest
from scipy.linalg import expm

from bosemix.krylov import LanczosError, expm_multiply_hermitian, lanczos_basis


def hermitian(n, rng, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.conj().T) / 2


def test_matches_dense_expm(rng):
    H = hermitian(60, rng)
    v = rng.normal(size=60) + 1j * rng.normal(size=60)
    got = expm_multiply_hermitian(lambda x: H @ x, v, 0.7)
    assert np.allclose(got, expm(-0.7j * H) @ v, atol=1e-9)


def test_substeps_kick_in_for_large_norm(rng):
    H = hermitian(80, rng, scale=40.0)
    v = rng.normal(size=80) + 0j
    got = expm_multiply_hermitian(lambda x: H @ x, v, 1.0, krylov_dim=12)
    assert np.linalg.norm(got - expm(-1j * H) @ v) < 1e-8 * np.linalg.norm(v)


def test_zero_time_is_identity(rng):
    v = rng.normal(size=5) + 0j
    assert np.array_equal(expm_multiply_hermitian(lambda x: x, v, 0.0), v)


def test_happy_breakdown_on_invariant_subspace():
    H = np.diag([1.0, 2.0, 3.0, 4.0])
    v = np.array([1.0, 1.0, 0, 0], dtype=complex)
    alpha, beta, V = lanczos_basis(lambda x: H @ x, v, 4)
    assert alpha.size == 2 and beta[-1] == 0
    got = expm_multiply_hermitian(lambda x: H @ x, v, 2.0)
    assert np.allclose(got, np.exp(-2j * np.diag(H)) * v, atol=1e-13)


def test_basis_is_orthonormal(rng):
    H = hermitian(50, rng)
    _, _, V = lanczos_basis(lambda x: H @ x, rng.normal(size=50) + 0j, 20)
    assert np.allclose(V.conj() @ V.T, np.eye(V.shape[0]), atol=1e-12)


def test_gives_up_when_substeps_exhausted(rng):
    H = hermitian(40, rng, scale=1e4)
    with pytest.raises(LanczosError):
        expm_multiply_hermitian(lambda x: H @ x, np.ones(40, complex), 1.0, krylov_dim=3, max_substeps=2)
