import numpy as np
import pytest
from scipy.linalg import expm

from bosemix.fidelity import kinetic_gaps, pickl_a, reduce
from bosemix.fock import (ManyBodyHamiltonian, ManyBodyState, StateSizeError, apply_hamiltonian, orbital_coefficients,
                          product_state, propagate, symmetrize, symmetry_defect)
from bosemix.lattice import Field, GridSpec, gaussian, kinetic_propagator
from bosemix.meanfield import HartreeState, HartreeSystem, MixtureSize

from conftest import mixture_setup


def random_symmetric(grid, mixture, rng):
    shape = (grid.n_sites,) * mixture.n_particles
    s = ManyBodyState(mixture, grid, rng.normal(size=shape) + 1j * rng.normal(size=shape))
    s = symmetrize(s)
    return s.with_values(s.values / s.norm())


def test_product_state_of_two_is_outer_product():
    grid, *_, psi, phi = mixture_setup()
    s = product_state(psi, phi, MixtureSize(1, 1))
    assert np.array_equal(s.values, np.outer(psi.values, phi.values))
    assert abs(s.norm() - 1) < 1e-12
    assert symmetry_defect(s) == 0


def test_product_state_reduces_to_projector_and_zero_depletion():
    grid, *_, psi, phi = mixture_setup(M=6, L=6.0)
    s = product_state(psi, phi, MixtureSize(2, 3))
    assert pickl_a(s, psi, phi) == pytest.approx((0.0, 0.0), abs=1e-12)
    v = orbital_coefficients(psi)
    assert np.allclose(reduce(s, 1, 0).matrix, np.outer(v, v.conj()), atol=1e-12)


def test_state_cap():
    grid, *_, psi, phi = mixture_setup()
    with pytest.raises(StateSizeError):
        product_state(psi, phi, MixtureSize(4, 4), cap=8**7)


def test_two_particle_hamiltonian_is_sum_of_parts():
    grid, k1, k2, c, psi, phi = mixture_setup("magnetic", M=8)
    H = ManyBodyHamiltonian(grid, k1, k2, c, MixtureSize(1, 1))
    n = grid.n_sites
    ref = (np.kron(k1.operator(grid).matrix, np.eye(n)) + np.kron(np.eye(n), k2.operator(grid).matrix)
           + np.diag(c.kernel(grid, 1, 2).pair_matrix().ravel()))
    assert np.allclose(H.dense(), ref)
    s = product_state(psi, phi, MixtureSize(1, 1))
    assert np.allclose(apply_hamiltonian(H, s).values.ravel(), ref @ s.values.ravel())


@pytest.mark.parametrize("N", [(2, 2), (3, 2), (2, 4)])
def test_product_energy_matches_hartree_functional(N):
    grid, k1, k2, c, psi, phi = mixture_setup("semirelativistic", M=6, L=6.0)
    mix = MixtureSize(*N)
    H = ManyBodyHamiltonian(grid, k1, k2, c, mix)
    rep = HartreeSystem(grid, c, k1, k2, mix.R).energy_report(HartreeState(psi, phi), mix)
    assert np.isclose(H.expectation(product_state(psi, phi, mix)), rep.hN_per_particle * mix.N2,
                      rtol=0, atol=1e-10)


def test_hamiltonian_is_hermitian_on_symmetric_states(rng):
    grid, k1, k2, c, *_ = mixture_setup("magnetic", M=6, L=6.0,
                                        A=lambda x: np.broadcast_to(0.4 * np.sin(x[0]), x.shape))
    mix = MixtureSize(2, 2)
    H = ManyBodyHamiltonian(grid, k1, k2, c, mix)
    for _ in range(5):
        f, g = random_symmetric(grid, mix, rng), random_symmetric(grid, mix, rng)
        assert np.isclose(f.inner(H.apply(g)), np.conj(g.inner(H.apply(f))), atol=1e-12)
        assert symmetry_defect(H.apply(f)) < 1e-10


def test_free_evolution_stays_a_product():
    grid, k1, k2, c, psi, phi = mixture_setup(M=6, L=6.0, lam=(0, 0, 0))
    mix = MixtureSize(2, 1)
    s = propagate(ManyBodyHamiltonian(grid, k1, k2, c, mix), product_state(psi, phi, mix), 0.1, 5)
    ref = product_state(kinetic_propagator(k1, 0.5, psi), kinetic_propagator(k2, 0.5, phi), mix)
    diff = s.values - ref.values
    assert np.sqrt(s.weight * np.vdot(diff, diff).real) < 1e-9
    A, B, _ = kinetic_gaps(s, kinetic_propagator(k1, 0.5, psi), kinetic_propagator(k2, 0.5, phi), k1, k2)
    assert abs(A) < 1e-10 and abs(B) < 1e-10


def test_zero_step_is_identity():
    grid, k1, k2, c, psi, phi = mixture_setup()
    mix = MixtureSize(1, 1)
    s = product_state(psi, phi, mix)
    assert np.array_equal(propagate(ManyBodyHamiltonian(grid, k1, k2, c, mix), s, 0.0, 3).values, s.values)


def test_lanczos_matches_dense_exponential():
    grid, k1, k2, c, psi, phi = mixture_setup("magnetic", M=8)
    mix = MixtureSize(1, 1)
    H = ManyBodyHamiltonian(grid, k1, k2, c, mix)
    s = product_state(psi, phi, mix)
    ref = expm(-1j * H.dense()) @ s.values.ravel()
    out = propagate(H, s, 0.05, 20)
    assert np.sqrt(s.weight) * np.linalg.norm(out.values.ravel() - ref) < 1e-9


def test_long_propagation_keeps_symmetry_norm_and_energy():
    grid, k1, k2, c, psi, phi = mixture_setup(M=6, L=6.0)
    mix = MixtureSize(2, 2)
    H = ManyBodyHamiltonian(grid, k1, k2, c, mix)
    s = product_state(psi, phi, mix)
    e0 = H.expectation(s)
    s = propagate(H, s, 0.01, 1000)
    assert symmetry_defect(s) < 1e-10
    assert abs(s.norm() - 1) < 1e-10
    assert abs(H.expectation(s) - e0) < 1e-8 * abs(e0)


def test_symmetry_defect_of_unsymmetrized_states():
    grid = GridSpec(1, 8, 8.0)
    mix = MixtureSize(2, 1)
    f = gaussian(grid, -2.0, 0.8, 0.0)
    x = grid.centered_coords()[0]
    # odd partner, orthogonal to the even packet centred at the same point
    g = Field(grid, (x + 2.0) * f.values).normalized()
    one = np.ones(grid.n_sites)
    plain = ManyBodyState(mix, grid, np.multiply.outer(np.outer(f.values, g.values), one) / np.sqrt(grid.L))
    assert np.isclose(symmetry_defect(plain), np.sqrt(2) * plain.norm(), rtol=1e-6)
    anti = plain.with_values(plain.values - np.swapaxes(plain.values, 0, 1))
    assert np.isclose(symmetry_defect(anti), 2 * anti.norm())
    assert symmetry_defect(symmetrize(plain)) < 1e-14
