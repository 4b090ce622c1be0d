import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosemix.interaction import (SR_CRITICAL, CouplingMatrix, build_kernel, check_sr_stability,
                                 form_bound_overshoot, kato_margin, mean_field_potential)
from bosemix.lattice import GridMismatchError, GridSpec, KineticSpec


def test_zero_coupling_gives_zero_kernel():
    assert not np.any(build_kernel(GridSpec(2, 8, 4.0), 0.0, 0.3, 0.5).values)


def test_kernel_origin_and_first_site():
    g = GridSpec(1, 8, 8.0)
    u = build_kernel(g, 1.0, 0.0, 1.0)
    assert u.values[0] == 1.0
    assert np.isclose(u.values[1], 1 / np.sqrt(2), rtol=0, atol=1e-15)
    assert np.isclose(build_kernel(g, 2.5, 0.4, 0.7).values[0], 2.5 / 0.7)


def test_kernel_is_even_under_minimum_image():
    g = GridSpec(2, 8, 5.0)
    u = build_kernel(g, 1.0, 0.5, 0.3).values
    assert np.array_equal(u, np.roll(u[::-1, ::-1], 1, axis=(0, 1)))


def test_kernel_rejects_bad_parameters():
    g = GridSpec(1, 8, 1.0)
    with pytest.raises(ValueError):
        build_kernel(g, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        build_kernel(g, 1.0, -1.0, 1.0)


def test_delta_density_returns_kernel():
    g = GridSpec(2, 8, 4.0)
    u = build_kernel(g, 1.2, 0.3, 2 * g.h)
    delta = np.zeros(g.shape)
    delta[0, 0] = 1 / g.cell
    assert np.allclose(mean_field_potential(u, delta), u.values, atol=1e-13)


def test_uniform_density():
    g = GridSpec(1, 16, 4.0)
    u = build_kernel(g, -0.7, 0.2, 0.5)
    out = mean_field_potential(u, np.full(g.shape, 0.3))
    assert np.allclose(out, 0.3 * g.cell * u.values.sum())


def test_convolution_matches_direct_sum(rng):
    g = GridSpec(2, 6, 3.0)
    u = build_kernel(g, 0.9, 0.4, 2 * g.h)
    rho = rng.random(g.shape)
    M = g.M
    direct = np.zeros(g.shape)
    for i in np.ndindex(g.shape):
        for j in np.ndindex(g.shape):
            direct[i] += u.values[(i[0] - j[0]) % M, (i[1] - j[1]) % M] * rho[j]
    assert np.allclose(mean_field_potential(u, rho), g.cell * direct, atol=1e-10)


def test_pair_matrix_matches_kernel_lookup():
    g = GridSpec(2, 4, 2.0)
    u = build_kernel(g, 1.0, 0.1, 0.5)
    U = u.pair_matrix()
    a, b = 5, 14
    ia, ib = np.unravel_index(a, g.shape), np.unravel_index(b, g.shape)
    assert U[a, b] == u.values[(ia[0] - ib[0]) % 4, (ia[1] - ib[1]) % 4]
    assert np.allclose(U, U.T)


def test_convolution_rejects_mismatch_and_negative_density():
    g = GridSpec(1, 8, 1.0)
    u = build_kernel(g, 1.0, 0.0, 0.5)
    with pytest.raises(GridMismatchError):
        mean_field_potential(u, np.ones(6))
    with pytest.raises(ValueError):
        mean_field_potential(u, -np.ones(8))


def test_sr_examples():
    assert check_sr_stability(CouplingMatrix(1.0, 2.0, 3.0)).passed
    ok = check_sr_stability(CouplingMatrix(0.0, 0.0, -1.0))
    assert ok.passed and np.isclose(ok.margin, SR_CRITICAL**2 - 1)
    assert np.isclose(SR_CRITICAL**2, 1.6211, atol=1e-4)
    bad = check_sr_stability(CouplingMatrix(-4 / np.pi, 0.0, 0.0))
    assert not bad.passed and bad.margin <= 0


@settings(max_examples=200, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_sr_pass_iff_margin_positive(a, b, c):
    res = check_sr_stability(CouplingMatrix(a, b, c))
    assert res.passed == (res.margin > 0)


def test_kato_margin_zero_coupling_and_monotone_in_epsilon():
    g = GridSpec(1, 16, 8.0)
    assert abs(kato_margin(g, 0.0, 1.0, lam=0.0)) < 1e-12
    vals = [kato_margin(g, 0.0, eps) for eps in (g.h, 2 * g.h, 4 * g.h)]
    assert vals[0] <= vals[1] <= vals[2]


def test_kato_margin_three_dimensions():
    g = GridSpec(3, 8, 16.0)
    vals = [kato_margin(g, 0.0, eps) for eps in (2 * g.h, 4 * g.h)]
    assert vals[0] >= -0.2 and vals[1] >= vals[0]
    # every term is homogeneous of degree -1 under rescaling of the box
    half = GridSpec(3, 8, 8.0)
    assert np.isclose(kato_margin(half, 0.0, 2 * half.h), 2 * vals[0])


def test_kato_margin_ritz_path_agrees_with_dense():
    g = GridSpec(2, 16, 8.0)
    dense = kato_margin(g, 0.2, 2 * g.h)
    ritz = kato_margin(g, 0.2, 2 * g.h, size_cap=100)
    assert np.isclose(dense, ritz, atol=1e-8)


def test_form_bound_holds_on_random_fields():
    g = GridSpec(3, 6, 6.0)
    u = build_kernel(g, 0.8, 0.0, 2 * g.h)
    assert form_bound_overshoot(u, KineticSpec("magnetic", 1.0), trials=50, rng=0) < 0
