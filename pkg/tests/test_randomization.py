import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsinflation.errors import DomainError, InsufficientDataError, ResolutionError
from nlsinflation.grid import Field, GridSpec, SPECTRAL, plane_wave, random_field
from nlsinflation.randomization import (MIN_HALF_WIDTH, RandomEnsemble, bilinear_check, bilinear_pair_norm,
                                        build_partition, complex_gaussians, fit_tail,
                                        free_spacetime_norms, strichartz_tail, wiener_sample,
                                        window_1d)


@settings(max_examples=50, deadline=None)
@given(st.floats(MIN_HALF_WIDTH, 2.0), st.floats(-20.0, 20.0))
def test_window_translates_sum_to_one(half_width, eta):
    total = sum(window_1d(np.array([eta - j]), half_width)[0] for j in range(-30, 31))
    assert total == pytest.approx(1.0, abs=1e-13)


def test_window_support():
    eta = np.array([-1.0, 0.0, 0.99, 1.0])
    vals = window_1d(eta, 1.0)
    assert vals[0] == vals[3] == 0.0
    assert vals[1] == pytest.approx(1.0)


@pytest.mark.parametrize("dim,n", [(1, 64), (2, 16), (3, 8)])
@pytest.mark.parametrize("half_width", [0.51, 1.0, 2.0])
def test_partition_of_unity_on_lattice(dim, n, half_width):
    part = build_partition(GridSpec(dim, n, 2.0), half_width)
    assert part.reconstruction_error() < 1e-13


def test_partition_rejects_bad_width():
    with pytest.raises(DomainError):
        build_partition(GridSpec(1, 16), 0.5)


def test_block_norms_square_sum():
    # on the integer lattice a window of half-width below 1 is an indicator
    g = GridSpec(2, 16)
    part = build_partition(g, 0.6)
    f = random_field(g, np.random.default_rng(0))
    assert np.sum(part.block_norms(f) ** 2) == pytest.approx(np.sum(np.abs(f.spectral().values) ** 2),
                                                             rel=1e-12)


def test_single_block_multiplier():
    g = GridSpec(1, 32)
    part = build_partition(g)
    total = sum(part.block((int(k),)) for k in part.blocks)
    np.testing.assert_allclose(total, 1.0, atol=1e-13)


def test_complex_gaussians_moments():
    z = complex_gaussians(np.random.default_rng(1), (200000,))
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(z)) < 0.01
    assert abs(np.mean(z * z)) < 0.01


@pytest.fixture
def ensemble():
    g = GridSpec(1, 64)
    base = Field(g, g.japanese(-1.0).astype(complex), SPECTRAL)
    return RandomEnsemble(base, build_partition(g), seed=5, samples=10000)


def test_unit_coefficients_return_the_base(ensemble):
    out = wiener_sample(ensemble, 0, coefficients=1.0)
    np.testing.assert_allclose(out.values, ensemble.base.physical().values, atol=1e-13)


def test_samples_are_reproducible(ensemble):
    a = wiener_sample(ensemble, 3).values
    b = wiener_sample(ensemble, 3).values
    c = wiener_sample(ensemble, 4).values
    np.testing.assert_array_equal(a, b)
    assert np.max(np.abs(a - c)) > 1e-3
    batch = ensemble.sample_coeffs([4, 3])
    np.testing.assert_allclose(batch[1], wiener_sample(ensemble, 3).spectral().values, atol=1e-12)


def test_mean_square_norm_matches_expectation(ensemble):
    coeffs = ensemble.sample_coeffs(range(ensemble.samples))
    sq = np.sum(np.abs(coeffs) ** 2, axis=1)
    se = sq.std(ddof=1) / math.sqrt(len(sq))
    assert abs(sq.mean() - ensemble.expected_l2_squared()) < 3 * se


def test_dead_blocks_warn_once():
    g = GridSpec(1, 32)
    ens = RandomEnsemble(plane_wave(g, (3,)), build_partition(g), degenerate_tol=1e-12)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ens.coefficients(0)
        ens.coefficients(1)
    assert sum(issubclass(w.category, RuntimeWarning) for w in caught) == 1
    assert ens.n_live >= 1


def test_mismatched_grids_rejected():
    with pytest.raises(ValueError):
        RandomEnsemble(plane_wave(GridSpec(1, 32), (1,)), build_partition(GridSpec(1, 16)))


@pytest.mark.parametrize("q,r", [(4.0, 4.0), (6.0, 6.0)])
def test_free_norm_of_plane_wave(q, r):
    g = GridSpec(1, 32)
    s, k, T = 0.3, 3, 0.5
    c = plane_wave(g, (k,)).spectral().values[None]
    times = np.linspace(0.0, T, 17)
    got = free_spacetime_norms(g, c, s, q, r, times)[0]
    expected = (1 + k * k) ** (s / 2) * T ** (1 / q) * (2 * math.pi) ** (1 / r)
    assert got == pytest.approx(expected, rel=1e-12)


def test_fit_tail_recovers_rayleigh_slope():
    # |g| for a standard complex normal has P(|g| > x) = exp(-x^2)
    rng = np.random.default_rng(2)
    c = 2.5
    x = c * np.abs(complex_gaussians(rng, (20000,)))
    rep = fit_tail(np.linspace(0, 3 * c, 41), x)
    assert rep.slope == pytest.approx(-1 / c**2, rel=0.05)
    assert rep.r_squared > 0.99
    assert rep.dropped


def test_fit_tail_needs_points():
    with pytest.raises(InsufficientDataError):
        fit_tail(np.array([0.0, 10.0]), np.ones(100))


def test_single_block_strichartz_tail():
    g = GridSpec(1, 32)
    base = plane_wave(g, (3,))
    ens = RandomEnsemble(base, build_partition(g), seed=1, samples=4000, degenerate_tol=1e-12)
    times = np.linspace(0.0, 1.0, 8)
    C = free_spacetime_norms(g, base.spectral().values[None], 0.2, 6, 6, times)[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = strichartz_tail(ens, 0.2, 6, 6, 1.0, np.linspace(0, 3 * C, 41), 8)
    assert rep.slope == pytest.approx(-1 / C**2, rel=0.1)


def test_strichartz_tail_domain():
    g = GridSpec(1, 16)
    ens = RandomEnsemble(plane_wave(g, (1,)), build_partition(g), samples=10)
    with pytest.raises(DomainError):
        strichartz_tail(ens, 0.2, math.inf, 6, 1.0)
    with pytest.raises(DomainError):
        strichartz_tail(ens, 0.2, 6, 6, 0.0)
    with pytest.raises(InsufficientDataError):
        strichartz_tail(ens, 0.2, 6, 6, 1.0)


def test_bilinear_norm_homogeneity_and_zero():
    g = GridSpec(1, 128, 8.0)
    rng = np.random.default_rng(3)
    u = complex_gaussians(rng, g.shape) * (g.k_abs < 2)
    v = complex_gaussians(rng, g.shape) * (g.k_abs > 4) * (g.k_abs < 8)
    base = bilinear_pair_norm(g, u, v, 0.5, 33)
    assert bilinear_pair_norm(g, 2j * u, -3 * v, 0.5, 33) == pytest.approx(6 * base, rel=1e-12)
    assert bilinear_pair_norm(g, u, 0 * v, 0.5, 33) == 0.0


def test_bilinear_check_validation():
    g = GridSpec(1, 256, 20.0)
    with pytest.raises(DomainError):
        bilinear_check(g, 1.0, 2.0, 1.0, 2)
    with pytest.raises(ResolutionError):
        bilinear_check(g, 1.0, 40.0, 1.0, 2)
    rep = bilinear_check(g, 1.0, 4.0, 1.0, 3, seed=1)
    assert rep.ratios.shape == (3,) and rep.max >= rep.mean > 0
