import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsinflation.bubbles import ProblemParams
from nlsinflation.errors import RepresentationError, StepSizeError, StiffnessError
from nlsinflation.grid import Field, GridSpec, random_field
from nlsinflation.solver import (SolverConfig, convergence_order, energy, evolve, free_propagate,
                                 integrate, leakage_fraction, mass, ode_propagate, strang_step)
from nlsinflation.sobolev import l2_norm

PP1 = ProblemParams(p=9, sigma=-1, s=0.2, dim=1)
PP1_FOCUS = ProblemParams(p=9, sigma=1, s=0.2, dim=1)


def smooth_field(grid, seed):
    # band-limited random datum that survives the 2/3 truncation unchanged
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c *= np.exp(-grid.k_squared / 4.0)
    return Field(grid, c, "spectral").physical()


def plane(grid, k, amp):
    x = grid.coords[0]
    return Field(grid, amp * np.exp(1j * k * x) * np.ones(grid.shape))


@pytest.mark.parametrize("dt", [1e-3, 5e-2])
def test_config_validation(dt):
    SolverConfig(dt=dt)
    for bad in (dict(dt=0.0), dict(t_end=-1.0), dict(snapshots=1), dict(dealias="half"),
                dict(storage="disk"), dict(cfl_guard=0.0)):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_free_flow_is_a_group():
    g = GridSpec(2, 32)
    f = random_field(g, np.random.default_rng(1))
    a = free_propagate(free_propagate(f, 0.3), 0.45).values
    b = free_propagate(f, 0.75).values
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(free_propagate(free_propagate(f, 0.6), -0.6).values, f.values,
                               atol=1e-12)
    assert l2_norm(free_propagate(f, 1.7)) == pytest.approx(l2_norm(f), rel=1e-13)


def test_ode_flow_on_constant():
    g = GridSpec(1, 16)
    f = Field(g, 0.5 * np.ones(16))
    out = ode_propagate(f, 2.0, PP1).values
    np.testing.assert_allclose(out, 0.5 * np.exp(-1j * 2.0 * 0.5**8), atol=1e-15)
    with pytest.raises(RepresentationError):
        ode_propagate(f.spectral(), 1.0, PP1)


@pytest.mark.parametrize("pp", [PP1, PP1_FOCUS], ids=["defocusing", "focusing"])
@pytest.mark.parametrize("dealias", ["two_thirds", "off"])
def test_plane_wave_orbit_is_reproduced(pp, dealias):
    # a plane wave rotates at frequency sigma |a|^{p-1} - k^2; splitting reproduces it exactly
    g = GridSpec(1, 32)
    k, amp, t = 3, 0.7, 0.8
    out = integrate(plane(g, k, amp), t, 1e-2, pp, SolverConfig(dealias=dealias)).values
    exact = plane(g, k, amp).values * np.exp(1j * t * (pp.sigma * amp ** (pp.p - 1) - k * k))
    np.testing.assert_allclose(out, exact, atol=1e-12)


def test_zero_is_a_fixed_point():
    g = GridSpec(1, 32)
    zero = Field(g, np.zeros(32))
    assert not np.any(integrate(zero, 1.0, 0.1, PP1).values)


def test_nonlinearity_off_gives_free_flow():
    g = GridSpec(1, 64)
    f = smooth_field(g, 2)
    cfg = SolverConfig(nonlinearity=0.0)
    np.testing.assert_allclose(integrate(f, 0.5, 0.01, PP1, cfg).values,
                               free_propagate(f, 0.5).values, atol=1e-12)


def test_dispersion_off_gives_ode_flow():
    g = GridSpec(1, 64)
    f = random_field(g, np.random.default_rng(3))
    cfg = SolverConfig(dispersion=0.0, dealias="off")
    np.testing.assert_allclose(integrate(f, 0.5, 0.01, PP1, cfg).values,
                               ode_propagate(f, 0.5, PP1).values, atol=1e-12)


@pytest.mark.parametrize("dim", [1, 3])
def test_mass_and_energy_of_plane_wave(dim):
    g = GridSpec(dim, 16)
    pp = ProblemParams(p=3 if dim == 3 else 9, sigma=-1, s=0.2, dim=dim)
    amp, k = 0.5, 2
    f = plane(g, k, amp)
    vol = (2 * math.pi) ** dim
    assert mass(f) == pytest.approx(0.5 * amp**2 * vol, rel=1e-13)
    expected = 0.5 * k * k * amp**2 * vol + amp ** (pp.p + 1) / (pp.p + 1) * vol
    assert energy(f, pp) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_defocusing_energy_is_nonnegative(seed):
    f = random_field(GridSpec(1, 32), np.random.default_rng(seed))
    assert energy(f, PP1) >= 0


def test_conservation_over_evolution():
    g = GridSpec(1, 128)
    f = smooth_field(g, 4)
    traj, cons = evolve(f, SolverConfig(dt=1e-3, t_end=0.5, snapshots=6), PP1)
    assert cons.max_drift_mass < 1e-12
    assert cons.max_drift_energy < 1e-5
    assert len(traj.times) == 6 and traj.snapshots is None
    assert set(traj.scalars) >= {"hs", "Linf"}


def test_evolve_full_storage_matches_integrate():
    g = GridSpec(1, 64)
    f = smooth_field(g, 5)
    traj, _ = evolve(f, SolverConfig(dt=1e-2, t_end=0.4, snapshots=5, storage="full"), PP1)
    assert len(traj.snapshots) == 5
    np.testing.assert_allclose(traj.snapshots[-1].values, integrate(f, 0.4, 1e-2, PP1).values,
                               atol=1e-12)


def test_observer_columns_are_recorded():
    g = GridSpec(1, 32)
    traj, _ = evolve(smooth_field(g, 6), SolverConfig(dt=1e-2, t_end=0.1, snapshots=3), PP1,
                     observer=lambda t, u: {"time_copy": t})
    np.testing.assert_allclose(traj.scalars["time_copy"], traj.times)


def test_second_order_convergence():
    g = GridSpec(1, 128)
    f = Field(g, 0.8 * np.exp(-g.radius**2))
    order, diffs = convergence_order(f, 0.5, 2e-2, PP1, SolverConfig(dealias="off"))
    assert 1.8 <= order <= 2.2
    assert diffs[1] < diffs[0]


def test_time_reversibility():
    g = GridSpec(1, 64)
    f = smooth_field(g, 7)
    cfg = SolverConfig(dealias="off")
    back = integrate(integrate(f, 0.3, 1e-2, PP1, cfg), -0.3, 1e-2, PP1, cfg)
    np.testing.assert_allclose(back.values, f.values, atol=1e-11)


def test_step_guard():
    g = GridSpec(1, 16)
    big = Field(g, 2.0 * np.ones(16))
    with pytest.raises(StepSizeError):
        strang_step(big, 0.01, PP1)
    strang_step(big, 1e-3, PP1)


def test_stiffness_error_carries_partial_record():
    g = GridSpec(1, 16)
    huge = Field(g, 1e3 * np.ones(16))
    with pytest.raises(StiffnessError) as info:
        evolve(huge, SolverConfig(dt=1e-2, t_end=1.0, snapshots=4), PP1)
    assert info.value.trajectory is not None
    assert len(info.value.conservation.times) == 1


def test_adaptive_halving_reaches_the_end():
    g = GridSpec(1, 16)
    f = Field(g, 1.5 * np.ones(16))
    traj, cons = evolve(f, SolverConfig(dt=0.1, t_end=0.5, snapshots=3), PP1)
    assert cons.min_dt < 0.1
    assert traj.times[-1] == pytest.approx(0.5)


def test_leakage_fraction():
    g = GridSpec(1, 64)
    inside = Field(g, np.where(g.radius < 1.0, 1.0, 0.0))
    assert leakage_fraction(g, inside.values) == 0.0
    outside = np.where(g.radius > 2.0, 1.0, 0.0)
    assert leakage_fraction(g, outside) == 1.0
    assert leakage_fraction(g, np.zeros(64)) == 0.0


def test_zero_duration():
    g = GridSpec(1, 16)
    traj, cons = evolve(Field(g, np.ones(16)), SolverConfig(t_end=0.0), PP1)
    assert len(traj.times) == 1 and cons.steps == 0
