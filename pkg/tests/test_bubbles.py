import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsinflation.bubbles import (BubbleParams, CutoffProfile, Ladder, Mollifier, ProblemParams,
                                  TanghuruSpec, bubble_initial, bubble_ode_evolved, check_rates,
                                  inflation_rate_exponent, linear_correction, mollify, ode_evolve_values,
                                  ode_phase, profile_sobolev_norm, smooth_background, tanghuru,
                                  tanghuru_term, wound_profile_norm)
from nlsinflation.errors import DomainError, GeometryError, ResolutionError
from nlsinflation.grid import Field, GridSpec, random_field
from nlsinflation.sobolev import hs_dot_norm, hs_norm, l2_norm

# Frozen values from adaptive quadrature (scipy.integrate.quad) of the bump
# exp(1 - 1/(1 - r^2)), computed once outside the package.
PHI_INTEGRAL = {1: 1.2069003224378763, 3: 1.1990039070192138}
PHI_L2 = {1: 0.9916555918829513, 3: 0.842679247928708}
PHI_H1_DOT = {1: 1.7396728914650406, 3: 2.9555988524182495}
RHO_HAT = {
    1: {0.5: 0.9803732695714831, 3.0: 0.44573375943196436, 10.0: 0.03293533856245638},
    3: {0.5: 0.9861137873953835, 3.0: 0.5859391504898644, 10.0: -0.008159031268934748},
}


@pytest.fixture
def pp3():
    return ProblemParams(p=3, sigma=-1, s=0.3, dim=3)


@pytest.fixture
def pp1():
    return ProblemParams(p=9, sigma=-1, s=0.2, dim=1)


# ---------------------------------------------------------------- parameters

@pytest.mark.parametrize("kwargs", [
    dict(p=4), dict(p=1), dict(sigma=0), dict(dim=4), dict(s=0.0), dict(s=0.5),
])
def test_problem_params_domain(kwargs):
    with pytest.raises(DomainError):
        ProblemParams(**kwargs)


def test_critical_regularity():
    assert ProblemParams(p=3, s=0.1, dim=3).s_c == pytest.approx(0.5)
    assert ProblemParams(p=9, s=0.1, dim=1).s_c == pytest.approx(0.25)


@pytest.mark.parametrize("gamma,beta,p", [(0.2, 0.1, 3), (0.05, 0.3, 3), (0.07, 0.12, 3),
                                          (0.0, 0.1, 3), (0.02, 0.1, 9)])
def test_rate_constraints(gamma, beta, p):
    with pytest.raises(DomainError):
        check_rates(p, gamma, beta)


def test_schedule_identities(pp3):
    bp = BubbleParams.from_n(pp3, 1e6)
    L = math.log(1e6)
    assert bp.kappa == pytest.approx(L**-0.05, rel=1e-13)
    assert bp.t * bp.lam**2 == pytest.approx(bp.phase_budget, rel=1e-12)
    assert bp.phase_budget == pytest.approx(L ** (0.07 * 2), rel=1e-13)
    assert bp.eps == pytest.approx(1e-8, rel=1e-12)
    assert bp.lam == pytest.approx(bp.kappa * 1e6 ** (1.5 - 0.3), rel=1e-12)
    assert math.exp(bp.log_lower_bound) == pytest.approx(bp.kappa * bp.phase_budget**0.3)


def test_schedule_in_log_space_handles_huge_scales(pp3):
    bp = BubbleParams(pp3, log_n=5.0**6)
    assert math.isfinite(bp.log_t) and bp.t == 0.0
    assert bp.log_lam > 700


def test_scale_below_e_rejected(pp3):
    with pytest.raises(DomainError):
        BubbleParams.from_n(pp3, 2.0)


def test_inflation_rate_exponent(pp3):
    assert inflation_rate_exponent(pp3, 0.01, 0.24) == pytest.approx(0.3 * 0.23 * 2 - 0.01)


# ---------------------------------------------------------------- profile oracles

@pytest.mark.parametrize("dim", [1, 3])
def test_profile_integral_matches_quadrature(dim):
    assert CutoffProfile().integral(dim) == pytest.approx(PHI_INTEGRAL[dim], rel=1e-10)


@pytest.mark.parametrize("dim", [1, 3])
def test_profile_norms_match_quadrature(dim):
    phi = CutoffProfile()
    assert profile_sobolev_norm(phi, dim, 0.0) == pytest.approx(PHI_L2[dim], rel=1e-6)
    assert profile_sobolev_norm(phi, dim, 1.0) == pytest.approx(PHI_H1_DOT[dim], rel=1e-6)


@pytest.mark.parametrize("dim", [1, 3])
@pytest.mark.parametrize("k", [0.5, 3.0, 10.0])
def test_mollifier_transform_matches_quadrature(dim, k):
    assert Mollifier(dim).hat(np.array([k]))[0] == pytest.approx(RHO_HAT[dim][k], rel=1e-9)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_mollifier_has_unit_mass(dim):
    assert Mollifier(dim).hat(np.zeros(1))[0] == pytest.approx(1.0, rel=1e-13)


def test_profile_support_and_peak():
    phi = CutoffProfile()
    r = np.array([0.0, 0.5, 0.999, 1.0, 2.0])
    vals = phi(r)
    assert vals[0] == phi.peak == 1.0
    assert vals[3] == vals[4] == 0.0
    assert 0 < vals[2] < 1e-100 or vals[2] == 0.0


# ---------------------------------------------------------------- bubbles

def test_ode_phase():
    assert ode_phase(math.pi / 2, -1) == pytest.approx(-1j)
    np.testing.assert_allclose(ode_phase(np.array([0.0, math.pi]), 1), [1, -1], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5.0, 5.0), st.sampled_from([3, 5, 9]))
def test_ode_flow_keeps_modulus(seed, t, p):
    u = random_field(GridSpec(1, 32), np.random.default_rng(seed)).values
    out = ode_evolve_values(u, t, p, -1)
    np.testing.assert_allclose(np.abs(out), np.abs(u), rtol=1e-12)


def test_ode_flow_on_unit_constant_is_ode_phase():
    u = np.ones(4, dtype=complex)
    np.testing.assert_allclose(ode_evolve_values(u, 0.7, 5, 1), ode_phase(0.7, 1) * u)


def test_bubble_peak_and_l2_scaling(pp1):
    grid = GridSpec(1, 8192)
    phi = CutoffProfile()
    for n in (8.0, 32.0):
        bp = BubbleParams.from_n(pp1, n, gamma=0.025, beta=0.06)
        v = bubble_initial(pp1, bp, phi, grid)
        assert np.max(np.abs(v.values)) == pytest.approx(math.exp(bp.log_amplitude), rel=1e-12)
        expected = bp.kappa * n ** -pp1.s * PHI_L2[1]
        assert l2_norm(v) == pytest.approx(expected, rel=1e-8)


def test_bubble_geometry_errors(pp1):
    phi = CutoffProfile()
    bp = BubbleParams.from_n(pp1, 8.0, gamma=0.025, beta=0.06)
    with pytest.raises(ResolutionError):
        bubble_initial(pp1, bp, phi, GridSpec(1, 64))
    with pytest.raises(GeometryError):
        bubble_initial(pp1, bp, phi, GridSpec(1, 4096), center=3.1)
    with pytest.raises(ValueError):
        bubble_initial(pp1, bp, phi, GridSpec(2, 16))


def test_mollify_identities():
    grid = GridSpec(1, 128)
    rho = Mollifier(1)
    f = random_field(grid, np.random.default_rng(9))
    assert mollify(f, rho, 0.0) is f
    const = Field(grid, 2.5 * np.ones(128))
    np.testing.assert_allclose(mollify(const, rho, 0.3).values, const.values, atol=1e-12)
    out = mollify(f, rho, 0.1)
    assert out.representation == f.representation
    assert out.spectral().values[0] == pytest.approx(f.spectral().values[0], abs=1e-12)
    assert l2_norm(out) <= l2_norm(f)
    with pytest.raises(DomainError):
        mollify(f, rho, -1.0)


def test_bubble_ode_evolved_at_time_zero(pp1):
    grid = GridSpec(1, 4096)
    phi, rho = CutoffProfile(), Mollifier(1)
    bp = BubbleParams.from_n(pp1, 8.0, gamma=0.025, beta=0.06)
    a = bubble_ode_evolved(pp1, bp, phi, rho, grid, None, 0.0, 0.0)
    np.testing.assert_allclose(a.values, bubble_initial(pp1, bp, phi, grid).values, atol=1e-14)


# ---------------------------------------------------------------- ladders and superpositions

def test_ladders():
    geo = Ladder("geometric", n0=8.0, ratio=4.0)
    assert [geo.n(k) for k in range(3)] == pytest.approx([8.0, 32.0, 128.0])
    dbl = Ladder("double-exponential", a=5.0)
    assert dbl.log_n(3) == 125.0
    for bad in (dict(kind="geometric", ratio=1.0), dict(kind="geometric", n0=2.0),
                dict(kind="double-exponential", a=4.0), dict(kind="spiral")):
        with pytest.raises(DomainError):
            Ladder(**bad)


def test_spec_validation():
    with pytest.raises(DomainError):
        TanghuruSpec(k0=2, K=1)
    spec = TanghuruSpec(k0=0, K=1, ladder=Ladder(n0=3.0, ratio=1.5))
    with pytest.raises(DomainError):
        spec.bubble(ProblemParams(p=3, s=0.3, dim=3), -3)


@pytest.fixture
def setup1(pp1):
    grid = GridSpec(1, 4096)
    spec = TanghuruSpec(0, 2, Ladder(n0=8.0, ratio=2.0), centers={0: -1.5, 2: 1.5},
                        background=smooth_background(grid, 0.1, 0.5), gamma=0.025, beta=0.06)
    return pp1, grid, spec, CutoffProfile(), Mollifier(1)


def test_superposition_is_sum_of_terms(setup1):
    pp, grid, spec, phi, _ = setup1
    total = tanghuru(pp, spec, phi, grid).values
    parts = spec.background.values + sum(tanghuru_term(pp, spec, phi, grid, k).values
                                         for k in spec.rungs)
    np.testing.assert_allclose(total, parts, atol=1e-14)
    with pytest.raises(IndexError):
        tanghuru_term(pp, spec, phi, grid, 3)


def test_superposition_triangle_inequality(setup1):
    pp, grid, spec, phi, _ = setup1
    lhs = hs_norm(tanghuru(pp, spec, phi, grid), pp.s)
    rhs = hs_norm(spec.background, pp.s) + sum(
        hs_norm(tanghuru_term(pp, spec, phi, grid, k), pp.s) for k in spec.rungs)
    assert lhs <= rhs


def test_radial_bubble_in_three_dimensions(pp3):
    grid = GridSpec(3, 64, 0.5)
    bp = BubbleParams.from_n(pp3, 8.0)
    v = bubble_initial(pp3, bp, CutoffProfile(), grid).values
    # symmetric under reflection through the origin on the lattice
    np.testing.assert_allclose(v[1:, 1:, 1:], v[1:, 1:, 1:][::-1, ::-1, ::-1], atol=1e-12)


def test_linear_correction(setup1):
    pp, grid, spec, phi, rho = setup1
    bare = TanghuruSpec(0, 2, spec.ladder, spec.centers, None, spec.gamma, spec.beta)
    zero = linear_correction(pp, bare, phi, rho, grid, 0, 0.01, 0.3)
    assert np.max(np.abs(zero.values)) == 0.0
    at0 = linear_correction(pp, spec, phi, rho, grid, 2, 0.0, 0.0).values
    coarse = spec.background.values + sum(tanghuru_term(pp, spec, phi, grid, k).values
                                          for k in (0, 1))
    np.testing.assert_allclose(at0, coarse, atol=1e-12)
    later = linear_correction(pp, spec, phi, rho, grid, 2, 0.0, 0.4)
    assert l2_norm(later) == pytest.approx(l2_norm(Field(grid, coarse)), rel=1e-12)
    with pytest.raises(IndexError):
        linear_correction(pp, spec, phi, rho, grid, 5, 0.0, 0.0)


# ---------------------------------------------------------------- wound profile

@pytest.mark.parametrize("dim", [1, 3])
def test_wound_profile_reduces_to_profile_norms(dim):
    pp = ProblemParams(p=3 if dim == 3 else 9, s=0.2, dim=dim)
    assert wound_profile_norm(pp, 0.0, m=0.0, eps_n=0.0) == pytest.approx(PHI_L2[dim], rel=1e-7)
    assert wound_profile_norm(pp, 0.0, m=1.0, eps_n=0.0) == pytest.approx(PHI_H1_DOT[dim], rel=1e-6)


@pytest.mark.parametrize("dim", [1, 3])
def test_wound_profile_l2_is_phase_invariant(dim):
    pp = ProblemParams(p=3 if dim == 3 else 9, s=0.2, dim=dim)
    a = wound_profile_norm(pp, 0.0, m=0.0)
    assert wound_profile_norm(pp, 7.5, m=0.0) == pytest.approx(a, rel=1e-10)


def test_wound_profile_grows_with_winding(pp3):
    norms = [wound_profile_norm(pp3, th, m=1.0) for th in (0.0, 4.0, 16.0)]
    assert norms[0] < norms[1] < norms[2]


def test_wound_profile_matches_three_dimensional_grid(pp3):
    # direct evaluation on a 3D lattice of the mollified, wound unit bubble
    grid = GridSpec(3, 128, 1.5)
    phi, rho = CutoffProfile(), Mollifier(3)
    g = mollify(Field(grid, phi(grid.radius)), rho, 0.01).values.real
    wound = Field(grid, g * np.exp(-1j * 2.0 * g**2))
    assert wound_profile_norm(pp3, 2.0, m=1.0) == pytest.approx(hs_dot_norm(wound, 1.0), rel=2e-3)
