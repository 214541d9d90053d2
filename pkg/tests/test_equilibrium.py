import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from painleve_kernel.equilibrium import (
    CRITICAL_QUARTIC,
    EndpointError,
    Potential,
    SupportInterval,
    classify_origin,
    density_coeffs,
    equilibrium_data,
    mass,
    omega,
    psi_t_eval,
    s_parameters,
    scaling_constants,
    solve_endpoints,
    support_angle,
)

QUADRATIC = Potential((0.0, 0.0, 1.0))
PERTURBED = Potential((0.0, 0.0, -1.0, 0.1, 0.25))


def quartic_b(t):
    # even quartic: 3 b^4 / 16 - b^2 / 2 = t
    y = (0.5 + math.sqrt(0.25 + 0.75 * t)) / (3 / 8)
    return math.sqrt(y)


# -- potential -----------------------------------------------------------------

@pytest.mark.parametrize("c", [(0, 0, -1), (0, 1, 0, 1), (1,), (0, 0, 0, 0, 0)])
def test_potential_rejects_bad_growth(c):
    with pytest.raises(ValueError):
        Potential(c)


def test_potential_parse_and_trailing_zeros():
    V = Potential.parse("0,0,-1,0,0.25,0,0")
    assert V == CRITICAL_QUARTIC
    assert V.degree == 4 and V.is_even
    assert not PERTURBED.is_even


# -- endpoints and density ----------------------------------------------------

def test_semicircle():
    iv = solve_endpoints(QUADRATIC, 1.0)
    assert iv.a == pytest.approx(-math.sqrt(2), abs=1e-12)
    assert iv.b == pytest.approx(math.sqrt(2), abs=1e-12)
    h = density_coeffs(QUADRATIC, iv)
    assert h == pytest.approx([2.0], abs=1e-12)
    x = np.linspace(-1.3, 1.3, 7)
    d = equilibrium_data(QUADRATIC)
    assert psi_t_eval(d, x) == pytest.approx(np.sqrt(2 - x * x) / math.pi, abs=1e-12)


def test_critical_quartic():
    iv = solve_endpoints(CRITICAL_QUARTIC, 1.0)
    assert (iv.a_t, iv.b_t) == pytest.approx((-2.0, 2.0), abs=1e-12)
    assert density_coeffs(CRITICAL_QUARTIC, iv) == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)


@pytest.mark.parametrize("t", [0.8, 0.93, 1.0, 1.07, 1.2])
def test_quartic_closed_form_in_t(t):
    iv = solve_endpoints(CRITICAL_QUARTIC, t)
    b = quartic_b(t)
    assert iv.b == pytest.approx(b, abs=1e-12)
    h = density_coeffs(CRITICAL_QUARTIC, iv)
    assert h == pytest.approx([b * b / 2 - 2, 0.0, 1.0], abs=1e-12)
    assert mass(iv, h) == pytest.approx(1.0, abs=1e-10)


def test_t_window_enforced():
    with pytest.raises(ValueError):
        solve_endpoints(CRITICAL_QUARTIC, 1.5)
    solve_endpoints(CRITICAL_QUARTIC, 1.5, t_window=(0.5, 2.0))


def test_two_cut_configuration_detected():
    with pytest.raises(EndpointError):
        solve_endpoints(Potential((0.0, 0.0, -2.0, 0.0, 0.25)), 1.0)


def test_interval_requires_interior_origin():
    with pytest.raises(ValueError):
        SupportInterval(0.5, 2.0)
    with pytest.raises(ValueError):
        SupportInterval(1.0, -1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.0, 2.0), st.floats(0.8, 1.2))
def test_convex_even_potentials(k, g, t):
    V = Potential((0.0, 0.0, k, 0.0, g))
    d = equilibrium_data(V, t)
    h = np.array(d.h_coeffs)
    assert d.interval.a + d.interval.b == 0
    assert np.all(h[1::2] == 0)
    assert mass(d.interval, h) == pytest.approx(1.0, abs=1e-10)
    assert d.theta == 0.0
    assert d.omega_t == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(-0.3, 0.3), st.floats(0.0, 0.5), st.floats(0.9, 1.1))
def test_general_convex_mass_and_positivity(k, g1, g3, t):
    V = Potential((0.0, g1, k, g3 * 0.2, 0.5))
    assume(np.all(np.polynomial.polynomial.polyroots([2 * k, 6 * g3 * 0.2, 6.0]).imag != 0) or g3 == 0)
    d = equilibrium_data(V, t)
    iv = d.interval
    h = np.array(d.h_coeffs)
    assert mass(iv, h) == pytest.approx(1.0, abs=1e-10)
    x = np.linspace(iv.a, iv.b, 41)[1:-1]
    assert np.all(psi_t_eval(d, x) > 0)
    assert -math.pi / 2 < d.theta < math.pi / 2
    assert 0 < d.omega_t < 1


# -- origin -------------------------------------------------------------------------

def test_classify_critical_quartic():
    r = classify_origin(CRITICAL_QUARTIC)
    assert r.psi0 == pytest.approx(0.0, abs=1e-14)
    assert r.dpsi0 == pytest.approx(0.0, abs=1e-14)
    assert r.ddpsi0 == pytest.approx(2 / math.pi, abs=1e-12)
    assert r.is_singular_case_II


def test_classify_quadratic():
    r = classify_origin(QUADRATIC)
    assert r.psi0 == pytest.approx(math.sqrt(2) / math.pi, abs=1e-12)
    assert r.dpsi0 == pytest.approx(0.0, abs=1e-14)
    assert r.ddpsi0 < 0
    assert not r.is_singular_case_II


def test_classify_perturbed():
    assert not classify_origin(PERTURBED).is_singular_case_II


def test_origin_outside_support():
    with pytest.raises(Exception):
        classify_origin(Potential((0.0, -8.0, 1.0)))


# -- constants -------------------------------------------------------------------

def test_scaling_constants_quartic():
    c, theta, om, w0 = scaling_constants(CRITICAL_QUARTIC)
    assert c == pytest.approx(0.25 ** (1 / 3), abs=1e-12)
    assert theta == 0.0
    assert om == pytest.approx(0.5, abs=1e-12)
    assert w0 == pytest.approx(1 / (2 * math.pi), abs=1e-12)


def test_non_critical_rejected():
    with pytest.raises(ValueError):
        scaling_constants(QUADRATIC)
    assert equilibrium_data(QUADRATIC).c is None


def test_support_angle():
    assert support_angle(SupportInterval(-1.0, 2.0)) == pytest.approx(math.asin(1 / 3), abs=1e-15)
    assert support_angle(SupportInterval(-1.0, 2.0)) == pytest.approx(0.33984, abs=1e-5)


def test_psi_eval_examples():
    d = equilibrium_data(CRITICAL_QUARTIC, 1.0)
    assert psi_t_eval(d, 1.0) == pytest.approx(math.sqrt(3) / (2 * math.pi), abs=1e-14)
    assert psi_t_eval(d, [-2.0, 2.0]) == pytest.approx([0.0, 0.0], abs=1e-14)
    with pytest.raises(ValueError):
        psi_t_eval(d, 2.01)


def test_signed_measure_regime():
    below = equilibrium_data(CRITICAL_QUARTIC, 0.97)
    above = equilibrium_data(CRITICAL_QUARTIC, 1.03)
    assert below.psi_t_at_0 < 0 < above.psi_t_at_0
    assert below.h_coeffs[0] < 0 < above.h_coeffs[0]


def test_slope_in_t_equals_w0():
    h = 1e-5
    slope = (equilibrium_data(CRITICAL_QUARTIC, 1 + h).psi_t_at_0
             - equilibrium_data(CRITICAL_QUARTIC, 1 - h).psi_t_at_0) / (2 * h)
    assert slope == pytest.approx(1 / (2 * math.pi), abs=1e-6)


def test_omega_even_and_quadrature():
    iv = solve_endpoints(QUADRATIC, 1.0)
    assert omega(iv, density_coeffs(QUADRATIC, iv)) == pytest.approx(0.5, abs=1e-12)


# -- s-parameters --------------------------------------------------------------------

def test_s_tn_vanishes_at_t1():
    d = equilibrium_data(CRITICAL_QUARTIC, 1.0)
    for n in (10, 100, 1000):
        assert s_parameters(d, n, "s_tn") == 0.0


def test_s_of_L_value():
    d = equilibrium_data(CRITICAL_QUARTIC, 1.0)
    assert s_parameters(d, 50, "s_L", L=1.0) == pytest.approx(2 ** (-1 / 3), abs=1e-12)
    assert s_parameters(d, 50, "s_L", L=1.0) == pytest.approx(0.79370, abs=1e-5)


@pytest.mark.parametrize("L", [-1.0, 0.5, 1.0])
def test_s_star_equals_s_of_L(L):
    for n in (20, 200, 2000):
        t = 1 + L * n ** (-2 / 3)
        d = equilibrium_data(CRITICAL_QUARTIC, t)
        assert s_parameters(d, n, "s_star") == pytest.approx(s_parameters(d, n, "s_L", L=L), abs=1e-12)


def test_s_tn_approaches_s_of_L():
    L = 1.0
    gaps = []
    for n in (100, 800, 6400):
        d = equilibrium_data(CRITICAL_QUARTIC, 1 + L * n ** (-2 / 3))
        gaps.append(abs(s_parameters(d, n, "s_tn") - s_parameters(d, n, "s_L", L=L)))
    assert gaps[0] > gaps[1] > gaps[2]
    # n -> 8n shrinks an O(n^{-2/3}) gap by 4
    assert gaps[0] / gaps[1] == pytest.approx(4, rel=0.1)


def test_s_mode_validation():
    d = equilibrium_data(CRITICAL_QUARTIC, 1.0)
    with pytest.raises(ValueError):
        s_parameters(d, 10, "nonsense")
    with pytest.raises(ValueError):
        s_parameters(equilibrium_data(QUADRATIC), 10, "s_tn")


def test_data_is_immutable():
    d = equilibrium_data(CRITICAL_QUARTIC)
    with pytest.raises(AttributeError):
        d.c = 1.0
