import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import ellipj, ellipk

from assoc_lame.elliptic import (
    complete_K,
    inverse_wp,
    jacobi,
    lattice_from_modulus,
    wp,
    wp_and_prime,
    wp_lattice_sum,
    wsigma,
    wzeta,
)
from assoc_lame.errors import DomainError, PoleError
from assoc_lame.verify import elliptic_checks


def K_by_quadrature(k2):
    return quad(lambda t: 1.0 / math.sqrt(1.0 - k2 * math.sin(t) ** 2), 0.0, math.pi / 2,
                epsabs=0, epsrel=1e-13)[0]


@pytest.mark.parametrize("k2", [1e-6, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999])
def test_complete_K_matches_quadrature(k2):
    assert complete_K(k2) == pytest.approx(K_by_quadrature(k2), rel=1e-12)
    assert complete_K(k2) == pytest.approx(ellipk(k2), rel=1e-13)


def test_complete_K_reference_values():
    assert complete_K(0.5) == pytest.approx(1.854074677, abs=1e-9)
    assert complete_K(1e-12) == pytest.approx(math.pi / 2, rel=1e-11)
    assert complete_K(0.95) == lattice_from_modulus(0.05).Kprime


@pytest.mark.parametrize("k2", [0.0, 1.0, -0.2, 1.5])
def test_modulus_out_of_range(k2):
    with pytest.raises(DomainError):
        complete_K(k2)
    with pytest.raises(DomainError):
        lattice_from_modulus(k2)


def test_jacobi_special_points():
    k2 = 0.7
    assert np.allclose(jacobi(0.0, k2), (0, 1, 1), atol=1e-15)
    K = complete_K(k2)
    s, c, d = jacobi(K, k2)
    assert s == pytest.approx(1, abs=1e-14)
    assert abs(c) < 1e-14
    assert d == pytest.approx(math.sqrt(1 - k2), abs=1e-14)


@pytest.mark.parametrize("k2", [0.05, 0.5, 0.95])
def test_jacobi_real_axis_matches_scipy(k2):
    x = np.linspace(-12, 12, 301)
    s, c, d = jacobi(x, k2)
    ss, cc, dd, _ = ellipj(x, k2)
    assert np.max(np.abs(s - ss)) < 1e-13
    assert np.max(np.abs(c - cc)) < 1e-13
    assert np.max(np.abs(d - dd)) < 1e-13


def jacobi_addition(x, y, k2):
    """sn, cn, dn at x + iy from real-argument values (Jacobi imaginary
    transformation plus the addition theorem): an independent oracle."""
    s, c, d, _ = ellipj(x, k2)
    s1, c1, d1, _ = ellipj(y, 1 - k2)
    den = c1 * c1 + k2 * s * s * s1 * s1
    return ((s * d1 + 1j * c * d * s1 * c1) / den,
            (c * c1 - 1j * s * d * s1 * d1) / den,
            (d * c1 * d1 - 1j * k2 * s * c * s1) / den)


@pytest.mark.parametrize("k2", [0.05, 0.5, 0.95])
def test_jacobi_complex_matches_addition_theorem(k2):
    rng = np.random.default_rng(3)
    K, Kp = complete_K(k2), complete_K(1 - k2)
    x = rng.uniform(-2 * K, 2 * K, 200)
    y = rng.uniform(-0.9 * Kp, 0.9 * Kp, 200)
    got = jacobi(x + 1j * y, k2)
    want = jacobi_addition(x, y, k2)
    for g, w in zip(got, want):
        assert np.max(np.abs(g - w) / np.maximum(1, np.abs(w))) < 1e-12


def test_sn_shift_by_iKprime_on_real_axis():
    k2 = 0.95
    Kp = complete_K(1 - k2)
    x = np.linspace(0.1, 5.0, 50)
    s = jacobi(x, k2)[0]
    assert np.allclose(jacobi(x + 1j * Kp, k2)[0], 1 / (math.sqrt(k2) * s), rtol=1e-12)


def test_jacobi_pole_raises_with_location():
    k2 = 0.5
    Kp = complete_K(1 - k2)
    with pytest.raises(PoleError) as info:
        jacobi(2 * complete_K(k2) + 1j * Kp, k2)
    assert info.value.location is not None


def test_lattice_constants():
    lat = lattice_from_modulus(0.5)
    assert (lat.e1, lat.e2, lat.e3) == pytest.approx((0.5, 0.0, -0.5), abs=1e-15)
    assert lat.ebar3 == pytest.approx(1.0)
    assert lat.ebar2 == pytest.approx(0.5)
    assert lat.omega1 == pytest.approx(lat.K)
    assert lat.omega3 == pytest.approx(1j * lat.Kprime)


@pytest.mark.parametrize("k2", [0.05, 0.25, 0.5, 0.75, 0.95])
def test_lattice_invariants(k2):
    lat = lattice_from_modulus(k2)
    assert lat.e1 > lat.e2 > lat.e3
    assert abs(lat.e1 + lat.e2 + lat.e3) < 1e-15
    assert lat.g2**3 - 27 * lat.g3**2 > 0
    assert (lat.e2 - lat.e3) / (lat.e1 - lat.e3) == pytest.approx(k2, rel=1e-14)
    assert lat.omega2 == pytest.approx(lat.omega1 + lat.omega3)
    # the e_i are roots of 4t^3 - g2 t - g3
    for e in (lat.e1, lat.e2, lat.e3):
        assert abs(4 * e**3 - lat.g2 * e - lat.g3) < 1e-14


@pytest.mark.parametrize("k2", [0.05, 0.5, 0.95])
def test_wp_half_periods_against_lattice_sum(k2):
    lat = lattice_from_modulus(k2)
    for i, e in zip((1, 2, 3), (lat.e1, lat.e2, lat.e3)):
        w = lat.half_period(i)
        assert wp_lattice_sum(w, lat) == pytest.approx(e, abs=1e-12)
        assert wp(w, lat) == pytest.approx(e, abs=1e-13)


def test_wp_pole_raises(lat50):
    with pytest.raises(PoleError):
        wp(2 * lat50.omega1, lat50)
    with pytest.raises(PoleError):
        wzeta(0.0, lat50)


def test_zeta_laurent_and_sigma_zero(lat50):
    z = 1e-4 * np.exp(1j * np.linspace(0, 6, 7))
    assert np.max(np.abs(wzeta(z, lat50) - 1 / z)) < 1e-6
    assert wsigma(0.0, lat50) == 0


def test_wp_real_and_decreasing_on_real_segment(lat95):
    x = np.linspace(0.05, lat95.K, 200)
    vals = wp(x + 0j, lat95)
    assert np.max(np.abs(vals.imag)) < 1e-12
    assert np.all(np.diff(vals.real) < 0)


def test_inverse_wp_special_values(lat95):
    assert inverse_wp(lat95.e1, lat95) == pytest.approx(lat95.omega1, abs=1e-7)
    for c in (lat95.e1 + 0.3, 2.0, 50.0):
        b = inverse_wp(c, lat95)
        assert abs(b.imag) < 1e-12
        assert 0 < b.real < lat95.K
        assert wp(b, lat95) == pytest.approx(c, rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20), st.sampled_from([0.05, 0.5, 0.95]))
def test_inverse_wp_roundtrip(re, im, k2):
    lat = lattice_from_modulus(k2)
    c = complex(re, im)
    b = inverse_wp(c, lat)
    assert abs(wp(b, lat) - c) <= 1e-11 * max(1.0, abs(c))
    assert 0 <= b.real < 2 * lat.omega1.real
    assert 0 <= b.imag < 2 * lat.omega3.imag


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.01, 0.99))
def test_wp_differential_equation(a, b, k2):
    lat = lattice_from_modulus(k2)
    z = 2 * a * lat.omega1 + 2 * b * lat.omega3
    p, dp = wp_and_prime(z, lat)
    rhs = 4 * (p - lat.e1) * (p - lat.e2) * (p - lat.e3)
    assert abs(dp * dp - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_identity_suite_passes():
    failed = [(c.name, c.worst) for c in elliptic_checks() if not c.passed]
    assert not failed
