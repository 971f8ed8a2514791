import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.special import ellipj

from assoc_lame.bloch import (
    BlochPair,
    floquet_multipliers,
    hill_discriminant,
    lowest_edge,
    period,
    potential,
    product_solution,
    product_solution_derivs,
    scan_band_edges,
    schrodinger_residual,
)
from assoc_lame.elliptic import lattice_from_modulus, reduce_to_cell, wp
from assoc_lame.errors import DomainError
from assoc_lame.frobenius import ModelParams
from assoc_lame.susy import band_edges_31
from assoc_lame.verify import bloch_point, sample_energies


def test_potential_values(p31, lat95):
    assert potential(0.0, p31) == pytest.approx(2 * 0.95)
    assert potential(lat95.K, p31) == pytest.approx(12 * 0.95)
    x = np.linspace(-7, 7, 101)
    assert np.allclose(potential(x + 2 * lat95.K, p31), potential(x, p31), atol=1e-11)
    p22 = ModelParams(2, 2, 0.95)
    assert np.allclose(potential(x + lat95.K, p22), potential(x, p22), atol=1e-10)
    assert period(p22, lat95) == pytest.approx(lat95.K)
    s, c, d, _ = ellipj(x, 0.95)
    assert np.allclose(potential(x, p31), 12 * 0.95 * s**2 + 2 * 0.95 * c**2 / d**2, atol=1e-11)


def test_lame_m1_edges(lat50):
    edges, _ = scan_band_edges(ModelParams(1, 0, 0.5), lat50, emax=6.0)
    assert edges == pytest.approx([0.5, 1.0, 1.5], abs=1e-9)


def test_lame_m2_edges(lat50):
    k2 = 0.5
    r = math.sqrt(1 - k2 + k2 * k2)
    want = sorted([2 * (1 + k2) - 2 * r, 1 + k2, 1 + 4 * k2, 4 + k2, 2 * (1 + k2) + 2 * r])
    edges, _ = scan_band_edges(ModelParams(2, 0, k2), lat50, emax=10.0)
    assert edges == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("k2", [0.5, 0.95])
def test_31_scan_matches_closed_form(k2):
    lat = lattice_from_modulus(k2)
    edges, _ = scan_band_edges(ModelParams(3, 1, k2), lat, emax=20.0, step=0.01)
    assert edges == pytest.approx(list(band_edges_31(k2).edges), abs=1e-8)


def test_lowest_edge(p31, lat95):
    assert lowest_edge(p31, lat95) == pytest.approx(band_edges_31(0.95).edges[0], abs=1e-9)


def test_hill_discriminant_examples(p31, lat95):
    assert abs(hill_discriminant(p31, 4.75, lat95)) > 2
    assert abs(hill_discriminant(p31, 9.45, lat95)) > 2
    assert abs(hill_discriminant(p31, 12.0, lat95)) < 2
    for e in band_edges_31(0.95).edges:
        assert abs(abs(hill_discriminant(p31, e, lat95)) - 2) < 1e-6


PAIRS_E = [((1, 0), 0.5, 0.3), ((1, 0), 0.5, 1.2), ((2, 0), 0.5, 2.0), ((1, 1), 0.5, 5.0),
           ((2, 1), 0.5, 4.0), ((3, 1), 0.95, 4.75), ((3, 1), 0.95, 9.4), ((3, 1), 0.95, 12.0),
           ((2, 2), 0.5, 3.0), ((2, 2), 0.5, 8.0), ((3, 2), 0.5, 6.0)]


@pytest.mark.parametrize("pair,k2,E", PAIRS_E)
def test_bloch_pair_measurements(pair, k2, E):
    lat = lattice_from_modulus(k2)
    got = bloch_point(ModelParams(*pair, k2), E, lat)
    assert got["residual"] < 1e-6
    assert got["wronskian"] < 1e-8
    assert got["multiplier"] < 1e-6
    assert got["psi_prime"] < 1e-8


@pytest.mark.parametrize("pair,k2,E", PAIRS_E[:8])
def test_psi_matches_direct_integration(pair, k2, E):
    lat = lattice_from_modulus(k2)
    p = ModelParams(*pair, k2)
    pair_ = BlochPair(p, E, lat)
    T = period(p, lat)
    y0 = [pair_.psi(np.array([0.0]))[0], pair_.dpsi(np.array([0.0]))[0]]

    def rhs(x, y):
        s, c, d, _ = ellipj(x, k2)
        V = p.m * (p.m + 1) * k2 * s * s + p.ell * (p.ell + 1) * k2 * c * c / (d * d)
        return [y[1], (V - E) * y[0]]

    xs = np.linspace(0, T, 25)
    out = [solve_ivp(rhs, (0, T), np.real(y0) if part == 0 else np.imag(y0), method="DOP853",
                     rtol=1e-12, atol=1e-14, t_eval=xs).y[0] for part in (0, 1)]
    direct = out[0] + 1j * out[1]
    got = pair_.psi(xs)
    assert np.max(np.abs(got - direct)) < 1e-8 * np.max(np.abs(got))


def test_gap_solutions_real_and_parity(p31, lat95):
    pair = BlochPair(p31, 4.75, lat95)
    x = np.linspace(-4 * lat95.K, 4 * lat95.K, 301)
    for s in (+1, -1):
        psi = pair.psi(x, s)
        assert np.max(np.abs(psi.imag)) < 1e-8 * np.max(np.abs(psi))
    assert np.allclose(pair.psi(-x, -1), pair.psi(x, +1), rtol=1e-10)
    assert pair.psi(np.array([0.0]))[0] == pytest.approx(1.0)


def test_band_solutions_conjugate(p31, lat95):
    pair = BlochPair(p31, 12.0, lat95)
    x = np.linspace(-4 * lat95.K, 4 * lat95.K, 301)
    assert np.allclose(pair.psi(x, -1), np.conj(pair.psi(x, +1)), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("pair,k2", [((3, 1), 0.95), ((2, 1), 0.5), ((2, 2), 0.5), ((1, 0), 0.5)])
def test_floquet_exponent_bands_and_gaps(pair, k2):
    lat = lattice_from_modulus(k2)
    p = ModelParams(*pair, k2)
    band, gap = sample_energies(p, lat)
    for E in band:
        mu = BlochPair(p, E, lat).multiplier
        assert abs(abs(mu) - 1) < 1e-7          # exponent purely imaginary
    for E in gap:
        mu = BlochPair(p, E, lat).multiplier
        assert abs(mu.imag) < 1e-7 * abs(mu)    # real multiplier (either sign)
        assert abs(abs(mu) - 1) > 1e-3


def test_multiplier_against_transfer_matrix(p31, lat95):
    for E in (4.75, 9.4, 12.0, 15.0):
        mu = BlochPair(p31, E, lat95).multiplier_2K
        ev = floquet_multipliers(p31, E, lat95)
        assert np.min(np.abs(ev - mu)) < 1e-8 * abs(mu)


def test_product_of_pair_is_product_solution(p31, lat95):
    pair = BlochPair(p31, 9.4, lat95)
    x = np.linspace(0.1, 5, 40)
    ratio = pair.psi(x, 1) * pair.psi(x, -1) / product_solution(pair.z_of_x(x), pair.sol, p31, lat95)
    assert np.max(np.abs(ratio - ratio[0])) < 1e-8 * abs(ratio[0])


def test_product_solution_identity(p31, lat95):
    pair = BlochPair(p31, 4.75, lat95)
    z = 0.4 + 0.3j + np.linspace(0, 1.5, 15)
    P, P1, P2 = product_solution_derivs(z, pair.sol, p31, lat95)
    w = wp(z, lat95)
    m, l = p31.m, p31.ell
    rhs = 4 * P * P * (m * (m + 1) * w + l * (l + 1) * lat95.ebar2 * lat95.ebar3 / (w - lat95.e1)
                       - pair.sol.Etilde)
    lhs = 2 * P * P2 + 1 - P1 * P1
    assert np.max(np.abs(lhs - rhs) / np.maximum(1, np.abs(rhs))) < 1e-9
    assert np.allclose(product_solution(pair.sol.b, pair.sol, p31, lat95), 0, atol=1e-10)


def test_exchange_symmetry(p31, lat95):
    pair = BlochPair(p31, 9.4, lat95)
    flipped = replace(pair.sol, b=np.array([reduce_to_cell(-b, lat95) for b in pair.sol.b]))
    other = BlochPair(p31, 9.4, lat95, sol=flipped)
    x = np.linspace(-5, 5, 41)
    assert np.allclose(other.psi(x, +1), pair.psi(x, -1), rtol=1e-9)


def test_lame_limit_residual(lat50):
    pair = BlochPair(ModelParams(1, 0, 0.5), 0.3, lat50)
    x = np.linspace(0, 2 * lat50.K, 201)
    assert schrodinger_residual(pair, x) < 1e-6


def test_complex_energy_rejected(p31, lat95):
    with pytest.raises(DomainError):
        BlochPair(p31, 4.0 + 1j, lat95)
