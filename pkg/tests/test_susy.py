import math

import numpy as np
import pytest

from assoc_lame import susy
from assoc_lame.bloch import BlochPair, potential
from assoc_lame.errors import DomainError, NodeError, SpecError
from assoc_lame.frobenius import ModelParams
from assoc_lame.verify import figure_partner


@pytest.fixture(scope="module")
def figs(lat95):
    return {name: figure_partner(name, lat95) for name in ("fig1", "fig2", "fig3", "fig4")}


def test_band_edges_31_values():
    be = susy.band_edges_31(0.95)
    d = be.as_dict()
    assert d["E0"] == pytest.approx(4.79991, abs=1e-4)
    assert d["E1"] == pytest.approx(4.8, abs=1e-12)
    assert d["E2"] == pytest.approx(9.55, abs=1e-12)
    assert be.gaps[0] == pytest.approx((4.8, 9.55), abs=1e-12)
    assert list(be.edges) == sorted(be.edges)
    assert len(be.edges) == 7


def test_band_edges_31_E3_E8_against_discriminant(p31, lat95):
    from assoc_lame.bloch import hill_discriminant

    be = susy.band_edges_31(0.95).as_dict()
    for key in ("E3", "E8"):
        assert abs(abs(hill_discriminant(p31, be[key], lat95)) - 2) < 1e-8
    # with k^4 - 9k'^2 under the root the values are not band edges
    k2 = 0.95
    r = math.sqrt(k2 * k2 - 9 * (1 - k2))
    for E in (10 + 2 * k2 - 2 * r, 10 + 2 * k2 + 2 * r):
        assert abs(abs(hill_discriminant(p31, E, lat95)) - 2) > 0.1


def test_band_edges_31_domain():
    with pytest.raises(DomainError):
        susy.band_edges_31(1.2)


def test_validate_spec_examples(p31, lat95):
    susy.validate_spec(susy.SusySpec(1, (4.75,)), p31, lat95)
    susy.validate_spec(susy.SusySpec(2, (9.4, 9.5)), p31, lat95)
    with pytest.raises(SpecError, match="same forbidden gap"):
        susy.validate_spec(susy.SusySpec(2, (4.75, 9.4)), p31, lat95)
    with pytest.raises(SpecError, match="differ"):
        susy.validate_spec(susy.SusySpec(2, (9.4, 9.4)), p31, lat95)
    with pytest.raises(SpecError, match="below E0"):
        susy.validate_spec(susy.SusySpec(1, (5.0,)), p31, lat95)
    with pytest.raises(SpecError, match="band edge"):
        susy.validate_spec(susy.SusySpec(1, (susy.band_edges_31(0.95).edges[0],)), p31, lat95)
    with pytest.raises(SpecError):
        susy.SusySpec(3, (1.0, 2.0, 3.0))
    with pytest.raises(SpecError):
        susy.SusySpec(1, (1.0,), signs=(2,))


def test_node_detected_with_location(p31, lat95):
    with pytest.raises(NodeError) as info:
        susy.susy1_defect(p31, 4.75, -1.0, lat95)
    assert abs(info.value.location) < 1e-6     # psi+ - psi- vanishes at x = 0 by parity


def test_order1_general_params_use_scan(lat50):
    p = ModelParams(2, 1, 0.5)
    P = susy.susy1_periodic(p, -0.5, 1, lat50)
    x = np.linspace(-4 * lat50.K, 4 * lat50.K, 201)
    assert np.max(np.abs(P.evaluate(x) - susy.oracle_partner(P, x))) < 1e-7


def test_log_u_second_derivative_identity(figs, p31, lat95):
    seed = figs["fig1"].seeds[0]
    x = np.linspace(-8, 8, 161)
    assert np.allclose(susy.log_u_second_derivative_31(x, seed, p31, lat95), seed.d2log_u(x),
                       atol=1e-11)


@pytest.mark.parametrize("name,tol", [("fig1", 1e-7), ("fig2", 1e-7), ("fig3", 1e-6), ("fig4", 1e-6)])
def test_partner_matches_wronskian_oracle(figs, lat95, name, tol):
    P = figs[name]
    x = np.linspace(-4 * lat95.K, 4 * lat95.K, 801)
    assert np.max(np.abs(P.evaluate(x) - susy.oracle_partner(P, x))) < tol


def test_periodic_partners_are_periodic(figs, lat95):
    x = np.linspace(-6 * lat95.K, 6 * lat95.K, 601)
    for name in ("fig1", "fig3"):
        P = figs[name]
        assert np.max(np.abs(P.evaluate(x + 2 * lat95.K) - P.evaluate(x))) < 1e-8


def test_displayed_second_order_formula(figs, lat95, p31):
    # the sn^2 / (ln g)'' form agrees with the pole-free evaluation
    P = figs["fig3"]
    x = np.linspace(-4 * lat95.K, 4 * lat95.K, 801)
    s1, s2 = P.seeds
    diff = np.abs(np.real(susy.susy2_formula(x, s1, s2, p31, lat95)) - P.evaluate(x))
    assert np.median(diff) < 1e-11
    assert np.max(diff) < 1e-7


def test_displayed_defect_formula(figs, lat95, p31):
    P = figs["fig4"]
    x = np.linspace(-4 * lat95.K, 4 * lat95.K, 801)
    s1, s2 = P.seeds
    val = susy.susy2_formula(x, s1, s2, p31, lat95) - 2 * susy._defect_term_2(x, s1, s2)
    diff = np.abs(np.real(val) - P.evaluate(x))
    assert np.median(diff) < 1e-10


def test_defect_reduces_to_periodic(p31, lat95):
    x = np.linspace(-8, 8, 161)
    a = susy.susy1_defect(p31, 4.75, 0.0, lat95)
    b = susy.susy1_periodic(p31, 4.75, 1, lat95)
    assert a.periodic and a.defect_window is None
    assert np.array_equal(a.evaluate(x), b.evaluate(x))
    c = susy.susy2_defect(p31, 9.4, 9.5, 0.0, 0.0, lat95)
    d = susy.susy2_periodic(p31, 9.4, 9.5, lat95)
    assert np.array_equal(c.evaluate(x), d.evaluate(x))


def test_sign_minus_is_b_reflection(p31, lat95):
    plus = susy.susy1_periodic(p31, 4.75, 1, lat95)
    minus = susy.susy1_periodic(p31, 4.75, -1, lat95)
    x = np.linspace(-8, 8, 161)
    # psi-(x) = psi+(-x), so the two partners are mirror images
    assert np.allclose(minus.evaluate(x), plus.evaluate(-x), atol=1e-10)
    seed = plus.seeds[0]
    flipped = susy.Seed(seed.pair, -1)
    assert np.allclose(susy.susy1_formula(x, flipped, p31, lat95), minus.evaluate(x), atol=1e-12)


def test_defect_windows(figs, lat95):
    T = 2 * lat95.K
    for name in ("fig2", "fig4"):
        P = figs[name]
        a, b = P.defect_window
        assert a < 0 < b
        xo = np.concatenate([np.linspace(b, b + 4 * T, 400), np.linspace(a - 4 * T, a, 400)])
        assert np.max(np.abs(P.evaluate(xo) - P.periodic_reference(xo))) < 1e-6
        mid = np.linspace(a, b, 400)
        assert np.max(np.abs(P.evaluate(mid) - P.periodic_reference(mid))) > 1e-6
    # fig2 is even: u = psi+ + psi- and psi-(x) = psi+(-x)
    a, b = figs["fig2"].defect_window
    assert a == pytest.approx(-b, abs=1e-9)


def test_partners_finite_on_dense_grid(figs, lat95):
    x = np.linspace(-6 * lat95.K, 6 * lat95.K, 6001)
    for P in figs.values():
        assert np.all(np.isfinite(P.evaluate(x)))


@pytest.mark.parametrize("name,tol", [("fig1", 1e-6), ("fig2", 1e-6), ("fig3", 1e-5), ("fig4", 1e-5)])
def test_intertwining(figs, lat95, name, tol):
    for E in (12.0, 7.0):
        assert susy.intertwine_check(figs[name], E, lat95)["residual"] < tol
    assert max(susy.seed_annihilation(figs[name], np.linspace(-8, 8, 161))) < 1e-8


def test_intertwining_rejects_factorisation_energy(figs, lat95):
    with pytest.raises(SpecError):
        susy.intertwine_check(figs["fig1"], 4.75, lat95)


def test_spectrum_transport(figs, lat95):
    T = 2 * lat95.K
    x = np.linspace(-6 * T, 6 * T, 3001)
    for P in figs.values():
        band = np.abs(susy.intertwine_check(P, 12.0, lat95, x=x)["Bpsi"])
        one = np.abs(band[np.abs(x) <= T / 2])
        assert np.max(band) < 50 * np.max(one)
        gap = np.abs(susy.intertwine_check(P, 7.0, lat95, x=x)["Bpsi"])
        near = np.max(gap[np.abs(x) <= T / 2])
        assert max(gap[0], gap[-1]) > 1e6 * near


def test_bound_states(figs, lat95):
    T = 2 * lat95.K
    x = np.linspace(-3 * T, 3 * T, 601)
    for name, energies in (("fig2", [4.75]), ("fig4", [9.4, 9.5])):
        P = figs[name]
        states = susy.bound_states(P)
        assert [E for E, _ in states] == energies == P.bound_state_energies
        for E, state in states:
            inc = susy.tail_increments(state, T)
            assert np.all(np.diff(inc) >= 0)
            assert abs(inc[-1] - inc[-2]) < 1e-8 * inc[-1]
            assert susy.bound_state_residual(P, state, E, x) < 1e-6


def test_periodic_partner_has_no_bound_state(figs):
    assert figs["fig1"].bound_state_energies == []
    assert figs["fig3"].bound_state_energies == []


def test_seed_kinds(figs):
    assert figs["fig1"].spec.seed_kinds == ("bloch-plus",)
    assert figs["fig4"].spec.seed_kinds == ("combination", "combination")
    assert susy.SusySpec(1, (1.0,), signs=(-1,)).seed_kinds == ("bloch-minus",)
