"""Self-check suites shared by the ``verify`` command.

Every check reports the worst deviation it measured, the tolerance it was
held to, and whether it passed.  Random samples use fixed seeds so reports
are reproducible.
"""
from dataclasses import asdict, dataclass
import math
import time

import numpy as np

from .bloch import BlochPair, floquet_multipliers, hill_discriminant, period, potential, schrodinger_residual
from .elliptic import (
    complete_K,
    jacobi,
    lattice_from_modulus,
    log_wsigma,
    wp,
    wp_and_prime,
    wp_lattice_sum,
    wsigma,
    wzeta,
)
from .frobenius import ModelParams, coefficients, det_F, f_triplet, psi_prime_values, recurrence_residuals, shift_energy, solve
from . import susy

SUITES = ("elliptic", "frobenius", "bloch", "susy")
MODULI = (0.05, 0.5, 0.95)


@dataclass
class Check:
    suite: str
    name: str
    worst: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.worst) and self.worst < self.tol)

    def as_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def rel(a, b):
    """|a - b| scaled by max(|a|, |b|, 1), elementwise."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)


def cauchy_derivative(f, z, r, order=1, n=64):
    """order-th derivative of an analytic f by the trapezoid rule on a circle."""
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = z[:, None] + r * np.exp(1j * theta)[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    coef = np.mean(vals * np.exp(-1j * order * theta)[None, :], axis=1)
    return coef * math.factorial(order) / r**order


# -------------------------------------------------------------- elliptic


def _cell_points(lat, rng, n, margin=0.1):
    a = rng.uniform(margin, 1.0 - margin, n)
    b = rng.uniform(margin, 1.0 - margin, n)
    return 2.0 * a * lat.omega1 + 2.0 * b * lat.omega3


def elliptic_checks(npts=100, moduli=MODULI, seed=0):
    rng = np.random.default_rng(seed)
    worst = {}

    def put(name, val, tol=1e-10):
        worst[name] = (max(worst.get(name, (0.0, tol))[0], float(np.max(val))), tol)

    for k2 in moduli:
        lat = lattice_from_modulus(k2)
        K, Kp = lat.K, lat.Kprime
        k = math.sqrt(k2)
        kp = math.sqrt(1.0 - k2)
        u = rng.uniform(-2 * K, 2 * K, npts) + 1j * rng.uniform(-0.8 * Kp, 0.8 * Kp, npts)
        s, c, d = jacobi(u, k2)
        put("sn^2 + cn^2 = 1", rel(s * s + c * c, 1.0))
        put("dn^2 + k^2 sn^2 = 1", rel(d * d + k2 * s * s, 1.0))
        s1, c1, d1 = jacobi(u + K, k2)
        put("shift +K", np.max([rel(s1, c / d), rel(c1, -kp * s / d), rel(d1, kp / d)], axis=0))
        s2, c2, d2 = jacobi(u + 2 * K, k2)
        put("shift +2K", np.max([rel(s2, -s), rel(c2, -c), rel(d2, d)], axis=0))
        # keep sn(u) away from zero so the +iK' images stay finite
        v = rng.uniform(0.1 * K, 1.9 * K, npts) + 1j * rng.uniform(-0.4 * Kp, 0.4 * Kp, npts)
        s, c, d = jacobi(v, k2)
        s3, c3, d3 = jacobi(v + 1j * Kp, k2)
        put("shift +iK'", np.max([rel(s3, 1 / (k * s)), rel(c3, -1j * d / (k * s)),
                                  rel(d3, -1j * c / s)], axis=0))
        # Jacobi derivatives (Cauchy integrals are independent of the closed forms)
        r = 0.05 * min(K, Kp)
        ds = cauchy_derivative(lambda t: jacobi(t, k2)[0], u, r)
        s, c, d = jacobi(u, k2)
        put("sn' = cn dn", rel(ds, c * d))

        z = _cell_points(lat, rng, npts)
        p, dp = wp_and_prime(z, lat)
        put("wp'^2 = 4 prod (wp - e_i)",
            rel(dp * dp, 4 * (p - lat.e1) * (p - lat.e2) * (p - lat.e3)))
        r = 0.02 * min(abs(lat.omega1), abs(lat.omega3))
        d2p = cauchy_derivative(lambda t: wp_and_prime(t, lat)[1], z, r)
        put("wp'' = 6 wp^2 - g2/2", rel(d2p, 6 * p * p - lat.g2 / 2))
        d3p = cauchy_derivative(lambda t: wp_and_prime(t, lat)[1], z, r, order=2)
        put("wp''' = 12 wp wp'", rel(d3p, 12 * p * dp))
        dz = cauchy_derivative(lambda t: wzeta(t, lat), z, r)
        put("zeta' = -wp", rel(dz, -p))
        dls = cauchy_derivative(lambda t: wsigma(t, lat), z, r)
        put("sigma'/sigma = zeta", rel(dls / wsigma(z, lat), wzeta(z, lat)))
        put("wp(-z) = wp(z)", rel(wp(-z, lat), p))
        put("zeta(-z) = -zeta(z)", rel(wzeta(-z, lat), -wzeta(z, lat)))
        put("sigma(-z) = -sigma(z)", rel(wsigma(-z, lat), -wsigma(z, lat)))
        for i in (1, 2, 3):
            w = lat.half_period(i)
            eta = lat.eta(i)
            put("zeta quasi-periodicity", rel(wzeta(z + 2 * w, lat), wzeta(z, lat) + 2 * eta))
            lhs = log_wsigma(z + 2 * w, lat) - log_wsigma(z, lat)
            ratio = np.exp(lhs) / (-np.exp(2 * eta * (z + w)))
            put("sigma quasi-periodicity", rel(ratio, 1.0))
            put("wp double periodicity", rel(wp(z + 2 * w, lat), p))
            put("wp(omega_i) = e_i", rel(wp(w, lat), (lat.e1, lat.e2, lat.e3)[i - 1]))
        put("Legendre relation", rel(lat.eta1 * lat.omega3 - lat.eta3 * lat.omega1, 0.5j * math.pi))

        y = _cell_points(lat, rng, npts)
        py, dpy = wp_and_prime(y, lat)
        ok = np.abs(p - py) > 1e-3
        put("zeta addition", rel(wzeta(z[ok] + y[ok], lat),
                                 wzeta(z[ok], lat) + wzeta(y[ok], lat)
                                 + 0.5 * (dp[ok] - dpy[ok]) / (p[ok] - py[ok])))
        lhs = log_wsigma(z + y, lat) + log_wsigma(z - y, lat)
        rhs = 2 * log_wsigma(z, lat) + 2 * log_wsigma(y, lat)
        put("sigma addition", rel(np.exp(lhs - rhs), -(p - py)))

        uz = u
        s = jacobi(uz, k2)[0]
        c = jacobi(uz, k2)[1]
        d = jacobi(uz, k2)[2]
        pw = wp(uz / math.sqrt(lat.ebar3), lat)
        put("wp bridge: e3 + ebar3 / sn^2", rel(pw, lat.e3 + lat.ebar3 / (s * s)))
        put("wp bridge: e1 + ebar3 cn^2 / sn^2", rel(pw, lat.e1 + lat.ebar3 * c * c / (s * s)))
        put("wp bridge: e2 + ebar3 dn^2 / sn^2", rel(pw, lat.e2 + lat.ebar3 * d * d / (s * s)))

        zz = z[:20]
        put("wp against lattice sum", rel(wp(zz, lat), [wp_lattice_sum(t, lat) for t in zz]))
        put("lattice invariants", np.array([
            abs(lat.e1 + lat.e2 + lat.e3),
            0.0 if lat.e1 > lat.e2 > lat.e3 else 1.0,
            0.0 if lat.g2**3 - 27 * lat.g3**2 > 0 else 1.0,
            abs(k2 - (lat.e2 - lat.e3) / (lat.e1 - lat.e3)),
            abs(lat.omega2 - lat.omega1 - lat.omega3),
        ]))
        put("K(k) = K'(k')", rel(complete_K(k2), lattice_from_modulus(1 - k2).Kprime))
    return [Check("elliptic", name, w, tol) for name, (w, tol) in worst.items()]


# -------------------------------------------------------------- frobenius

PAIRS = ((1, 1), (2, 1), (3, 1), (2, 2), (3, 2))


def _abs_F(r, p, Et, lat):
    """Same recurrence with absolute values: the natural size of F_r."""
    prev, cur = 1.0, abs(f_triplet(0, p, Et, lat)[1])
    for j in range(2, r + 1):
        prev, cur = cur, (abs(f_triplet(j - 1, p, Et, lat)[1]) * cur
                          + abs(f_triplet(j - 1, p, Et, lat)[0] * f_triplet(j - 2, p, Et, lat)[2]) * prev)
    return cur


def frobenius_checks(nE=20, k2=0.95, seed=1):
    rng = np.random.default_rng(seed)
    lat = lattice_from_modulus(k2)
    det_w = sym_w = rec_w = psi_w = 0.0
    for m, l in PAIRS:
        p = ModelParams(m, l, k2)
        for E in rng.uniform(-5.0, 30.0, nE):
            Et = shift_energy(E, p, lat)
            F = det_F(2 * l + 1, p, Et, lat)
            det_w = max(det_w, abs(F) / _abs_F(2 * l + 1, p, Et, lat))
            for nu in range(1, 6):
                a = f_triplet(2 * l - nu, p, Et, lat)
                b = f_triplet(nu + 1, p, Et, lat)
                c = f_triplet(nu, p, Et, lat)
                e = f_triplet(2 * l - nu - 1, p, Et, lat)
                scale = max(1.0, abs(b[0]), abs(c[1]), abs(c[2]))
                sym_w = max(sym_w, abs(a[0] + b[0]) / scale, abs(a[1] + c[1]) / scale,
                            abs(e[2] + c[2]) / scale)
            rec_w = max(rec_w, float(np.max(recurrence_residuals(coefficients(p, E, lat), lat))))
        for E in rng.uniform(-2.0, 25.0, 3):
            try:
                sol = solve(p, E, lat)
            except Exception:
                continue
            vals = psi_prime_values(sol.b, sol.c, p, lat)
            psi_w = max(psi_w, float(np.max(np.abs(vals - vals[0]) / abs(vals[0]))))
    return [Check("frobenius", "F_{2l+1} vanishes", det_w, 1e-10),
            Check("frobenius", "f0/f1/f2 reflection symmetries", sym_w, 1e-12),
            Check("frobenius", "recurrence and truncation residuals", rec_w, 1e-10),
            Check("frobenius", "common Psi'(b_r)", psi_w, 1e-8)]


# -------------------------------------------------------------- bloch

BLOCH_PAIRS = ((1, 0), (2, 0), (1, 1), (2, 1), (3, 1), (2, 2))


def sample_energies(p, lat, nband=3, ngap=2):
    """Band and gap energies picked from a coarse discriminant scan, away from edges."""
    xs = np.linspace(0.0, period(p, lat), 201)
    V = potential(xs, p)
    Es = np.linspace(V.min() - 2.0, V.max() + 4.0, 240)
    D = hill_discriminant(p, Es, lat)
    band = Es[np.abs(D) < 1.8]
    gap = Es[np.abs(D) > 2.3]
    pick = lambda arr, n: arr[np.linspace(0, len(arr) - 1, n).round().astype(int)] if len(arr) else arr
    return list(pick(band, nband)), list(pick(gap, ngap))


def bloch_point(p, E, lat):
    """All per-energy measurements used by the bloch suite."""
    pair = BlochPair(p, E, lat)
    T = period(p, lat)
    x = np.linspace(0.0, T, 401)
    res = max(schrodinger_residual(pair, x, s) for s in (+1, -1))
    xw = np.linspace(-4 * lat.K, 4 * lat.K, 401)
    W = pair.wronskian(xw)
    wvar = float(np.max(np.abs(W - W[0])) / abs(W[0]))
    mu = pair.multiplier
    ev = floquet_multipliers(p, E, lat)
    mul = float(np.min(np.abs(ev - mu)) / abs(mu))
    vals = psi_prime_values(pair.sol.b, pair.sol.c, p, lat)
    spread = float(np.max(np.abs(vals - vals[0])) / abs(vals[0]))
    return {"residual": res, "wronskian": wvar, "multiplier": mul, "psi_prime": spread}


def bloch_checks(k2=0.5):
    lat = lattice_from_modulus(k2)
    worst = {"residual": 0.0, "wronskian": 0.0, "multiplier": 0.0, "psi_prime": 0.0}
    for m, l in BLOCH_PAIRS:
        p = ModelParams(m, l, k2)
        band, gap = sample_energies(p, lat)
        for E in band + gap:
            for key, val in bloch_point(p, E, lat).items():
                worst[key] = max(worst[key], val)
    return [Check("bloch", "Schrodinger residual", worst["residual"], 1e-6),
            Check("bloch", "Wronskian constancy", worst["wronskian"], 1e-8),
            Check("bloch", "multiplier vs period map", worst["multiplier"], 1e-6),
            Check("bloch", "common Psi'(b_r)", worst["psi_prime"], 1e-8)]


# -------------------------------------------------------------- susy

FIGURES = {
    "fig1": dict(order=1, energies=(4.75,), weights=(0.0,)),
    "fig2": dict(order=1, energies=(4.75,), weights=(1.0,)),
    "fig3": dict(order=2, energies=(9.4, 9.5), weights=(0.0, 0.0)),
    "fig4": dict(order=2, energies=(9.4, 9.5), weights=(1.0, -2.0)),
}
FIGURE_PARAMS = (3, 1, 0.95)


def figure_partner(name, lat=None):
    m, l, k2 = FIGURE_PARAMS
    p = ModelParams(m, l, k2)
    lat = lat if lat is not None else lattice_from_modulus(k2)
    cfg = FIGURES[name]
    spec = susy.SusySpec(cfg["order"], cfg["energies"], weights=cfg["weights"])
    return susy.build_partner(p, spec, lat)


def susy_checks():
    m, l, k2 = FIGURE_PARAMS
    lat = lattice_from_modulus(k2)
    out = []
    x = np.linspace(-4 * lat.K, 4 * lat.K, 801)
    T = 2 * lat.K
    for name in FIGURES:
        P = figure_partner(name, lat)
        tol = 1e-7 if P.spec.order == 1 else 1e-6
        out.append(Check("susy", f"{name}: partner vs V - 2 (ln W)''",
                         float(np.max(np.abs(P.evaluate(x) - susy.oracle_partner(P, x)))), tol))
        if P.periodic:
            out.append(Check("susy", f"{name}: period 2K",
                             float(np.max(np.abs(P.evaluate(x + T) - P.evaluate(x)))), 1e-8))
        else:
            a, b = P.defect_window
            xo = np.concatenate([np.linspace(b, b + 3 * T, 300), np.linspace(a - 3 * T, a, 300)])
            out.append(Check("susy", f"{name}: approach to periodic outside defect window",
                             float(np.max(np.abs(P.evaluate(xo) - P.periodic_reference(xo)))), 1e-6))
        itol = 1e-6 if P.spec.order == 1 else 1e-5
        for E in (12.0, 7.0):
            out.append(Check("susy", f"{name}: intertwining at E = {E:g}",
                             susy.intertwine_check(P, E, lat)["residual"], itol))
        out.append(Check("susy", f"{name}: seeds annihilated",
                         max(susy.seed_annihilation(P, x)), 1e-8))
        if not P.periodic:
            for E, state in susy.bound_states(P):
                inc = susy.tail_increments(state, T)
                out.append(Check("susy", f"{name}: bound state at {E:g} square-integrable",
                                 float(abs(inc[-1] - inc[-2]) / inc[-1]), 1e-8))
                out.append(Check("susy", f"{name}: bound state at {E:g} residual",
                                 susy.bound_state_residual(P, state, E, x), 1e-6))
    return out


RUNNERS = {"elliptic": elliptic_checks, "frobenius": frobenius_checks,
           "bloch": bloch_checks, "susy": susy_checks}


def run(suite="all"):
    names = SUITES if suite == "all" else (suite,)
    checks = []
    timings = {}
    for name in names:
        t0 = time.perf_counter()
        checks.extend(RUNNERS[name]())
        timings[name] = time.perf_counter() - t0
    return checks, timings
