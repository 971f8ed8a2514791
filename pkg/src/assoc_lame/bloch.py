"""Bloch solutions of the associated Lame equation and an independent
period-map (Hill discriminant) oracle.

    V(x) = m(m+1) k^2 sn^2 x + ell(ell+1) k^2 cn^2 x / dn^2 x
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar
from scipy.special import ellipj

from .elliptic import LatticeData, jacobi, log_wsigma, wp, wp_and_prime, wzeta
from .errors import DegenerateEnergyError, DomainError, NumericError
from .frobenius import FrobeniusSolution, ModelParams, solve as solve_frobenius


def potential(x, p):
    """Associated Lame potential at real x (scalar or array)."""
    s, c, d = jacobi(np.asarray(x, dtype=float), p.k2)
    k2 = p.k2
    val = p.m * (p.m + 1) * k2 * s * s + p.ell * (p.ell + 1) * k2 * c * c / (d * d)
    val = np.real(val)
    return float(val) if np.ndim(x) == 0 else val


def _potential_scipy(x, p):
    # independent of the theta-series kernel; used by the period-map oracle
    s, c, d, _ = ellipj(x, p.k2)
    return p.m * (p.m + 1) * p.k2 * s * s + p.ell * (p.ell + 1) * p.k2 * c * c / (d * d)


def period(p, lat):
    return p.period_factor * lat.K


def product_solution(z, sol, p, lat):
    """Psi(z) = scale * prod_r (wp(z) - c_r) / (wp(z) - e1)^ell, with Psi'(b_r) = 1."""
    w = wp(z, lat)
    num = 1.0
    for cr in sol.c:
        num = num * (w - cr)
    return sol.scale * num / (w - lat.e1) ** p.ell


def product_solution_derivs(z, sol, p, lat):
    """(Psi, Psi', Psi'') in z, by the chain rule through wp."""
    w, dw = wp_and_prime(z, lat)
    d2w = 6.0 * w * w - lat.g2 / 2.0
    # R(w) = prod (w - c_r) / (w - e1)^ell, differentiated in w
    logs1 = sum(1.0 / (w - cr) for cr in sol.c) - p.ell / (w - lat.e1)
    logs2 = -sum(1.0 / (w - cr) ** 2 for cr in sol.c) + p.ell / (w - lat.e1) ** 2
    R = product_solution(z, sol, p, lat)
    R1 = R * logs1
    R2 = R * (logs1 * logs1 + logs2)
    return R, R1 * dw, R2 * dw * dw + R1 * d2w


class BlochPair:
    """The two Bloch solutions psi+ and psi- at energy E.

    Both are scaled so that psi+(0) = psi-(0) = 1.  The potential is even,
    so this gives psi-(x) = psi+(-x); for energies inside a gap both are
    real, inside a band they are complex conjugates.
    """

    def __init__(self, p, E, lat, sol=None):
        if np.iscomplexobj(E) and np.imag(E) != 0:
            raise DomainError("bloch_pair needs a real energy")
        self.params = p
        self.E = float(np.real(E))
        self.lat = lat
        self.sol = sol if sol is not None else solve_frobenius(p, self.E, lat)
        self._s = math.sqrt(lat.ebar3)
        self._log_norm = {+1: 0.0, -1: 0.0}
        self._log_norm = {s: self._log_raw(np.array([0.0]), s)[0] for s in (+1, -1)}

    # ---------------------------------------------------------- evaluation
    def z_of_x(self, x):
        return (np.asarray(x, dtype=float) - 1j * self.lat.Kprime) / self._s

    def _log_raw(self, x, sign):
        p, lat, b = self.params, self.lat, self.sol.b
        z = self.z_of_x(x)
        acc = -p.m * log_wsigma(z, lat) - p.ell * log_wsigma(z + lat.omega1, lat)
        for br in b:
            acc = acc + log_wsigma(z + sign * br, lat)
        rate = p.ell * lat.eta1 - sign * np.sum(wzeta(b, lat))
        return acc + np.asarray(x, dtype=float) / self._s * rate

    def log_psi(self, x, sign=+1):
        """log psi_sign(x); only exp() of the result is meaningful."""
        return self._log_raw(x, sign) - self._log_norm[sign]

    def psi(self, x, sign=+1):
        return np.exp(self.log_psi(x, sign))

    def dlog_psi(self, x, sign=+1):
        """(ln psi)' in x, closed form through zeta."""
        p, lat, b = self.params, self.lat, self.sol.b
        z = self.z_of_x(x)
        acc = -p.m * wzeta(z, lat) - p.ell * wzeta(z + lat.omega1, lat)
        for br in b:
            acc = acc + wzeta(z + sign * br, lat)
        acc = acc + p.ell * lat.eta1 - sign * np.sum(wzeta(b, lat))
        return acc / self._s

    def d2log_psi(self, x, sign=+1):
        """(ln psi)'' in x, closed form through wp."""
        p, lat, b = self.params, self.lat, self.sol.b
        z = self.z_of_x(x)
        acc = p.m * wp(z, lat) + p.ell * wp(z + lat.omega1, lat)
        for br in b:
            acc = acc - wp(z + sign * br, lat)
        return acc / lat.ebar3

    def dpsi(self, x, sign=+1):
        return self.psi(x, sign) * self.dlog_psi(x, sign)

    def wronskian(self, x):
        """W(psi+, psi-) = psi+ psi-' - psi+' psi-."""
        pp = self.psi(x, +1)
        pm = self.psi(x, -1)
        return pp * pm * (self.dlog_psi(x, -1) - self.dlog_psi(x, +1))

    # ---------------------------------------------------------- Floquet data
    @cached_property
    def multiplier_2K(self):
        """psi+(x + 2K) / psi+(x), from the sigma quasi-periodicity."""
        lat, b = self.lat, self.sol.b
        expo = 2.0 * np.sum(lat.eta1 * b - lat.omega1 * wzeta(b, lat))
        return complex(np.exp(expo))

    @cached_property
    def multiplier(self):
        """psi+(x + T) / psi+(x) over the minimal period T of the potential."""
        if self.params.period_factor == 2:
            return self.multiplier_2K
        T = self.lat.K
        xs = np.linspace(0.1, 0.9, 5) * T
        vals = self.log_psi(xs + T) - self.log_psi(xs)
        pick = int(np.argmax(np.real(self.log_psi(xs))))
        return complex(np.exp(vals[pick]))

    @property
    def floquet_exponent(self):
        return complex(np.log(self.multiplier))


def bloch_pair(p, E, lat):
    return BlochPair(p, E, lat)


# -------------------------------------------------------------- residuals


def fd_second_derivative(f, x, h=1e-3):
    """Five-point central second derivative of a callable at points x."""
    x = np.asarray(x, dtype=float)
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def schrodinger_residual(pair, x, sign=+1, h=1e-3):
    """max |-psi'' + (V - E) psi| / max |psi| on the points x."""
    f = lambda t: pair.psi(t, sign)
    psi = f(x)
    res = -fd_second_derivative(f, x, h) + (potential(x, pair.params) - pair.E) * psi
    return float(np.max(np.abs(res)) / np.max(np.abs(psi)))


# -------------------------------------------------------------- period map


def monodromy(p, E, lat, rtol=1e-12, atol=1e-13):
    """One-period transfer matrices for an array of energies, shape (n, 2, 2)."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    n = E.size
    T = period(p, lat)

    def rhs(x, y):
        y = y.reshape(n, 4)
        q = _potential_scipy(x, p) - E
        return np.column_stack([y[:, 1], q * y[:, 0], y[:, 3], q * y[:, 2]]).ravel()

    y0 = np.tile([1.0, 0.0, 0.0, 1.0], n)
    out = solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=rtol, atol=atol)
    if not out.success:
        raise NumericError(f"period-map integration failed: {out.message}")
    y = out.y[:, -1].reshape(n, 4)
    M = np.empty((n, 2, 2))
    M[:, 0, 0], M[:, 1, 0] = y[:, 0], y[:, 1]
    M[:, 0, 1], M[:, 1, 1] = y[:, 2], y[:, 3]
    return M


def hill_discriminant(p, E, lat):
    """Trace of the one-period transfer matrix; |D| <= 2 inside allowed bands."""
    M = monodromy(p, E, lat)
    D = M[:, 0, 0] + M[:, 1, 1]
    return float(D[0]) if np.ndim(E) == 0 else D


def floquet_multipliers(p, E, lat):
    """Both eigenvalues of the transfer matrix at one energy.

    The determinant is exactly 1 (no first-derivative term), so the pair is
    the roots of mu^2 - D mu + 1.  The larger root is taken from the stable
    quadratic formula and the smaller as its reciprocal; deep in a gap the
    small eigenvalue of the raw matrix would only be accurate to
    eps * |large|.
    """
    D = complex(hill_discriminant(p, E, lat))
    root = np.sqrt(D * D - 4.0)
    big = 0.5 * (D + root) if abs(D + root) >= abs(D - root) else 0.5 * (D - root)
    return np.array([big, 1.0 / big])


def scan_band_edges(p, lat, emin=None, emax=None, step=0.02, xtol=1e-12):
    """Band edges from sign changes of |D| - 2, refined by Brent's method.

    Returns (edges, scanned_range).  Closed gaps, where D only touches +-2,
    are not reported.
    """
    xs = np.linspace(0.0, period(p, lat), 401)
    V = _potential_scipy(xs, p)
    if emin is None:
        emin = float(V.min()) - 0.5
    if emax is None:
        emax = float(V.max()) + 2.0
    Es = np.arange(emin, emax + step, step)
    D = hill_discriminant(p, Es, lat)
    edges = []
    for target in (2.0, -2.0):
        side = np.sign(D - target)
        for i in np.nonzero(side[:-1] * side[1:] <= 0)[0]:
            # widen by one cell: an edge sitting on a grid node may flip sign
            # between the batched and the single-energy integration
            lo, hi = Es[max(i - 1, 0)], Es[min(i + 2, len(Es) - 1)]
            f = lambda e, t=target: hill_discriminant(p, e, lat) - t
            flo, fhi = f(lo), f(hi)
            if flo * fhi > 0:
                continue
            root = lo if flo == 0 else hi if fhi == 0 else brentq(
                f, lo, hi, xtol=xtol, rtol=1e-15)
            if all(abs(root - e) > 1e-8 for e in edges):
                edges.append(root)
    # gaps narrower than the step: D peaks just past +-2 inside one cell
    for i in range(1, len(Es) - 1):
        for sgn in (1.0, -1.0):
            d0, dl, dr = sgn * D[i], sgn * D[i - 1], sgn * D[i + 1]
            if not (d0 >= dl and d0 >= dr and 2.0 - 0.05 < d0 <= 2.0 + 1e-9):
                continue
            g = lambda e: -sgn * hill_discriminant(p, e, lat)
            peak = minimize_scalar(g, bracket=(Es[i - 1], Es[i], Es[i + 1]),
                                   tol=1e-12)
            if -peak.fun <= 2.0 + 1e-9 or not (Es[i - 1] < peak.x < Es[i + 1]):
                continue
            f = lambda e: sgn * hill_discriminant(p, e, lat) - 2.0
            for lo, hi in ((Es[i - 1], peak.x), (peak.x, Es[i + 1])):
                root = brentq(f, lo, hi, xtol=xtol, rtol=1e-15)
                if all(abs(root - e) > 1e-8 for e in edges):
                    edges.append(root)
    return sorted(edges), (emin, emax)


def lowest_edge(p, lat, xtol=1e-12):
    """E0: the bottom of the spectrum, found by bracketing D = 2 from below."""
    xs = np.linspace(0.0, period(p, lat), 401)
    lo = float(_potential_scipy(xs, p).min()) - 1e-3
    hi = float(_potential_scipy(xs, p).max())
    # D > 2 strictly below E0; first downward crossing of 2 is E0
    Es = np.linspace(lo, hi, 200)
    D = hill_discriminant(p, Es, lat)
    idx = np.nonzero(D <= 2.0)[0]
    if len(idx) == 0 or idx[0] == 0:
        raise NumericError("could not bracket the lowest band edge")
    i = idx[0]
    return brentq(lambda e: hill_discriminant(p, e, lat) - 2.0, Es[i - 1], Es[i],
                  xtol=xtol, rtol=1e-15)
