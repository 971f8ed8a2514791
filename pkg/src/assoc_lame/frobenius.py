"""Terminating Frobenius solution of the product-solution equation.

With y = (e1 - wp(z)) / ebar2 and Phi = (wp - e1)^ell * Psi, the product of
two independent solutions satisfies a Fuchsian third-order equation whose
exponent-zero series terminates at degree N = m + ell.  This module builds
the coefficients a_r, the roots c_r of the resulting polynomial in wp, and
the points b_r with wp(b_r) = c_r, fixing the sign of every b_r so that
Psi'(b_r) takes a common value.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np
from numpy.polynomial import polynomial as P

from .elliptic import LatticeData, inverse_wp, reduce_to_cell, wp_and_prime
from .errors import ConsistencyError, DegenerateEnergyError, DomainError, NumericError


@dataclass(frozen=True)
class ModelParams:
    m: int
    ell: int
    k2: float

    def __post_init__(self):
        for name in ("m", "ell"):
            val = getattr(self, name)
            if isinstance(val, bool) or int(val) != val:
                raise DomainError(f"{name} must be an integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        if not (self.m >= self.ell >= 0):
            raise DomainError(f"need m >= ell >= 0, got (m, ell) = ({self.m}, {self.ell})")
        if self.m < 1:
            raise DomainError("m = 0 gives the free particle; need m >= 1")
        k2 = float(self.k2)
        if not (0.0 < k2 < 1.0):
            raise DomainError(f"modulus k^2 must lie in (0, 1), got {k2!r}")
        object.__setattr__(self, "k2", k2)

    @property
    def N(self):
        return self.m + self.ell

    @property
    def period_factor(self):
        """Minimal period of the potential in units of K."""
        return 1 if self.m == self.ell else 2


@dataclass(frozen=True)
class FrobeniusSolution:
    params: ModelParams
    E: complex
    Etilde: complex
    a: np.ndarray
    c: np.ndarray = None
    multiplicity: np.ndarray = None
    b: np.ndarray = None
    signs: np.ndarray = None
    psi_prime_at_b: complex = None
    scale: complex = None
    indicial_exponents: tuple = field(default=None)


def shift_energy(E, p, lat):
    """Energy in the Weierstrass form of the equation."""
    return lat.e3 * p.m * (p.m + 1) + (E - p.ell * (p.ell + 1)) * lat.ebar3


def f_triplet(rho, p, Etilde, lat):
    m, l = p.m, p.ell
    f0 = lat.ebar3 * rho * (rho - 1 - 2 * l) * (2 * rho - 2 * l - 1)
    f1 = 2 * (rho - l) * (lat.e1 * (m * (m + 1) - 3 * (rho - l) ** 2) - Etilde)
    f2 = lat.ebar2 * (rho - m - l) * (rho + m - l + 1) * (2 * rho + 1 - 2 * l)
    return f0, f1, f2


def _f(i, rho, p, Et, lat):
    return f_triplet(rho, p, Et, lat)[i]


def det_F(r, p, Etilde, lat):
    """Banded determinant F_r, via F_r = f1(r-1) F_{r-1} - f0(r-1) f2(r-2) F_{r-2}.

    The rows of F_r start at index r-1, so F_r is not a leading minor of
    F_{r+1}; each value is built by its own recurrence over the trailing
    blocks (which are the F_j themselves).
    """
    if r < 1:
        raise DomainError(f"F_r needs r >= 1, got {r}")
    prev, cur = 1.0, _f(1, 0, p, Etilde, lat)  # F_0, F_1
    for j in range(2, r + 1):
        prev, cur = cur, (_f(1, j - 1, p, Etilde, lat) * cur
                          - _f(0, j - 1, p, Etilde, lat) * _f(2, j - 2, p, Etilde, lat) * prev)
    return cur


def F_matrix(r, p, Etilde, lat):
    """Dense r x r matrix whose determinant is F_r (diagnostics and tests)."""
    M = np.zeros((r, r), dtype=complex)
    for i in range(r):
        M[i, i] = _f(1, r - 1 - i, p, Etilde, lat)
        if i + 1 < r:
            M[i, i + 1] = _f(2, r - 2 - i, p, Etilde, lat)
        if i >= 1:
            M[i, i - 1] = _f(0, r - i, p, Etilde, lat)
    return M


def minors_D(p, Etilde, lat):
    """Leading minors D_0..D_{m-ell} of F_{m+ell+1}."""
    top = p.N + 1
    nu = p.m - p.ell
    D = [1.0]
    if nu >= 1:
        D.append(_f(1, top - 1, p, Etilde, lat))
    for r in range(2, nu + 1):
        D.append(_f(1, top - r, p, Etilde, lat) * D[r - 1]
                 - _f(0, top - r + 1, p, Etilde, lat) * _f(2, top - r, p, Etilde, lat) * D[r - 2])
    return D


def coefficients(p, E, lat):
    """Coefficients a_0..a_{m+ell} of the terminating series, a_0 = 1."""
    Et = shift_energy(E, p, lat)
    l, N = p.ell, p.N
    nu = p.m - p.ell
    a = [1.0]
    prod_f0 = 1.0
    sign = 1.0
    for r in range(1, 2 * l + 1):
        prod_f0 *= _f(0, r, p, Et, lat)
        sign = -sign
        a.append(sign * det_F(r, p, Et, lat) / prod_f0)
    D = minors_D(p, Et, lat)
    scale = max(1.0, abs(D[-1]))
    if nu >= 1:
        # typical size of a product of nu entries; guards the division below
        typ = 1.0
        for r in range(1, nu + 1):
            typ *= max(abs(_f(1, N + 1 - r, p, Et, lat)), 1.0)
        scale = typ
    if abs(D[nu]) <= 1e-13 * scale:
        raise DegenerateEnergyError(
            f"minor D_{nu} vanishes at E = {E}: the terminating series is not unique")
    prod_f2 = 1.0
    for r in range(1, nu + 1):
        prod_f2 *= _f(2, 2 * l + r - 1, p, Et, lat)
        a.append((-1) ** r * D[nu - r] * prod_f2 / D[nu] * a[2 * l])
    a = np.array(a, dtype=complex if np.iscomplexobj(np.asarray(E)) else float)
    assert len(a) == N + 1
    return FrobeniusSolution(params=p, E=E, Etilde=Et, a=a,
                             indicial_exponents=(0.0, 2.0 * l + 1.0, l + 0.5))


def recurrence_residuals(sol, lat, extra=2):
    """Residuals of every recurrence row, including `extra` rows past truncation.

    Row n reads a_n f0(n) + a_{n-1} f1(n-1) + a_{n-2} f2(n-2) = 0, with a_r = 0
    outside 0..N.  Returned relative to the largest |a_r f_i| term.
    """
    p, Et = sol.params, sol.Etilde
    N = p.N
    a = list(sol.a) + [0.0] * (extra + 2)

    def coef(r):
        return a[r] if 0 <= r < len(a) else 0.0

    out = []
    for n in range(1, N + 1 + extra):
        terms = [coef(n) * _f(0, n, p, Et, lat),
                 coef(n - 1) * _f(1, n - 1, p, Et, lat),
                 coef(n - 2) * _f(2, n - 2, p, Et, lat)]
        scale = max(max(abs(t) for t in terms), 1e-300)
        out.append(abs(sum(terms)) / scale)
    return np.array(out)


def char_roots(sol, lat, cluster_tol=1e-7):
    """Roots c_r (in t = wp) of sum_r a_r ((e1 - t)/ebar2)^r.

    Companion-matrix eigenvalues, polished by Newton steps on the
    polynomial in y.  Roots that coincide within ``cluster_tol`` are
    reported through the multiplicity array.
    """
    a = np.asarray(sol.a, dtype=complex)
    N = len(a) - 1
    if a[-1] == 0:
        raise DegenerateEnergyError("leading coefficient vanishes")
    y = P.polyroots(a)
    da = P.polyder(a)
    for i in range(len(y)):
        yi = y[i]
        for _ in range(8):
            f = P.polyval(yi, a)
            d = P.polyval(yi, da)
            if d == 0:
                break
            step = f / d
            yi = yi - step
            if abs(step) <= 1e-16 * max(1.0, abs(yi)):
                break
        y[i] = yi
    for yi in y:
        scale = np.sum(np.abs(a) * np.abs(yi) ** np.arange(N + 1))
        if abs(P.polyval(yi, a)) > 1e-9 * scale:
            raise NumericError("polynomial root did not converge", last_iterate=yi)
    c = lat.e1 - lat.ebar2 * y
    c = np.array(sorted(c, key=lambda t: (round(t.real, 9), round(t.imag, 9))))
    mult = np.ones(N, dtype=int)
    for i in range(N):
        for j in range(N):
            if i != j and abs(c[i] - c[j]) <= cluster_tol * max(1.0, abs(c[i])):
                mult[i] += 1
    return c, mult


def psi_prime_values(b, c, p, lat):
    """Psi'(b_j) from the wp-product expression, one value per j."""
    vals = []
    for j in range(len(b)):
        _, dp = wp_and_prime(b[j], lat)
        prod = 1.0 + 0j
        for r in range(len(c)):
            if r != j:
                prod *= c[j] - c[r]
        vals.append(dp / (c[j] - lat.e1) ** p.ell * prod)
    return np.array(vals)


def locate_b(sol, lat, rtol=1e-8):
    """Invert wp(b_r) = c_r and fix the signs so all Psi'(b_r) coincide."""
    p = sol.params
    c = sol.c
    if np.any(sol.multiplicity > 1):
        raise DegenerateEnergyError(
            f"repeated roots wp(b_r) at E = {sol.E} (typically a band edge)")
    if p.ell > 0 and np.any(np.abs(c - lat.e1) < 1e-12):
        raise DegenerateEnergyError(f"a root coincides with e1 at E = {sol.E}")
    b0 = np.array([inverse_wp(cj, lat) for cj in c])
    vals = psi_prime_values(b0, c, p, lat)
    if np.any(np.abs(vals) < 1e-12 * max(1.0, np.max(np.abs(vals)))):
        raise DegenerateEnergyError(f"Psi' vanishes at a zero of Psi for E = {sol.E}")
    ref = vals[0]
    signs = np.array([1 if abs(v - ref) <= abs(v + ref) else -1 for v in vals])
    common = signs * vals
    # choose the global sign with Re > 0 (Im > 0 when purely imaginary)
    mean = np.mean(common)
    flip = mean.real < 0 or (abs(mean.real) <= 1e-12 * abs(mean) and mean.imag < 0)
    if flip:
        signs = -signs
        common = -common
        mean = -mean
    spread = np.max(np.abs(common - mean)) / abs(mean)
    if spread > rtol:
        raise ConsistencyError(
            f"no sign assignment gives a common Psi'(b_r); relative spread {spread:.3e}")
    b = np.array([reduce_to_cell(s * bj, lat) for s, bj in zip(signs, b0)])
    return replace(sol, b=b, signs=signs, psi_prime_at_b=complex(common[0]),
                   scale=1.0 / complex(common[0]))


def solve(p, E, lat):
    """Full pipeline: coefficients, roots, sign-fixed zeros."""
    sol = coefficients(p, E, lat)
    c, mult = char_roots(sol, lat)
    sol = replace(sol, c=c, multiplicity=mult)
    return locate_b(sol, lat)

