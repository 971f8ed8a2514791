"""Jacobian and Weierstrass elliptic functions for a rectangular lattice.

All evaluators go through theta-function series with the argument first
reduced to the fundamental cell, so they accept complex scalars or numpy
arrays of arbitrary size.  The Weierstrass lattice is normalised so that
e1 - e3 = 1, which makes the half-periods (K, iK') and gives

    wp(z) = e3 + 1 / sn(z, k)**2 .
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import elliprf

from .errors import DomainError, NumericError, PoleError

POLE_RADIUS = 1e-9


def _check_modulus(k2):
    k2 = float(k2)
    if not (0.0 < k2 < 1.0) or not math.isfinite(k2):
        raise DomainError(f"modulus k^2 must lie in (0, 1), got {k2!r}")
    return k2


def _agm(a, b):
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def complete_K(k2):
    """Complete elliptic integral K(k) = int_0^{pi/2} dphi / sqrt(1 - k^2 sin^2 phi).

    Computed as pi / (2 AGM(1, k')).
    """
    k2 = _check_modulus(k2)
    return math.pi / (2.0 * _agm(1.0, math.sqrt(1.0 - k2)))


# ---------------------------------------------------------------- theta core


@dataclass(frozen=True)
class _Theta:
    q: float
    tau_im: float  # Im(tau) = K'/K
    nterms: int
    th1p0: float
    th1ppp0: float
    th2_0: float
    th3_0: float
    th4_0: float


@lru_cache(maxsize=256)
def _theta_constants(k2):
    K = complete_K(k2)
    Kp = complete_K(1.0 - k2)
    tau_im = Kp / K
    q = math.exp(-math.pi * tau_im)
    L = math.pi * tau_im
    # terms decay like exp(-L (n^2 - 1/4)) on the reduced cell
    nterms = int(math.ceil(math.sqrt(41.0 / L + 0.25))) + 2
    n = np.arange(nterms)
    odd = 2 * n + 1
    c_odd = (-1.0) ** n * q ** ((n + 0.5) ** 2)
    th1p0 = 2.0 * np.sum(c_odd * odd)
    th1ppp0 = -2.0 * np.sum(c_odd * odd**3)
    th2_0 = 2.0 * np.sum(q ** ((n + 0.5) ** 2))
    n1 = np.arange(1, nterms + 1)
    th3_0 = 1.0 + 2.0 * np.sum(q ** (n1**2))
    th4_0 = 1.0 + 2.0 * np.sum((-1.0) ** n1 * q ** (n1**2))
    return _Theta(q, tau_im, nterms, float(th1p0), float(th1ppp0),
                  float(th2_0), float(th3_0), float(th4_0))


def _reduce(v, tau_im):
    """Split v = v0 + a*pi + b*pi*tau with v0 in the centred fundamental cell."""
    b = np.rint(v.imag / (math.pi * tau_im))
    v1 = v - b * (1j * math.pi * tau_im)
    a = np.rint(v1.real / math.pi)
    return v1 - a * math.pi, a, b


def _theta1_derivs(v0, th):
    """theta_1 and its first three v-derivatives at reduced arguments."""
    n = np.arange(th.nterms)
    odd = (2 * n + 1).astype(float)
    c = (-1.0) ** n * th.q ** ((n + 0.5) ** 2)
    arg = v0[..., None] * odd
    s = np.sin(arg)
    co = np.cos(arg)
    t0 = 2.0 * np.sum(c * s, axis=-1)
    t1 = 2.0 * np.sum(c * odd * co, axis=-1)
    t2 = -2.0 * np.sum(c * odd**2 * s, axis=-1)
    t3 = -2.0 * np.sum(c * odd**3 * co, axis=-1)
    return t0, t1, t2, t3


def _theta_all(v0, th):
    """theta_1..theta_4 at reduced arguments."""
    n = np.arange(th.nterms)
    odd = (2 * n + 1).astype(float)
    half = th.q ** ((n + 0.5) ** 2)
    arg = v0[..., None] * odd
    t1 = 2.0 * np.sum((-1.0) ** n * half * np.sin(arg), axis=-1)
    t2 = 2.0 * np.sum(half * np.cos(arg), axis=-1)
    n1 = np.arange(1, th.nterms + 1)
    full = th.q ** (n1**2)
    arg2 = v0[..., None] * (2.0 * n1)
    c2 = np.cos(arg2)
    t3 = 1.0 + 2.0 * np.sum(full * c2, axis=-1)
    t4 = 1.0 + 2.0 * np.sum((-1.0) ** n1 * full * c2, axis=-1)
    return t1, t2, t3, t4


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


# ---------------------------------------------------------------- Jacobi


def jacobi(u, k2):
    """Return (sn, cn, dn) at complex argument(s) u for parameter k^2."""
    k2 = _check_modulus(k2)
    th = _theta_constants(k2)
    K = complete_K(k2)
    uu, scalar = _as_complex(u)
    uu = np.atleast_1d(uu)
    v = uu * (math.pi / (2.0 * K))
    v0, a, b = _reduce(v, th.tau_im)
    half_tau = 0.5 * math.pi * th.tau_im
    dist = np.minimum(np.abs(v0 - 1j * half_tau), np.abs(v0 + 1j * half_tau))
    dist = np.minimum(dist, np.minimum(np.abs(v0 - math.pi + 1j * half_tau),
                                       np.abs(v0 + math.pi - 1j * half_tau)))
    bad = dist * (2.0 * K / math.pi) < POLE_RADIUS
    if np.any(bad):
        loc = complex(uu[np.argmax(bad)])
        raise PoleError(f"sn has a pole at u = {loc}", location=loc)
    t1, t2, t3, t4 = _theta_all(v0, th)
    sa = (-1.0) ** a
    sb = (-1.0) ** b
    sn = sa * (th.th3_0 / th.th2_0) * t1 / t4
    cn = sa * sb * (th.th4_0 / th.th2_0) * t2 / t4
    dn = sb * (th.th4_0 / th.th3_0) * t3 / t4
    if scalar:
        return complex(sn[0]), complex(cn[0]), complex(dn[0])
    return sn.reshape(np.shape(u)), cn.reshape(np.shape(u)), dn.reshape(np.shape(u))


def sn2(u, k2):
    """Convenience: sn(u)^2."""
    s, _, _ = jacobi(u, k2)
    return s * s


# ---------------------------------------------------------------- Weierstrass


@dataclass(frozen=True)
class LatticeData:
    k2: float
    kprime2: float
    K: float
    Kprime: float
    e1: float
    e2: float
    e3: float
    ebar2: float
    ebar3: float
    omega1: complex
    omega2: complex
    omega3: complex
    g2: float
    g3: float
    eta1: complex
    eta3: complex

    @property
    def eta2(self):
        return self.eta1 + self.eta3

    def half_period(self, i):
        return (self.omega1, self.omega2, self.omega3)[i - 1]

    def eta(self, i):
        return (self.eta1, self.eta2, self.eta3)[i - 1]

    @property
    def theta(self):
        return _theta_constants(self.k2)


def lattice_from_modulus(k2):
    """Weierstrass data for the rectangular lattice with half-periods K, iK'."""
    k2 = _check_modulus(k2)
    K = complete_K(k2)
    Kp = complete_K(1.0 - k2)
    e1 = (2.0 - k2) / 3.0
    e2 = (2.0 * k2 - 1.0) / 3.0
    e3 = -(1.0 + k2) / 3.0
    ebar3 = e1 - e3
    ebar2 = e1 - e2
    s = math.sqrt(ebar3)
    omega1 = complex(K / s)
    omega3 = complex(0.0, Kp / s)
    th = _theta_constants(k2)
    eta1 = -(math.pi**2) * th.th1ppp0 / (12.0 * omega1.real * th.th1p0)
    # Legendre relation: eta1*omega3 - eta3*omega1 = i*pi/2
    eta3 = (eta1 * omega3 - 0.5j * math.pi) / omega1
    return LatticeData(
        k2=k2, kprime2=1.0 - k2, K=K, Kprime=Kp,
        e1=e1, e2=e2, e3=e3, ebar2=ebar2, ebar3=ebar3,
        omega1=omega1, omega2=omega1 + omega3, omega3=omega3,
        g2=-4.0 * (e1 * e2 + e1 * e3 + e2 * e3), g3=4.0 * e1 * e2 * e3,
        eta1=complex(eta1), eta3=complex(eta3),
    )


def _weier_prep(z, lat, check_pole=True):
    zz, scalar = _as_complex(z)
    zz = np.atleast_1d(zz)
    w1 = lat.omega1.real
    th = lat.theta
    v = zz * (math.pi / (2.0 * w1))
    v0, a, b = _reduce(v, th.tau_im)
    if check_pole:
        bad = np.abs(v0) * (2.0 * w1 / math.pi) < POLE_RADIUS
        if np.any(bad):
            loc = complex(zz[np.argmax(bad)])
            raise PoleError(f"lattice point at z = {loc}", location=loc)
    return zz, scalar, v0, a, b, th, w1


def _reshape(val, z, scalar):
    if scalar:
        return complex(val[0])
    return val.reshape(np.shape(z))


def wp(z, lat):
    """Weierstrass wp(z) on the lattice of ``lat``."""
    zz, scalar, v0, _, _, th, w1 = _weier_prep(z, lat)
    t0, t1, t2, _ = _theta1_derivs(v0, th)
    c = math.pi / (2.0 * w1)
    r = t1 / t0
    val = -lat.eta1 / w1 - c * c * (t2 / t0 - r * r)
    return _reshape(val, z, scalar)


def wp_prime(z, lat):
    """Derivative wp'(z)."""
    zz, scalar, v0, _, _, th, w1 = _weier_prep(z, lat)
    t0, t1, t2, t3 = _theta1_derivs(v0, th)
    c = math.pi / (2.0 * w1)
    r1, r2, r3 = t1 / t0, t2 / t0, t3 / t0
    val = -(c**3) * (r3 - 3.0 * r2 * r1 + 2.0 * r1**3)
    return _reshape(val, z, scalar)


def wp_and_prime(z, lat):
    """(wp(z), wp'(z)) sharing one theta evaluation."""
    zz, scalar, v0, _, _, th, w1 = _weier_prep(z, lat)
    t0, t1, t2, t3 = _theta1_derivs(v0, th)
    c = math.pi / (2.0 * w1)
    r1, r2, r3 = t1 / t0, t2 / t0, t3 / t0
    p = -lat.eta1 / w1 - c * c * (r2 - r1 * r1)
    dp = -(c**3) * (r3 - 3.0 * r2 * r1 + 2.0 * r1**3)
    return _reshape(p, z, scalar), _reshape(dp, z, scalar)


def wzeta(z, lat):
    """Weierstrass zeta(z), quasi-periodic with zeta' = -wp."""
    zz, scalar, v0, _, b, th, w1 = _weier_prep(z, lat)
    t0, t1, _, _ = _theta1_derivs(v0, th)
    c = math.pi / (2.0 * w1)
    val = lat.eta1 * zz / w1 + c * (t1 / t0 - 2j * b)
    return _reshape(val, z, scalar)


def log_wsigma(z, lat):
    """A logarithm of sigma(z); the imaginary part is not branch-tracked.

    exp() of the result is sigma(z).  Sums of these logs therefore give
    exact products of sigma values even when a single sigma would overflow.
    """
    zz, scalar, v0, a, b, th, w1 = _weier_prep(z, lat, check_pole=False)
    t0, _, _, _ = _theta1_derivs(v0, th)
    if np.any(t0 == 0):
        raise PoleError("log sigma at a lattice point (sigma = 0)")
    tau = 1j * th.tau_im
    # theta1(v0 + a pi + b pi tau) = (-1)^(a+b) q^(-b^2) exp(-2 i b v0) theta1(v0)
    log_th = (np.log(t0.astype(complex)) + 1j * math.pi * ((a + b) % 2)
              - b * b * (1j * math.pi * tau) - 2j * b * v0)
    val = (math.log(2.0 * w1 / math.pi) + lat.eta1 * zz * zz / (2.0 * w1)
           + log_th - math.log(th.th1p0))
    return _reshape(val, z, scalar)


def wsigma(z, lat):
    """Weierstrass sigma(z) (entire, odd)."""
    zz, scalar = _as_complex(z)
    zz = np.atleast_1d(zz)
    v0 = _reduce(zz * (math.pi / (2.0 * lat.omega1.real)), lat.theta.tau_im)[0]
    zero = np.abs(v0) == 0
    val = np.zeros(zz.shape, dtype=complex)
    if np.any(~zero):
        val[~zero] = np.exp(log_wsigma(zz[~zero], lat))
    return _reshape(val, z, scalar)


def reduce_to_cell(b, lat):
    """Canonical representative: Re in [0, 2 omega1), Im in [0, 2 Im omega3)."""
    p1 = 2.0 * lat.omega1.real
    p3 = 2.0 * lat.omega3.imag
    re = math.fmod(b.real, p1)
    im = math.fmod(b.imag, p3)
    if re < 0:
        re += p1
    if im < 0:
        im += p3
    # snap values that round to the upper boundary
    if p1 - re < 1e-13 * p1:
        re = 0.0
    if p3 - im < 1e-13 * p3:
        im = 0.0
    return complex(re, im)


def _newton_wp(b, c, lat, maxit=60):
    for _ in range(maxit):
        p, dp = wp_and_prime(b, lat)
        if dp == 0:
            break
        step = (p - c) / dp
        b = b - step
        if abs(step) < 1e-15 * max(1.0, abs(b)):
            break
    return b


def inverse_wp(c, lat, tol=1e-11):
    """Solve wp(b) = c; the root is returned reduced to the canonical cell.

    Only one of the two roots +-b is returned; which sign is physically
    meaningful is decided by the caller.
    """
    c = complex(c)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise DomainError(f"inverse_wp needs a finite value, got {c}")
    scale = max(1.0, abs(c))
    for i, ei in enumerate((lat.e1, lat.e2, lat.e3), start=1):
        if abs(c - ei) < 1e-14 * scale:
            return reduce_to_cell(lat.half_period(i), lat)
    starts = []
    with np.errstate(all="ignore"):
        rf = complex(elliprf(c - lat.e1, c - lat.e2, c - lat.e3))
    if np.isfinite(rf):
        starts.append(rf)
    # half-period anchored guesses cover the real-axis branch cuts of RF
    for w in (lat.omega1, lat.omega2, lat.omega3):
        starts.append(w + 0.1 * (1 + 1j))
    best = None
    for b0 in starts:
        b = _newton_wp(b0, c, lat)
        if not np.isfinite(b):
            continue
        try:
            res = abs(wp(b, lat) - c)
        except PoleError:
            continue
        if best is None or res < best[1]:
            best = (b, res)
        if res <= tol * scale:
            return reduce_to_cell(b, lat)
    # coarse scan of the fundamental cell as a last resort
    xs = np.linspace(0.05, 1.95, 24) * lat.omega1.real
    ys = np.linspace(0.05, 1.95, 24) * lat.omega3.imag
    grid = (xs[:, None] + 1j * ys[None, :]).ravel()
    vals = np.abs(wp(grid, lat) - c)
    for idx in np.argsort(vals)[:6]:
        b = _newton_wp(grid[idx], c, lat)
        try:
            res = abs(wp(b, lat) - c)
        except PoleError:
            continue
        if best is None or res < best[1]:
            best = (b, res)
        if res <= tol * scale:
            return reduce_to_cell(b, lat)
    raise NumericError(f"inverse_wp did not converge for c = {c}",
                       last_iterate=None if best is None else best[0])


def wp_lattice_sum(z, lat, nmax=60):
    """Slow direct lattice sum for wp (test oracle only).

    Rows along omega1 are summed in closed form with the cosecant identity
    sum_m 1/(x - m pi)^2 = 1/sin(x)^2, so only the omega3 direction is
    truncated and the result converges geometrically.
    """
    w1, w3 = lat.omega1, lat.omega3
    z = complex(z)
    total = 0.0j
    c = math.pi / (2.0 * w1)
    for n in range(-nmax, nmax + 1):
        x = (z - 2 * n * w3) * c
        total += c * c / np.sin(x) ** 2
        if n != 0:
            total -= c * c / np.sin(-2 * n * w3 * c) ** 2
    # n = 0 row: subtract sum_{m != 0} 1/(2 m omega1)^2 = pi^2 / (12 omega1^2)
    total -= math.pi**2 / (12.0 * w1 * w1)
    return total
