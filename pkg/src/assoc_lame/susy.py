"""First- and second-order SUSY (Darboux) partners of the associated Lame
potential built from the Bloch solutions of :mod:`assoc_lame.bloch`.

Seeds are either a single Bloch solution (periodic partners) or a real
combination psi^s + lam * psi^-s (partners with a periodicity defect).
Everything that enters a partner potential is evaluated in closed form
through zeta and wp; finite differences are only used by the checks.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import simpson

from .bloch import (
    BlochPair,
    fd_second_derivative,
    lowest_edge,
    period,
    potential,
    scan_band_edges,
)
from .elliptic import jacobi, wp, wp_and_prime, wzeta
from .errors import ConsistencyError, DomainError, NodeError, SpecError
from .frobenius import ModelParams

DEFECT_TOL = 1e-6


# -------------------------------------------------------------- band edges


@dataclass(frozen=True)
class BandEdges31:
    k2: float
    edges: tuple
    labels: tuple
    gaps: tuple

    def as_dict(self):
        return dict(zip(self.labels, self.edges))


def band_edges_31(k2):
    """Closed-form band edges of the (m, ell) = (3, 1) potential.

    E1 = 1 + 4k^2, E2 = 1 + 9k^2, E3,8 = 10 + 2k^2 -+ 2 sqrt(k^4 + 9k'^2),
    and E0, E4, E7 are the roots of
    E^3 - (11k^2 + 20)E^2 + (19k^4 + 216k^2 + 64)E - (9k^6 + 388k^4 + 448k^2).
    """
    k2 = float(k2)
    if not (0.0 < k2 < 1.0):
        raise DomainError(f"modulus k^2 must lie in (0, 1), got {k2!r}")
    kp2 = 1.0 - k2
    root = math.sqrt(k2 * k2 + 9.0 * kp2)
    cubic = np.roots([1.0, -(11.0 * k2 + 20.0), 19.0 * k2**2 + 216.0 * k2 + 64.0,
                      -(9.0 * k2**3 + 388.0 * k2**2 + 448.0 * k2)])
    if np.max(np.abs(cubic.imag)) > 1e-9:
        raise ConsistencyError("band-edge cubic has complex roots")
    E0, E4, E7 = np.sort(cubic.real)
    named = {"E0": E0, "E1": 1.0 + 4.0 * k2, "E2": 1.0 + 9.0 * k2,
             "E3": 10.0 + 2.0 * k2 - 2.0 * root, "E4": E4, "E7": E7,
             "E8": 10.0 + 2.0 * k2 + 2.0 * root}
    order = sorted(named, key=named.get)
    edges = tuple(float(named[k]) for k in order)
    gaps = tuple((edges[i], edges[i + 1]) for i in range(1, len(edges) - 1, 2))
    return BandEdges31(k2=k2, edges=edges, labels=tuple(order), gaps=gaps)


def spectrum_edges(p, lat):
    """Band edges: closed forms for (3, 1), a discriminant scan otherwise."""
    if (p.m, p.ell) == (3, 1):
        return list(band_edges_31(p.k2).edges)
    return default_scan(p, lat)[0]


def default_scan(p, lat):
    xs = np.linspace(0.0, period(p, lat), 401)
    vmax = float(np.max(potential(xs, p)))
    emax = vmax + ((p.N + 1) * math.pi / period(p, lat)) ** 2
    return scan_band_edges(p, lat, emax=emax, step=0.01)


def gap_of(E, edges):
    """Index of the gap containing E (0 = below the spectrum), or None in a band."""
    if E < edges[0]:
        return 0
    for i in range(1, len(edges) - 1, 2):
        if edges[i] < E < edges[i + 1]:
            return (i + 1) // 2
    return None


# -------------------------------------------------------------- seeds


@dataclass
class Seed:
    """u = psi^s + lam * psi^-s at one factorisation energy."""

    pair: BlochPair
    sign: int = +1
    lam: float = 0.0

    @property
    def energy(self):
        return self.pair.E

    @property
    def kind(self):
        if self.lam == 0:
            return "bloch-plus" if self.sign > 0 else "bloch-minus"
        return "combination"

    # h = (ln psi^-s)' - (ln psi^s)' and its derivatives, closed form
    def _h(self, x):
        pr, lat = self.pair, self.pair.lat
        z = pr.z_of_x(x)
        s3 = math.sqrt(lat.ebar3)
        acc = 0.0
        for br in pr.sol.b:
            acc = acc + wzeta(z - br, lat) - wzeta(z + br, lat) + 2.0 * wzeta(br, lat)
        return self.sign * acc / s3

    def _h_derivs(self, x):
        pr, lat = self.pair, self.pair.lat
        z = pr.z_of_x(x)
        s3 = math.sqrt(lat.ebar3)
        d1 = 0.0
        d2 = 0.0
        for br in pr.sol.b:
            pp, dpp = wp_and_prime(z + br, lat)
            pm, dpm = wp_and_prime(z - br, lat)
            d1 = d1 + pp - pm
            d2 = d2 + dpp - dpm
        return self.sign * d1 / lat.ebar3, self.sign * d2 / (lat.ebar3 * s3)

    def _w(self, x):
        """lam R / (1 + lam R) with R = psi^-s / psi^s, overflow-safe."""
        if self.lam == 0:
            return np.zeros(np.shape(x))
        L = (self.pair.log_psi(x, -self.sign) - self.pair.log_psi(x, self.sign)
             + np.log(complex(self.lam)))
        with np.errstate(over="ignore"):
            return 1.0 / (1.0 + np.exp(-L))

    def log_u(self, x):
        base = self.pair.log_psi(x, self.sign)
        if self.lam == 0:
            return base
        L = (self.pair.log_psi(x, -self.sign) - base + np.log(complex(self.lam)))
        # log(1 + e^L), computed without overflow on either side
        big = np.real(L) > 0
        tail = np.where(big, L + np.log1p(np.exp(-np.where(big, L, 0))),
                        np.log1p(np.exp(np.where(big, 0, L))))
        return base + tail

    def u(self, x):
        return np.exp(self.log_u(x))

    def log_phi_derivs(self, x):
        """((ln phi)', (ln phi)'', (ln phi)''') with phi = u / psi^s."""
        if self.lam == 0:
            z = np.zeros(np.shape(x))
            return z, z, z
        w = self._w(x)
        h = self._h(x)
        h1, h2 = self._h_derivs(x)
        v = w * (1.0 - w)
        d1 = w * h
        d2 = w * h1 + v * h * h
        d3 = w * h2 + 3.0 * v * h * h1 + v * (1.0 - 2.0 * w) * h**3
        return d1, d2, d3

    def dlog_u(self, x):
        return self.pair.dlog_psi(x, self.sign) + self.log_phi_derivs(x)[0]

    def d2log_u(self, x):
        return self.pair.d2log_psi(x, self.sign) + self.log_phi_derivs(x)[1]

    def d3log_u(self, x):
        pr, lat = self.pair, self.pair.lat
        z = pr.z_of_x(x)
        p = pr.params
        acc = p.m * wp_and_prime(z, lat)[1] + p.ell * wp_and_prime(z + lat.omega1, lat)[1]
        for br in pr.sol.b:
            acc = acc - wp_and_prime(z + self.sign * br, lat)[1]
        return acc / lat.ebar3**1.5 + self.log_phi_derivs(x)[2]


# -------------------------------------------------------------- spec


@dataclass(frozen=True)
class SusySpec:
    order: int
    energies: tuple
    signs: tuple = None
    weights: tuple = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise SpecError(f"only first- and second-order transformations, got {self.order}")
        energies = tuple(float(e) for e in np.atleast_1d(self.energies))
        if len(energies) != self.order:
            raise SpecError(f"order {self.order} needs {self.order} energies, got {len(energies)}")
        object.__setattr__(self, "energies", energies)
        signs = self.signs if self.signs is not None else (1,) * self.order
        weights = self.weights if self.weights is not None else (0.0,) * self.order
        if len(signs) != self.order or len(weights) != self.order:
            raise SpecError("one sign and one weight per factorisation energy")
        if any(s not in (1, -1) for s in signs):
            raise SpecError(f"seed signs must be +1 or -1, got {signs}")
        object.__setattr__(self, "signs", tuple(int(s) for s in signs))
        object.__setattr__(self, "weights", tuple(float(w) for w in weights))

    @property
    def seed_kinds(self):
        out = []
        for s, w in zip(self.signs, self.weights):
            out.append("combination" if w != 0 else ("bloch-plus" if s > 0 else "bloch-minus"))
        return tuple(out)

    @property
    def periodic(self):
        return all(w == 0 for w in self.weights)


def _scan_sign_changes(f, lo, hi, step):
    """Locations where a real-valued callable changes sign, refined by bisection."""
    xs = np.arange(lo, hi + step, step)
    vals = f(xs)
    if np.max(np.abs(np.imag(vals))) > 1e-6 * np.max(np.abs(vals)):
        raise ConsistencyError("seed combination is not real on the real line")
    vals = np.real(vals)
    out = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        a, b = xs[i], xs[i + 1]
        fa = np.real(f(np.array([a])))[0]
        for _ in range(60):
            mid = 0.5 * (a + b)
            fm = np.real(f(np.array([mid])))[0]
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
        out.append(0.5 * (a + b))
    return out


def _seed_pairs(p, spec, lat):
    return [BlochPair(p, e, lat) for e in spec.energies]


def validate_spec(spec, p, lat, pairs=None, edges=None):
    """Check energy placement and nodelessness; returns the seed list."""
    if edges is None:
        if spec.order == 1 and (p.m, p.ell) != (3, 1):
            edges = [lowest_edge(p, lat)]
        else:
            edges = spectrum_edges(p, lat)
    E0 = edges[0]
    if spec.order == 1:
        eps = spec.energies[0]
        if not eps < E0:
            raise SpecError(
                f"first-order factorisation energy must lie below E0 = {E0:.8g}, got {eps}"
                + (" (eps = E0 is a band edge, rejected)" if eps == E0 else ""))
    else:
        e1, e2 = spec.energies
        if e1 == e2:
            raise SpecError("second-order factorisation energies must differ")
        g1, g2 = gap_of(e1, edges), gap_of(e2, edges)
        if g1 is None or g2 is None or g1 != g2:
            raise SpecError(
                f"factorisation energies {e1} and {e2} must lie in the same forbidden gap")
    pairs = pairs if pairs is not None else _seed_pairs(p, spec, lat)
    seeds = [Seed(pr, s, w) for pr, s, w in zip(pairs, spec.signs, spec.weights)]
    T = 2.0 * lat.K
    step = T / 2000.0
    if spec.order == 1:
        nodes = _scan_sign_changes(seeds[0].u, -3 * T, 3 * T, step)
        if nodes:
            raise NodeError(f"seed solution has a node at x = {nodes[0]:.10g}",
                            location=nodes[0])
    else:
        wr = lambda x: wronskian_closed(seeds[0], seeds[1], x)
        nodes = _scan_sign_changes(wr, -3 * T, 3 * T, step)
        if nodes:
            raise NodeError(f"seed Wronskian has a node at x = {nodes[0]:.10g}",
                            location=nodes[0])
    return seeds


def wronskian_closed(s1, s2, x):
    """W(u1, u2) = u1 u2 [(ln u2)' - (ln u1)']."""
    return s1.u(x) * s2.u(x) * (s2.dlog_u(x) - s1.dlog_u(x))


# -------------------------------------------------------------- partners


@dataclass
class PartnerPotential:
    spec: SusySpec
    base: ModelParams
    lat: object
    seeds: list
    periodic: bool
    bound_state_energies: list = field(default_factory=list)
    defect_window: tuple = None

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        val = self._raw(x)
        return _real_checked(val)

    def _raw(self, x):
        if self.spec.order == 1:
            val = susy1_formula(x, self.seeds[0], self.base, self.lat)
            if not self.periodic:
                val = val - 2.0 * self.seeds[0].log_phi_derivs(x)[1]
            return val
        s1, s2 = self.seeds
        return potential(x, self.base) - 2.0 * d2log_wronskian(x, s1, s2)

    def periodic_reference(self, x):
        """The periodic partner this potential tends to as x -> +-inf.

        For combination seeds u = psi^s (1 + lam R), the seed behaves like
        whichever Bloch solution grows on that side, so the asymptotes on
        the two sides are the periodic partners of those two solutions.
        """
        x = np.asarray(x, dtype=float)
        if self.periodic:
            return self.evaluate(x)
        out = np.empty_like(x)
        for side, mask in ((+1, x >= 0), (-1, x < 0)):
            seeds = [_asymptotic_seed(s, side) for s in self.seeds]
            if self.spec.order == 1:
                val = susy1_formula(x[mask], seeds[0], self.base, self.lat)
            else:
                val = (potential(x[mask], self.base)
                       - 2.0 * d2log_wronskian(x[mask], seeds[0], seeds[1]))
            out[mask] = _real_checked(val)
        return out

    def log_wronskian(self, x):
        """ln W(seeds) (order 1: ln u), used by the numerical oracle."""
        if self.spec.order == 1:
            return self.seeds[0].log_u(x)
        s1, s2 = self.seeds
        return s1.log_u(x) + s2.log_u(x) + np.log((s2.dlog_u(x) - s1.dlog_u(x)).astype(complex))


def _real_checked(val, tol=1e-6):
    val = np.asarray(val)
    if np.iscomplexobj(val):
        scale = max(1.0, float(np.max(np.abs(val)))) if val.size else 1.0
        if val.size and np.max(np.abs(val.imag)) > tol * scale:
            raise ConsistencyError(
                f"partner potential has imaginary part {np.max(np.abs(val.imag)):.3e}")
        val = val.real
    return val


def _asymptotic_seed(seed, side):
    """The Bloch solution that dominates the seed for x -> side * inf."""
    if seed.lam == 0:
        return seed
    mu = abs(seed.pair.multiplier_2K) ** seed.sign  # growth of psi^s over +2K
    grows_right = mu > 1.0
    dominant = seed.sign if (grows_right == (side > 0)) else -seed.sign
    return Seed(seed.pair, dominant, 0.0)


def _sn2_shift_sum(x, pair, sign, lat):
    s3 = math.sqrt(lat.ebar3)
    acc = 0.0
    for br in pair.sol.b:
        s, _, _ = jacobi(x + sign * s3 * br, lat.k2)
        acc = acc + s * s
    return acc


def susy1_formula(x, seed, p, lat):
    """m(m-1) k^2 sn^2 + ell(ell-1) k^2 cn^2/dn^2 + 2 k^2 sum sn^2(x +- sqrt(ebar3) b_r)."""
    k2 = p.k2
    s, c, d = jacobi(np.asarray(x, dtype=float), k2)
    base = p.m * (p.m - 1) * k2 * s * s + p.ell * (p.ell - 1) * k2 * c * c / (d * d)
    return base + 2.0 * k2 * _sn2_shift_sum(x, seed.pair, seed.sign, lat)


def log_u_second_derivative_31(x, seed, p, lat):
    """[ln psi]'' = m k^2 sn^2 + ell - ell(2e1^2 + e2 e3)/(ebar3^2 dn^2) - k^2 sum sn^2(x +- b)."""
    k2 = p.k2
    s, _, d = jacobi(np.asarray(x, dtype=float), k2)
    coef = p.ell * (2 * lat.e1**2 + lat.e2 * lat.e3) / lat.ebar3**2
    return (p.m * k2 * s * s + p.ell - coef / (d * d)
            - k2 * _sn2_shift_sum(x, seed.pair, seed.sign, lat))


def g_and_derivs(x, s1, s2):
    """g = [ln(psi2/psi1)]' for the Bloch parts of the seeds, with g' and g''."""
    lat = s1.pair.lat
    s3 = math.sqrt(lat.ebar3)
    z = s1.pair.z_of_x(x)
    g = 0.0
    g1 = 0.0
    g2 = 0.0
    for seed, sgn in ((s2, 1.0), (s1, -1.0)):
        for br in seed.pair.sol.b:
            sb = seed.sign * br
            zz = z + sb
            p_, dp_ = wp_and_prime(zz, lat)
            g = g + sgn * (wzeta(zz, lat) - wzeta(sb, lat))
            g1 = g1 - sgn * p_
            g2 = g2 - sgn * dp_
    return g / s3, g1 / lat.ebar3, g2 / lat.ebar3**1.5


def susy2_formula(x, s1, s2, p, lat):
    """Periodic second-order partner built from the Bloch parts of two seeds."""
    k2 = p.k2
    s, c, d = jacobi(np.asarray(x, dtype=float), k2)
    base = p.m * (p.m - 3) * k2 * s * s + p.ell * (p.ell - 3) * k2 * c * c / (d * d)
    shifts = (_sn2_shift_sum(x, s1.pair, s1.sign, lat)
              + _sn2_shift_sum(x, s2.pair, s2.sign, lat))
    g, g1, g2 = g_and_derivs(x, s1, s2)
    return base + 2.0 * k2 * shifts - 2.0 * (g2 / g - (g1 / g) ** 2)


def d2log_wronskian(x, s1, s2):
    """[ln W(u1, u2)]'' written without removable poles.

    With L_i = (ln u_i)' and W' = (eps1 - eps2) u1 u2,
    (ln W)'' = d (L1 + L2) / (L2 - L1) - (d / (L2 - L1))^2, d = eps1 - eps2.
    Both ratios stay finite where either seed vanishes, unlike the sum of
    the separate logarithmic terms.
    """
    L1, L2 = s1.dlog_u(x), s2.dlog_u(x)
    d = s1.energy - s2.energy
    gap = L2 - L1
    return d * (L1 + L2) / gap - (d / gap) ** 2


def _defect_term_2(x, s1, s2):
    """[ln(phi1 phi2 g_np / g)]''."""
    g, g1, g2 = g_and_derivs(x, s1, s2)
    a1, a2, a3 = s1.log_phi_derivs(x)
    b1, b2, b3 = s2.log_phi_derivs(x)
    gn = g + b1 - a1
    gn1 = g1 + b2 - a2
    gn2 = g2 + b3 - a3
    return a2 + b2 + (gn2 / gn - (gn1 / gn) ** 2) - (g2 / g - (g1 / g) ** 2)


def build_partner(p, spec, lat, edges=None, window_range=None):
    seeds = validate_spec(spec, p, lat, edges=edges)
    partner = PartnerPotential(spec=spec, base=p, lat=lat, seeds=seeds,
                               periodic=spec.periodic)
    if not spec.periodic:
        partner.bound_state_energies = list(spec.energies)
        partner.defect_window = defect_window(partner, window_range)
    return partner


def susy1_periodic(p, eps, sign, lat, edges=None):
    return build_partner(p, SusySpec(1, (eps,), signs=(sign,)), lat, edges)


def susy1_defect(p, eps, lam, lat, edges=None, window_range=None):
    return build_partner(p, SusySpec(1, (eps,), signs=(1,), weights=(lam,)), lat, edges,
                  window_range)


def susy2_periodic(p, eps1, eps2, lat, signs=(1, 1), edges=None):
    return build_partner(p, SusySpec(2, (eps1, eps2), signs=signs), lat, edges)


def susy2_defect(p, eps1, eps2, lam1, lam2, lat, signs=(1, 1), edges=None,
                 window_range=None):
    return build_partner(p, SusySpec(2, (eps1, eps2), signs=signs, weights=(lam1, lam2)),
                  lat, edges, window_range)


def defect_window(partner, xrange=None, tol=DEFECT_TOL, samples=8001):
    """Smallest [a, b] outside which the partner is within tol of its
    periodic asymptotes, resolved on a uniform grid over ``xrange``
    (default [-12K, 12K]).  Returns None when no point deviates."""
    lat = partner.lat
    lo, hi = xrange if xrange is not None else (-12.0 * lat.K, 12.0 * lat.K)
    x = np.linspace(lo, hi, samples)
    dev = np.abs(partner.evaluate(x) - partner.periodic_reference(x))
    # detect at half the tolerance so points between samples stay below tol
    bad = np.nonzero(dev >= 0.5 * tol)[0]
    if len(bad) == 0:
        return None
    if bad[0] == 0 or bad[-1] == len(x) - 1:
        raise ConsistencyError(
            f"defect does not decay to {tol:g} inside [{lo:.4g}, {hi:.4g}]")
    return (float(x[bad[0] - 1]), float(x[bad[-1] + 1]))


# -------------------------------------------------------------- checks


def oracle_partner(partner, x, h=2.5e-3):
    """V - 2 [ln W(seeds)]'' with the second derivative taken numerically."""
    lw = lambda t: partner.log_wronskian(t)
    d2 = fd_second_derivative(lw, x, h)
    return potential(x, partner.base) - 2.0 * np.real(d2)


def apply_intertwiner(partner, x, f, df, E):
    """B f for a solution f of the original equation at energy E.

    f and df are callables giving the solution and its derivative.
    Order 1: B f = f' - (ln u)' f.  Order 2 is the product of two such
    steps; expanding it and using f'' = (V - E) f gives
    B f = (eps1 - E) f - eta f' + eta L1 f, eta = (eps1 - eps2) / (L2 - L1),
    which is free of the poles of the intermediate step.
    """
    s1 = partner.seeds[0]
    L1 = s1.dlog_u(x)
    fx, dfx = f(x), df(x)
    if partner.spec.order == 1:
        return dfx - L1 * fx
    s2 = partner.seeds[1]
    e1, e2 = partner.spec.energies
    gap = s2.dlog_u(x) - L1
    eta = (e1 - e2) / gap
    return (e1 - E) * fx - eta * dfx + (e1 - e2) * (L1 / gap) * fx


def intertwine_check(partner, testE, lat, x=None, h=1e-3):
    """Schrodinger residual of B psi under the partner at energy testE.

    Returns a dict with the residual relative to max |B psi| and the
    transformed solution on the grid.
    """
    if any(abs(testE - e) < 1e-9 for e in partner.spec.energies):
        raise SpecError("test energy coincides with a factorisation energy")
    if x is None:
        x = np.linspace(-4 * lat.K, 4 * lat.K, 801)
    pair = BlochPair(partner.base, testE, lat)
    f = lambda t: pair.psi(t, +1)
    df = lambda t: pair.dpsi(t, +1)
    Bf = lambda t: apply_intertwiner(partner, t, f, df, testE)
    vals = Bf(x)
    res = -fd_second_derivative(Bf, x, h) + (partner.evaluate(x) - testE) * vals
    scale = float(np.max(np.abs(vals)))
    return {"residual": float(np.max(np.abs(res)) / scale), "x": x, "Bpsi": vals,
            "scale": scale}


def seed_annihilation(partner, x, h=1e-4):
    """max |B u_i| / max |u_i'|, with u_i' taken numerically."""
    out = []
    for i, seed in enumerate(partner.seeds):
        E = seed.energy
        dnum = lambda t, s=seed: (s.u(t - 2 * h) - 8 * s.u(t - h) + 8 * s.u(t + h)
                                  - s.u(t + 2 * h)) / (12 * h)
        if partner.spec.order == 1:
            Bu = dnum(x) - seed.dlog_u(x) * seed.u(x)
            scale = np.max(np.abs(dnum(x)))
        else:
            Bu = apply_intertwiner(partner, x, seed.u, dnum, E)
            scale = np.max(np.abs(dnum(x))) * max(1.0, float(np.max(np.abs(seed.dlog_u(x)))))
        out.append(float(np.max(np.abs(Bu)) / scale))
    return out


def bound_states(partner):
    """Callables for the extra bound states of a defect partner.

    Order 1: 1/u at eps.  Order 2: u2/W at eps1 and u1/W at eps2.
    Each callable returns log of the state.
    """
    if partner.spec.order == 1:
        s = partner.seeds[0]
        return [(s.energy, lambda x: -s.log_u(x))]
    s1, s2 = partner.seeds

    def log_w(x):
        return partner.log_wronskian(x)

    return [(s1.energy, lambda x: s2.log_u(x) - log_w(x)),
            (s2.energy, lambda x: s1.log_u(x) - log_w(x))]


def tail_increments(log_state, period_len, nper=8, pts_per_period=800):
    """Integrals of |state|^2 over [-n T, n T] for n = 1..nper.

    Composite Simpson on a dense grid; the state is handled through its
    logarithm so the growing seeds never overflow.
    """
    values = []
    total = 0.0
    for n in range(1, nper + 1):
        slabs = [(-n * period_len, -(n - 1) * period_len), ((n - 1) * period_len, n * period_len)]
        for a, b in slabs:
            x = np.linspace(a, b, pts_per_period + 1)
            total += simpson(np.exp(2.0 * np.real(log_state(x))), x=x)
        values.append(total)
    return np.array(values)


def bound_state_residual(partner, log_state, E, x, h=1e-3):
    f = lambda t: np.exp(log_state(t))
    vals = f(x)
    res = -fd_second_derivative(f, x, h) + (partner.evaluate(x) - E) * vals
    return float(np.max(np.abs(res)) / np.max(np.abs(vals)))
