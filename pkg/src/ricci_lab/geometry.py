"""Rotationally symmetric metrics on S^n and their curvature.

A metric in this class is g = psi(x)^2 dx^2 + phi(x)^2 g_{S^{n-1}} on the
coordinate interval x in [0, 1], with the two poles at the endpoints. Every
curvature quantity reduces to two sectional curvatures:

    kRad = -phi_ss / phi            (planes containing the radial direction)
    kSph = (1 - phi_s^2) / phi^2    (planes tangent to the cross-section)

where subscript s is the arclength derivative d/ds = (1/psi) d/dx.
"""

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma

from .errors import InvalidProfile, OutOfRange, SingularData
from . import eikonal

PHI_FLOOR = 1e-12
POLE_SLOPE_TOL = 1e-2
MIN_POINTS = 16


def sphere_volume(k):
    """Volume of the unit round k-sphere, 2 pi^{(k+1)/2} / Gamma((k+1)/2)."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / gamma((k + 1) / 2.0)


def unit_ball_volume(n):
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


# --------------------------------------------------------------------------
# finite differences with pole ghost points

# 4th-order central stencils
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
# central stencils by order, for curvature evaluation
_STENCILS = {
    4: (_D1, _D2),
    6: (np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0,
        np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0),
    8: (np.array([3.0, -32.0, 168.0, -672.0, 0.0, 672.0, -168.0, 32.0, -3.0]) / 840.0,
        np.array([-9.0, 128.0, -1008.0, 8064.0, -14350.0, 8064.0, -1008.0, 128.0, -9.0]) / 5040.0),
}
CURVATURE_ORDER = 8
# 6th-order central first derivative (oracle only)
_D1_6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def extend(f, parity, m):
    """Pad ``f`` with ``m`` ghost values per pole using reflection ``parity`` (+1 even, -1 odd)."""
    f = np.asarray(f, dtype=float)
    left = parity * f[m:0:-1]
    right = parity * f[-2:-m - 2:-1]
    return np.concatenate([left, f, right])


def _stencil(fe, coeffs, n_out):
    m = len(coeffs) // 2
    out = np.zeros(n_out)
    for k, c in enumerate(coeffs):
        if c != 0.0:
            out += c * fe[k:k + n_out]
    return out


def d1(f, h, parity):
    """First derivative on a uniform grid, 4th order, ghost-extended at both poles."""
    return _stencil(extend(f, parity, 2), _D1, len(f)) / h


def d2(f, h, parity):
    """Second derivative on a uniform grid, 4th order, ghost-extended at both poles."""
    return _stencil(extend(f, parity, 2), _D2, len(f)) / (h * h)


def grid_spacing(x):
    """Spacing of a uniform grid; raises InvalidProfile for non-uniform grids."""
    x = np.asarray(x, dtype=float)
    h = (x[-1] - x[0]) / (len(x) - 1)
    if np.max(np.abs(np.diff(x) - h)) > 1e-9 * max(h, 1e-300) + 1e-14:
        raise InvalidProfile("finite-difference stencils require a uniform x grid")
    return h


# --------------------------------------------------------------------------
# data types

@dataclass(frozen=True, eq=False)
class WarpProfile:
    """One time slice g = psi^2 dx^2 + phi^2 g_{S^{n-1}} on S^n.

    Arrays are stored as read-only float64 copies.
    """

    n: int
    x: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        for name in ("x", "psi", "phi"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "time", float(self.time))

    @property
    def N(self):
        return len(self.x)

    @property
    def h(self):
        return grid_spacing(self.x)

    def validate(self, pole_tol=POLE_SLOPE_TOL):
        """Check every structural invariant; return self or raise InvalidProfile."""
        x, psi, phi = self.x, self.psi, self.phi
        if self.n < 3:
            raise InvalidProfile(f"dimension n={self.n} must be >= 3")
        if not (len(x) == len(psi) == len(phi)):
            raise InvalidProfile("x, psi, phi must have equal length")
        if len(x) < MIN_POINTS:
            raise InvalidProfile(f"grid needs at least {MIN_POINTS} points, got {len(x)}")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise InvalidProfile("grid must run from x=0 to x=1")
        if np.any(np.diff(x) <= 0):
            raise InvalidProfile("grid must be strictly increasing")
        if not np.all(np.isfinite(psi)) or not np.all(np.isfinite(phi)):
            raise InvalidProfile("non-finite metric coefficients")
        if np.any(psi <= 0):
            raise InvalidProfile("psi must be positive")
        if phi[0] != 0.0 or phi[-1] != 0.0:
            raise InvalidProfile("phi must vanish at the poles")
        if np.any(phi[1:-1] <= 0):
            raise InvalidProfile("phi must be positive in the interior")
        slope_l, slope_r = self.pole_slopes()
        if abs(slope_l - 1.0) > pole_tol or abs(slope_r + 1.0) > pole_tol:
            raise InvalidProfile(
                f"smooth-pole condition violated: phi_s = {slope_l:.6g}, {slope_r:.6g}")
        return self

    def pole_slopes(self):
        """Arclength derivative of phi at the left and right poles."""
        h = self.h
        dphi = d1(self.phi, h, -1)
        return dphi[0] / self.psi[0], dphi[-1] / self.psi[-1]

    def scaled(self, c):
        """The metric c^2 g: lengths multiplied by c."""
        return replace(self, psi=c * self.psi, phi=c * self.phi)


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Pointwise curvature of a warped profile (all arrays in length^-2)."""

    n: int
    kRad: np.ndarray
    kSph: np.ndarray
    lamRad: np.ndarray
    lamSph: np.ndarray
    scalar: np.ndarray
    scalarPlus: np.ndarray
    scalarMinus: np.ndarray
    lambdaNeg: np.ndarray
    normRic: np.ndarray
    normRm: np.ndarray

    @classmethod
    def from_sectional(cls, n, kRad, kSph):
        kRad = np.asarray(kRad, dtype=float)
        kSph = np.asarray(kSph, dtype=float)
        lamRad = (n - 1) * kRad
        lamSph = kRad + (n - 2) * kSph
        scalar = 2 * (n - 1) * kRad + (n - 1) * (n - 2) * kSph
        return cls(
            n=n,
            kRad=kRad,
            kSph=kSph,
            lamRad=lamRad,
            lamSph=lamSph,
            scalar=scalar,
            scalarPlus=np.maximum(scalar, 0.0),
            scalarMinus=np.maximum(-scalar, 0.0),
            lambdaNeg=np.maximum(0.0, -np.minimum(lamRad, lamSph)),
            normRic=np.sqrt(lamRad ** 2 + (n - 1) * lamSph ** 2),
            normRm=np.sqrt(4 * (n - 1) * kRad ** 2 + 2 * (n - 1) * (n - 2) * kSph ** 2),
        )

    def scaled(self, factor):
        """Field with every curvature multiplied by ``factor``."""
        return CurvatureField.from_sectional(self.n, factor * self.kRad, factor * self.kSph)


# --------------------------------------------------------------------------
# operations

def _check_psi(p):
    if np.any(np.asarray(p.psi) <= 0) or not np.all(np.isfinite(p.psi)):
        raise InvalidProfile("psi must be positive and finite")


def arclength(p):
    """Cumulative arclength s(x) = int_0^x psi dx.

    Trapezoid rule with the Euler-Maclaurin end correction, which lifts the
    cumulative sums to fourth order without changing the total when psi is even
    about the poles.
    """
    _check_psi(p)
    x = np.asarray(p.x)
    psi = np.asarray(p.psi)
    dx = np.diff(x)
    s = np.concatenate([[0.0], np.cumsum(0.5 * dx * (psi[1:] + psi[:-1]))])
    try:
        h = grid_spacing(x)
    except InvalidProfile:
        return s
    dpsi = d1(psi, h, +1)
    s -= h * h / 12.0 * (dpsi - dpsi[0])
    s[0] = 0.0
    return s


def sectional_curvatures(h, phi, psi, floor=PHI_FLOOR, order=4):
    """Radial and spherical sectional curvatures from raw arrays on a uniform grid.

    ``psi`` may be a scalar (uniform-arclength gauge). ``order`` picks the
    central stencils (4, 6 or 8); near a pole kSph divides the stencil error of
    phi_s by phi^2, so the higher orders matter there. Pole values use the
    L'Hopital limit kRad(pole) = -phi_sss / phi_s, and the umbilic limit
    kSph(pole) = kRad(pole).
    """
    if order not in _STENCILS:
        raise OutOfRange(f"stencil order {order} not in {sorted(_STENCILS)}")
    D1, D2 = _STENCILS[order]
    m = order // 2
    if np.any(phi[1:-1] < floor):
        i = int(np.argmin(phi[1:-1])) + 1
        raise SingularData(f"phi={phi[i]:.3e} below floor at interior index {i}")
    N = len(phi)
    fe = extend(phi, -1, m)
    phi_x = _stencil(fe, D1, N) / h
    phi_xx = _stencil(fe, D2, N) / (h * h)
    if np.ndim(psi) == 0:
        psi_l = psi_r = float(psi)
        phi_s = phi_x / psi
        phi_ss = phi_xx / (psi * psi)
    else:
        psi_l, psi_r = psi[0], psi[-1]
        psi_x = _stencil(extend(psi, +1, m), D1, N) / h
        phi_s = phi_x / psi
        phi_ss = (phi_xx - phi_x * psi_x / psi) / psi ** 2
    kRad = np.empty_like(phi)
    kSph = np.empty_like(phi)
    inner = phi[1:-1]
    kRad[1:-1] = -phi_ss[1:-1] / inner
    kSph[1:-1] = (1.0 - phi_s[1:-1] ** 2) / inner ** 2
    # phi_ss is odd about each pole, so only its pole-adjacent stencil is needed
    w = 2.0 * D1[m + 1:]
    for i, sgn, psi_p in ((0, 1, psi_l), (-1, -1, psi_r)):
        near = phi_ss[1:m + 1] if i == 0 else phi_ss[-2:-m - 2:-1]
        dphiss = sgn * float(w @ near) / h
        kRad[i] = -dphiss / psi_p / phi_s[i]
        kSph[i] = kRad[i]
    return kRad, kSph


def curvature(p, floor=PHI_FLOOR, order=CURVATURE_ORDER):
    """Curvature field of a warped profile."""
    _check_psi(p)
    kRad, kSph = sectional_curvatures(p.h, np.asarray(p.phi), np.asarray(p.psi), floor, order)
    return CurvatureField.from_sectional(p.n, kRad, kSph)


def _fd_axis(f, h, axis):
    """6th-order central derivative along ``axis``; the result loses 3 points per side."""
    m = 3
    n_out = f.shape[axis] - 2 * m
    out = 0.0
    for k, c in enumerate(_D1_6):
        if c != 0.0:
            out = out + c * np.take(f, np.arange(k, k + n_out), axis=axis)
    return out / h


def _trim(f, axes, m=3):
    sl = [slice(None)] * f.ndim
    for ax in axes:
        sl[ax] = slice(m, f.shape[ax] - m)
    return f[tuple(sl)]


def _generic_sectional(g, steps, pairs):
    """Sectional curvatures of a coordinate metric sampled on a tensor grid.

    ``g`` has shape (d, d, *grid); derivatives are 6th-order differences along
    each grid axis. Christoffel symbols of the first kind are differentiated,
    so the inverse metric only enters algebraically. Returns one array per
    coordinate pair, on the grid trimmed by 6 points per side.
    """
    d = g.shape[0]
    gaxes = list(range(2, g.ndim))
    # dg[c, a, b] = d_c g_ab, trimmed by 3
    dg = np.stack([_trim(_fd_axis(g, steps[c], 2 + c), [ax for ax in gaxes if ax != 2 + c])
                   for c in range(d)])
    # first kind: G[l, j, k] = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
    G = 0.5 * (np.einsum("jlk...->ljk...", dg) + np.einsum("klj...->ljk...", dg) - dg)
    dG = np.stack([_trim(_fd_axis(G, steps[c], 3 + c), [ax + 1 for ax in gaxes if ax != 2 + c])
                   for c in range(d)])
    g_in = _trim(_trim(g, gaxes), gaxes)
    G_in = _trim(G, [ax + 1 for ax in gaxes])
    gm = np.moveaxis(g_in, (0, 1), (-2, -1))
    det = np.linalg.det(gm)
    safe = np.abs(det) > 0
    ginv = np.full_like(gm, np.nan)
    ginv[safe] = np.linalg.inv(gm[safe])
    ginv = np.moveaxis(ginv, (-2, -1), (0, 1))
    out = []
    for a, b in pairs:
        # R_abab = d_a G_{a,bb} - d_b G_{a,ab} + g^{iq}(G_{i,ba} G_{q,ab} - G_{i,aa} G_{q,bb})
        R = dG[a, a, b, b] - dG[b, a, a, b]
        R = R + np.einsum("iq...,i...,q...->...", ginv, G_in[:, b, a], G_in[:, a, b])
        R = R - np.einsum("iq...,i...,q...->...", ginv, G_in[:, a, a], G_in[:, b, b])
        area = g_in[a, a] * g_in[b, b] - g_in[a, b] ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            out.append(R / area)
    return out


def _fill_pole(k, s, L, n_fit=8, skip=1):
    """Replace pole values by an even polynomial fit in distance-to-pole."""
    k = k.copy()
    for side in (0, 1):
        idx = np.arange(skip, skip + n_fit) if side == 0 else len(k) - 1 - np.arange(skip, skip + n_fit)
        r = s[idx] if side == 0 else L - s[idx]
        A = np.vander(r ** 2, 4, increasing=True)
        coef, *_ = np.linalg.lstsq(A, k[idx], rcond=None)
        pole = 0 if side == 0 else len(k) - 1
        rp = 0.0 if side == 0 else L - s[pole]
        k[pole] = np.polyval(coef[::-1], rp ** 2)
    return k


def oracle_curvature_fd(p, dtheta=1e-2, floor=PHI_FLOOR):
    """Independent curvature oracle built from generic Christoffel symbols.

    Embeds the metric as psi^2 dx^2 + phi^2 (dtheta^2 + sin^2 theta dchi^2)
    around theta = pi/2 and computes the two sectional curvatures from a
    generic coordinate Riemann tensor; the Ricci structure follows from the
    warped-product eigenvalue counting. Pole values are extrapolated.
    """
    _check_psi(p)
    phi = np.asarray(p.phi)
    if np.any(phi[1:-1] < floor):
        raise SingularData("phi below floor at an interior point")
    h = p.h
    M = 6
    psi2 = extend(np.asarray(p.psi) ** 2, +1, M)
    phi2 = extend(phi ** 2, +1, M)
    th = math.pi / 2 + dtheta * np.arange(-M, M + 1)
    nchi = 2 * M + 1
    X = len(psi2)
    g = np.zeros((3, 3, X, len(th), nchi))
    g[0, 0] = psi2[:, None, None]
    g[1, 1] = phi2[:, None, None]
    g[2, 2] = phi2[:, None, None] * (np.sin(th) ** 2)[None, :, None]
    kRad, kSph = _generic_sectional(g, (h, dtheta, dtheta), [(0, 1), (1, 2)])
    kRad = kRad[:, 0, 0]
    kSph = kSph[:, 0, 0]
    s = arclength(p)
    kRad = _fill_pole(kRad, s, s[-1])
    kSph = _fill_pole(kSph, s, s[-1])
    return CurvatureField.from_sectional(p.n, kRad, kSph)


def integrate_scalar(p, f):
    """Integral of a radial function over M: int f dmu with dmu = w_{n-1} phi^{n-1} psi dx."""
    _check_psi(p)
    f = np.broadcast_to(np.asarray(f, dtype=float), np.shape(p.x))
    dens = sphere_volume(p.n - 1) * np.abs(np.asarray(p.phi)) ** (p.n - 1) * np.asarray(p.psi)
    return float(trapezoid(f * dens, p.x))


def volume(p):
    return integrate_scalar(p, 1.0)


def phi_of_s(p):
    """Monotone cubic interpolant of phi as a function of arclength."""
    return PchipInterpolator(arclength(p), p.phi)


def geodesic_distance_reduced(p, a, b, ns=161, na=161):
    """Distance between (s_a, alpha_a) and (s_b, alpha_b) in ds^2 + phi(s)^2 dalpha^2.

    alpha is the angle along a common great circle of the cross-sections, so
    only |alpha_a - alpha_b| matters. Distances to a pole are exact (meridians
    minimise); otherwise fast marching is run from both endpoints and averaged,
    which keeps the result symmetric in a and b.
    """
    _check_psi(p)
    s_all = arclength(p)
    L = s_all[-1]
    for sq, aq in (a, b):
        if not (0.0 <= aq <= math.pi):
            raise OutOfRange(f"alpha={aq} outside [0, pi]")
        if not (-1e-12 <= sq <= L * (1 + 1e-12)):
            raise OutOfRange(f"s={sq} outside [0, {L}]")
    (sa, aa), (sb, ab) = a, b
    dalpha = abs(aa - ab)
    eps = 1e-12 * L
    if abs(sa - sb) <= eps and dalpha == 0.0:
        return 0.0
    for sp, so in ((sa, sb), (sb, sa)):
        if sp <= eps:
            return float(so)
        if sp >= L - eps:
            return float(L - so)
    sg = np.linspace(0.0, L, ns)
    phig = np.clip(PchipInterpolator(s_all, p.phi)(sg), 0.0, None)
    phig[0] = phig[-1] = 0.0
    ag = np.linspace(0.0, math.pi, na)
    d = []
    for (s0, s1) in ((sa, sb), (sb, sa)):
        T = eikonal.fast_march(sg, phig, ag, eikonal.local_seeds(sg, phig, ag, s0, 0.0))
        d.append(eikonal.bilinear(T, sg, ag, s1, dalpha))
    return float(0.5 * (d[0] + d[1]))


def round_profile(n, r=1.0, N=257, time=0.0):
    """Round sphere of radius r: phi = r sin(pi x), psi = pi r."""
    x = np.linspace(0.0, 1.0, N)
    phi = r * np.sin(math.pi * x)
    phi[0] = phi[-1] = 0.0
    return WarpProfile(n=n, x=x, psi=np.full(N, math.pi * r), phi=phi, time=time)


def smooth_profile(n, N, psi0=math.pi, psi_modes=(), phi_modes=(), time=0.0):
    """Admissible profile from cosine modulations.

    psi = psi0 (1 + sum_k a_k cos(k pi x)) is even about both poles and
    phi = sin(pi x)/pi * psi * (1 + sum_k b_k (1 - cos(2 k pi x))) is odd about
    both poles with phi_s = +-1 there, so the smooth-pole condition holds exactly.
    """
    x = np.linspace(0.0, 1.0, N)
    psi = np.ones(N)
    for k, a in enumerate(psi_modes, start=1):
        psi += a * np.cos(k * math.pi * x)
    psi *= psi0
    mod = np.ones(N)
    for k, b in enumerate(phi_modes, start=1):
        mod += b * (1.0 - np.cos(2 * k * math.pi * x))
    if np.any(psi <= 0) or np.any(mod <= 0):
        raise InvalidProfile("modulation amplitudes too large")
    phi = np.sin(math.pi * x) / math.pi * psi * mod
    phi[0] = phi[-1] = 0.0
    return WarpProfile(n=n, x=x, psi=psi, phi=phi, time=time)
