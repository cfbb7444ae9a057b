"""Sharp Euclidean Sobolev constants and Aubin-type lower bounds for B(t) on flow slices.

The Aubin inequality on a compact n-manifold reads, for q = 2 and p = 2n/(n-2),

    (int |u|^p)^{2/p} <= (K(n,2)^2 + eps) int |grad u|^2 + B int u^2.

Any single test function u gives a lower bound on the admissible B. Along a
finite-time singularity the best B(t) must blow up; on the shrinking sphere the
constant function alone already shows B(t) >= Vol(t)^{-2/n}.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate
from scipy.special import gamma

from . import geometry as geo
from .errors import ConfigError, InvalidProfile, NotConverged, OutOfRange

Q_GUARD = 1e-6
BUMP_WIDTHS = (0.1, 0.2, 0.4)   # fractions of the total length


def _check_nq(n, q):
    if n < 3:
        raise ConfigError(f"dimension n={n} must be >= 3", path="n")
    if not (1.0 <= q <= n - Q_GUARD):
        raise ConfigError(f"q={q} outside [1, n) (guard band {Q_GUARD})", path="q")


def sobolev_exponent(n, q=2.0):
    """p with 1/p = 1/q - 1/n."""
    _check_nq(n, q)
    return n * q / (n - q)


def talenti_K(n, q=2.0):
    """Smallest K with ||u||_p <= K ||grad u||_q on R^n."""
    _check_nq(n, q)
    if q == 2.0:
        return math.sqrt(4.0 / (n * (n - 2) * geo.sphere_volume(n) ** (2.0 / n)))
    if q == 1.0:
        return 1.0 / (n * geo.unit_ball_volume(n) ** (1.0 / n))
    ratio = gamma(n + 1.0) / (gamma(n / q) * gamma(n + 1.0 - n / q) * geo.sphere_volume(n - 1))
    return (1.0 / n) * ((n * (q - 1)) / (n - q)) ** ((q - 1) / q) * ratio ** (1.0 / n)


def _radial(n, f, R, tail_leading, tail_next):
    """|S^{n-1}| int_0^inf r^{n-1} f(r) dr with a two-term analytic tail past R."""
    head, _ = integrate.quad(lambda r: r ** (n - 1) * f(r), 0.0, R, epsabs=0.0, epsrel=1e-13, limit=400)
    return geo.sphere_volume(n - 1) * (head + tail_leading + tail_next)


def bubble_quotient(n, eps, cut=1000.0, tol=1e-9):
    """(int u^{2n/(n-2)})^{(n-2)/n} / int |grad u|^2 for u = (eps + |x|^2)^{-(n-2)/2}.

    Both integrands are r^{n-1} (eps + r^2)^{-n} up to the factor (n-2)^2 r^2;
    past R = cut sqrt(eps) they are expanded in eps / r^2 and the neglected
    third term bounds the tail error.
    """
    if not eps > 0:
        raise OutOfRange(f"eps={eps} must be positive")
    _check_nq(n, 2.0)
    R = cut * math.sqrt(eps)
    # r^{n-1} (eps + r^2)^{-n} = r^{-n-1} (1 - n eps/r^2 + n(n+1)/2 eps^2/r^4 - ...)
    mass_tail = (R ** -n / n, -n * eps * R ** (-n - 2) / (n + 2))
    # (n-2)^2 r^{n+1} (eps + r^2)^{-n} = (n-2)^2 r^{1-n} (1 - n eps/r^2 + ...)
    grad_tail = ((n - 2) * R ** (2 - n), -(n - 2) ** 2 * eps * R ** (-n))
    bound = max(n * (n + 1) / 2 * eps ** 2 * R ** (-n - 4) / (n + 4) / (R ** -n / n),
                n * (n + 1) / 2 * eps ** 2 * R ** (-n - 2) / (n + 2) / (R ** (2 - n) / (n - 2)))
    if bound > tol:
        raise NotConverged(f"tail bound {bound:.3g} exceeds tolerance {tol:.3g}")
    p = 2.0 * n / (n - 2)
    lhs = _radial(n, lambda r: (eps + r * r) ** (-n), R, *mass_tail)
    grad = _radial(n, lambda r: (n - 2) ** 2 * r * r * (eps + r * r) ** (-n), R, *grad_tail)
    return lhs ** (2.0 / p) / grad


def sobolev_terms(profile, u):
    """(lhs, gradTerm, massTerm) of the q = 2 Aubin inequality for a radial u on a slice.

    lhs = (int |u|^{2n/(n-2)})^{(n-2)/n}, gradTerm = int (u_x/psi)^2 and
    massTerm = int u^2, all against the slice's volume form.
    """
    n = profile.n
    u = np.asarray(u, dtype=float)
    if u.shape != np.shape(profile.x):
        raise InvalidProfile(f"test function has shape {u.shape}, grid has {np.shape(profile.x)}")
    if not np.all(np.isfinite(u)):
        raise InvalidProfile("test function has non-finite values")
    p = 2.0 * n / (n - 2)
    ux = geo.d1(u, profile.h, +1)
    lhs = geo.integrate_scalar(profile, np.abs(u) ** p) ** (2.0 / p)
    grad = geo.integrate_scalar(profile, (ux / np.asarray(profile.psi)) ** 2)
    mass = geo.integrate_scalar(profile, u * u)
    return lhs, grad, mass


@dataclass(frozen=True)
class TestFamily:
    """Constants plus smooth radial bumps (1 - (d/w)^2)^3 centred at the poles and neck."""

    __test__ = False  # not a pytest class

    widths: tuple = BUMP_WIDTHS
    centers: tuple = ("poles", "neck")
    kind: str = "bumps"

    def __post_init__(self):
        if self.kind != "bumps":
            raise ConfigError(f"test family {self.kind!r} is not representable for rotationally "
                              "symmetric spheres; only 'bumps' is supported", path="testFamily.kind")
        if any(w <= 0 for w in self.widths):
            raise ConfigError("bump widths must be positive", path="testFamily.widths")

    def functions(self, profile):
        """List of (label, u on the grid)."""
        s = geo.arclength(profile)
        L = s[-1]
        out = [("constant", np.ones_like(s))]
        cs = []
        if "poles" in self.centers:
            cs += [("south", 0.0), ("north", L)]
        if "neck" in self.centers:
            cs.append(("neck", _neck_s(profile, s)))
        for name, c in cs:
            for w in self.widths:
                z = np.clip(np.abs(s - c) / (w * L), 0.0, 1.0)
                out.append((f"{name}:{w:g}", (1.0 - z * z) ** 3))
        return out


def _neck_s(profile, s):
    phi = np.asarray(profile.phi)
    inner = phi[1:-1]
    is_min = (inner <= phi[:-2]) & (inner <= phi[2:])
    if not np.any(is_min):
        return 0.5 * s[-1]
    idx = np.flatnonzero(is_min) + 1
    return float(s[idx[np.argmin(phi[idx])]])


def b_lower_bound(profile, family=None, epsilon=0.0):
    """max over the family of (lhs - (K^2 + eps) grad) / mass, clamped at 0."""
    if epsilon < 0:
        raise OutOfRange(f"epsilon={epsilon} must be >= 0")
    family = family or TestFamily()
    K2 = talenti_K(profile.n, 2.0) ** 2
    best = 0.0
    for _, u in family.functions(profile):
        lhs, grad, mass = sobolev_terms(profile, u)
        if mass > 0:
            best = max(best, (lhs - (K2 + epsilon) * grad) / mass)
    return best


def aubin_B_lower_bound(traj, t, family=None, epsilon=0.0):
    """Lower bound for the Aubin constant B on the snapshot at time t."""
    i = traj.index_of(t)
    if i is None:
        raise OutOfRange(f"t={t} is not a snapshot time")
    return b_lower_bound(traj.states[i].profile, family, epsilon)


@dataclass(frozen=True)
class SobolevProbe:
    n: int
    q: float
    p: float
    K: float
    BLowerBounds: tuple            # ((t, B_min), ...)
    testFamily: TestFamily = field(default_factory=TestFamily)
    epsilon: float = 0.0

    @property
    def times(self):
        return np.array([t for t, _ in self.BLowerBounds])

    @property
    def values(self):
        return np.array([b for _, b in self.BLowerBounds])


def probe(traj, family=None, epsilon=0.0, indices=None):
    """B_min over the snapshots of a trajectory (all of them by default)."""
    family = family or TestFamily()
    n = traj.n
    idx = range(len(traj.states)) if indices is None else indices
    rows = tuple((traj.states[i].time, b_lower_bound(traj.states[i].profile, family, epsilon))
                 for i in idx)
    return SobolevProbe(n=n, q=2.0, p=sobolev_exponent(n), K=talenti_K(n), BLowerBounds=rows,
                        testFamily=family, epsilon=epsilon)


def fit_blowup_exponent(times, values, T):
    """Slope of log B against log(T - t), i.e. B ~ (T - t)^slope."""
    times, values = np.asarray(times, float), np.asarray(values, float)
    keep = (times < T) & (values > 0)
    if keep.sum() < 2:
        raise NotConverged("need at least two positive samples before T")
    x = np.log(T - times[keep])
    y = np.log(values[keep])
    return float(np.polyfit(x, y, 1)[0])
