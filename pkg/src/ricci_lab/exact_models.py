"""Closed-form Ricci flows: the shrinking round sphere and the shrinking cylinder.

Round S^n of radius r has |Ric| = sqrt(n)(n-1)/r^2 and |Rm| = sqrt(2n(n-1))/r^2;
under the flow r(t)^2 = r0^2 - 2(n-1)t. The cylinder S^{n-1} x R shrinks by
r(t)^2 = r0^2 - 2(n-2)t.
"""

from dataclasses import dataclass
import math

from scipy import integrate

from .errors import ConfigError, OutOfRange
from .geometry import round_profile, sphere_volume

CRITERIA = ("intSupRic", "intSupRm", "spaceTimeLp", "logWeighted", "pointwiseF")


@dataclass(frozen=True)
class SphereModel:
    n: int
    r0: float = 1.0

    def __post_init__(self):
        if self.r0 <= 0 or self.n < 3:
            raise ConfigError(f"invalid sphere model n={self.n}, r0={self.r0}")

    @property
    def T(self):
        return self.r0 ** 2 / (2.0 * (self.n - 1))

    def radius2(self, t):
        self._check(t)
        return self.r0 ** 2 - 2.0 * (self.n - 1) * t

    def radius(self, t):
        return math.sqrt(self.radius2(t))

    def sectional(self, t):
        return 1.0 / self.radius2(t)

    def norm_rm(self, t):
        return math.sqrt(2 * self.n * (self.n - 1)) / self.radius2(t)

    def norm_ric(self, t):
        return math.sqrt(self.n) * (self.n - 1) / self.radius2(t)

    def volume(self, t):
        return sphere_volume(self.n) * self.radius(t) ** self.n

    def _check(self, t):
        if not (0.0 <= t < self.T):
            raise OutOfRange(f"t={t} outside [0, T={self.T})")


@dataclass(frozen=True)
class CylinderModel:
    n: int
    r0: float = 1.0

    def __post_init__(self):
        if self.r0 <= 0 or self.n < 3:
            raise ConfigError(f"invalid cylinder model n={self.n}, r0={self.r0}")

    @property
    def T(self):
        return self.r0 ** 2 / (2.0 * (self.n - 2))

    def norm_rm(self, r):
        return math.sqrt(2 * (self.n - 1) * (self.n - 2)) / r ** 2


def sphere_profile_at(m, t, N):
    """Exact round profile of the sphere model at time t."""
    return round_profile(m.n, m.radius(t), N, time=t)


def cylinder_radius_at(m, t):
    if not (0.0 <= t < m.T):
        raise OutOfRange(f"t={t} outside [0, T={m.T})")
    return math.sqrt(m.r0 ** 2 - 2.0 * (m.n - 2) * t)


def _log_ratio(m, t):
    return math.log(m.T / (m.T - t))


def sphere_criterion_closed_form(m, which, t, p=None):
    """Partial integral over [0, t] of an extension criterion on the shrinking sphere.

    ``which`` is one of CRITERIA; ``spaceTimeLp`` takes the exponent ``p``.
    The log-weighted criterion has no elementary antiderivative; it is the
    one-dimensional integral in the variable ln(1/(T - t)), evaluated by quad.
    """
    if which not in CRITERIA:
        raise ConfigError(f"unknown criterion id {which!r}", path="which")
    if not (0.0 <= t < m.T):
        raise OutOfRange(f"t={t} outside [0, T={m.T})")
    n, T = m.n, m.T
    if t == 0.0:
        return 0.0
    if which in ("intSupRic", "pointwiseF"):
        return math.sqrt(n) / 2.0 * _log_ratio(m, t)
    if which == "intSupRm":
        return math.sqrt(2 * n * (n - 1)) / (2.0 * (n - 1)) * _log_ratio(m, t)
    if which == "spaceTimeLp":
        if p is None or p < 1:
            raise ConfigError("spaceTimeLp needs an exponent p >= 1", path="p")
        A = math.sqrt(2 * n * (n - 1))
        e = n / 2.0 - p
        pref = sphere_volume(n) * A ** p * (2.0 * (n - 1)) ** e
        if abs(e + 1.0) < 1e-14:
            return pref * _log_ratio(m, t)
        return pref * (T ** (e + 1) - (T - t) ** (e + 1)) / (e + 1)
    # logWeighted: integrand Vol |Rm|^{n/2+1} / log(1 + |Rm|)
    A = math.sqrt(2 * n * (n - 1))
    pref = sphere_volume(n) * A ** (n / 2.0 + 1) / (2.0 * (n - 1))
    c = A / (2.0 * (n - 1))  # |Rm| = c / (T - t)
    l0, l1 = math.log(1.0 / T), math.log(1.0 / (T - t))
    val, _ = integrate.quad(lambda l: 1.0 / math.log1p(c * math.exp(l)), l0, l1,
                            epsabs=0.0, epsrel=1e-12, limit=200)
    return pref * val


def sphere_tail_descriptor(m, which, p=None):
    """Divergence law and rate of a criterion on the sphere as t -> T.

    Returns (law, rate, limit) with law in {"bounded", "log", "log-log"}; rate
    multiplies ln(1/(T-t)) for "log" and ln ln(1/(T-t)) for "log-log";
    ``limit`` is the finite total for "bounded" laws.
    """
    n = m.n
    if which in ("intSupRic", "pointwiseF"):
        return "log", math.sqrt(n) / 2.0, None
    if which == "intSupRm":
        return "log", math.sqrt(2 * n * (n - 1)) / (2.0 * (n - 1)), None
    if which == "spaceTimeLp":
        if p is None or p < 1:
            raise ConfigError("spaceTimeLp needs an exponent p >= 1", path="p")
        A = math.sqrt(2 * n * (n - 1))
        e = n / 2.0 - p
        pref = sphere_volume(n) * A ** p * (2.0 * (n - 1)) ** e
        if abs(e + 1.0) < 1e-14:
            return "log", pref, None
        if e > -1:
            return "bounded", 0.0, pref * m.T ** (e + 1) / (e + 1)
        return "power", pref, None
    if which == "logWeighted":
        A = math.sqrt(2 * n * (n - 1))
        return "log-log", sphere_volume(n) * A ** (n / 2.0 + 1) / (2.0 * (n - 1)), None
    raise ConfigError(f"unknown criterion id {which!r}", path="which")
