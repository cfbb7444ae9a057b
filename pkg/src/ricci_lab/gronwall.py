"""Comparison-ODE machinery bounding sup|Rm| by a space-time curvature integral.

With f(t) = sup|Rm|, G(t) = int |Rm|^{n/2+1} / log(1 + |Rm|) dmu and
psi(s) = s log(1 + s), an inequality f <= C int psi(f) G + C1 is dominated by
the solution of h' = C psi(h) G, h(0) = C1. Separating variables,

    int_{h0}^{h(t)} ds / psi(s) = C int_0^t G,

and because int^inf ds/psi diverges, a finite int G keeps h (hence f) finite.
"""

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize

from . import functionals as fn
from .errors import NotConverged, OutOfRange

A_MIN = 1e-12          # int_0 ds/psi diverges like 1/a
RTOL = 1e-6


def psi(s):
    """s log(1 + s)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(np.isnan(s_arr)):
        raise OutOfRange("psi is defined for s >= 0")
    out = s_arr * np.log1p(s_arr)
    return float(out) if out.ndim == 0 else out


def _check_ab(a, b):
    if not (a >= A_MIN and b >= a):
        raise OutOfRange(f"need {A_MIN} <= a <= b, got a={a}, b={b}")


def _quad_logs(a, b):
    # u = ln s: ds/psi = du / log(1 + e^u)
    val, _ = integrate.quad(lambda u: 1.0 / math.log1p(math.exp(u)), math.log(a), math.log(b),
                            epsabs=0.0, epsrel=1e-13, limit=500)
    return val


_GL_X, _GL_W = leggauss(20)


def _gauss_loglog(a, b, tol=1e-14):
    # w = ln ln(1 + s): ds/psi = (1 + s)/s dw; composite Gauss-Legendre with panel doubling
    def s_of(w):
        return np.expm1(np.exp(w))

    def g(w):
        s = s_of(w)
        return (1.0 + s) / s

    w0, w1 = math.log(math.log1p(a)), math.log(math.log1p(b))

    def composite(m):
        edges = np.linspace(w0, w1, m + 1)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        return float(np.sum(half[:, None] * _GL_W[None, :] * g(pts)))

    m, prev = 4, composite(4)
    while m < 1 << 16:
        m *= 2
        cur = composite(m)
        if abs(cur - prev) <= tol * max(abs(cur), 1.0):
            return cur
        prev = cur
    raise NotConverged("composite Gauss-Legendre did not converge")


def inv_psi_integral(a, b, scheme="quad"):
    """int_a^b ds / psi(s).

    ``scheme`` selects adaptive quadrature in ln s ("quad") or composite
    Gauss-Legendre in ln ln(1 + s) ("gauss"), in which the integrand tends to 1
    and the large-s log-log growth is exact. Both need a >= 1e-12 since the
    integral diverges like 1/a as a -> 0.
    """
    _check_ab(a, b)
    if a == b:
        return 0.0
    if scheme == "quad":
        return _quad_logs(a, b)
    if scheme == "gauss":
        return _gauss_loglog(a, b)
    raise OutOfRange(f"unknown scheme {scheme!r}")


def invert_inv_psi(a, target):
    """b with int_a^b ds/psi = target (always finite since the integral is unbounded)."""
    _check_ab(a, a)
    if target < 0:
        raise OutOfRange("target must be non-negative")
    if target == 0:
        return float(a)
    # work in w = ln ln(1 + b), where the integral grows roughly linearly
    wa = math.log(math.log1p(a))
    hi = wa + target + 1.0
    while inv_psi_integral(a, math.expm1(math.exp(hi))) < target:
        hi += target + 1.0
        if hi > 6.5:   # b would overflow a double
            return math.inf
    # the w round trip can land an ulp below a
    b_of = lambda w: max(a, math.expm1(math.exp(w)))
    if inv_psi_integral(a, b_of(wa)) >= target:
        return float(a)   # target below what one ulp of b resolves
    w = optimize.brentq(lambda w: inv_psi_integral(a, b_of(w)) - target, wa, hi, xtol=1e-15, rtol=1e-14)
    return b_of(w)


def _rk4_interval(h, t0, t1, g0, g1, C, m):
    dt = (t1 - t0) / m
    slope = (g1 - g0) / (t1 - t0)

    def rhs(t, y):
        return C * psi(y) * (g0 + slope * (t - t0))

    t = t0
    for _ in range(m):
        k1 = rhs(t, h)
        k2 = rhs(t + dt / 2, h + dt / 2 * k1)
        k3 = rhs(t + dt / 2, h + dt / 2 * k2)
        k4 = rhs(t + dt, h + dt * k3)
        h = h + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return h


def _sweep(times, G, C, h0, substeps):
    h = np.empty(len(times))
    h[0] = h0
    for k in range(len(times) - 1):
        h[k + 1] = _rk4_interval(h[k], times[k], times[k + 1], G[k], G[k + 1], C, substeps[k])
        if not math.isfinite(h[k + 1]):
            raise NotConverged(f"comparison solution overflowed at t={times[k + 1]:.6g}")
    return h


def integrate_H(times, G, C, h0, rtol=RTOL):
    """Solve h' = C psi(h) G(t), h(t0) = h0, with G linear between samples.

    Each interval is substepped with RK4 until doubling the substeps moves the
    endpoint by < rtol/100; the whole solution is then recomputed with every
    substep count doubled and NotConverged raised if any sample moves by more
    than rtol (relative).
    """
    times = np.asarray(times, dtype=float)
    G = np.asarray(G, dtype=float)
    if times.ndim != 1 or times.shape != G.shape or len(times) < 1:
        raise OutOfRange("times and G must be matching 1-D series")
    if np.any(np.diff(times) <= 0):
        raise OutOfRange("times must be strictly increasing")
    if np.any(G < 0) or not np.all(np.isfinite(G)):
        raise OutOfRange("G must be finite and non-negative")
    if not (C > 0 and h0 > 0):
        raise OutOfRange("C and h0 must be positive")
    subs = []
    h = h0
    for k in range(len(times) - 1):
        m = 1
        a = _rk4_interval(h, times[k], times[k + 1], G[k], G[k + 1], C, m)
        while True:
            b = _rk4_interval(h, times[k], times[k + 1], G[k], G[k + 1], C, 2 * m)
            m *= 2
            if not math.isfinite(b):
                raise NotConverged(f"comparison solution overflowed at t={times[k + 1]:.6g}")
            if abs(b - a) <= 1e-2 * rtol * abs(b) or m >= 1 << 20:
                break
            a = b
        subs.append(m)
        h = b
    coarse = _sweep(times, G, C, h0, subs)
    fine = _sweep(times, G, C, h0, [2 * m for m in subs])
    rel = np.abs(fine - coarse) / np.abs(fine)
    if np.any(rel > rtol):
        raise NotConverged(f"step halving changed h by {rel.max():.3g} (relative)")
    return fine


@dataclass(frozen=True)
class GronwallRun:
    C: float
    h0: float
    times: np.ndarray
    G: np.ndarray
    h: np.ndarray
    f: np.ndarray = None

    def identity_error(self):
        """max relative gap in int_{h0}^{h} ds/psi = C int G (the separated form)."""
        lhs = np.array([inv_psi_integral(self.h0, max(v, self.h0)) for v in self.h])
        rhs = self.C * fn.cumulative_trapezoid(self.times, self.G)
        return float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)))

    def dominates(self):
        if self.f is None:
            return None
        return bool(np.all(np.asarray(self.f) <= self.h * (1 + 1e-12)))


def gronwall_run(times, G, C, h0, f=None):
    h = integrate_H(times, G, C, h0)
    return GronwallRun(C=float(C), h0=float(h0), times=np.asarray(times, float),
                       G=np.asarray(G, float), h=h, f=None if f is None else np.asarray(f, float))


# --------------------------------------------------------------------------
# checks on flow trajectories

@dataclass(frozen=True)
class DoublingResult:
    t_double: float
    product: float        # t_d sup|Rm(0)|, an upper-bound witness for c(n)
    passed: bool


def doubling_check(traj, floor=0.1):
    """First time sup|Rm| reaches twice its initial value.

    The crossing is located by linear interpolation of 1/sup|Rm| between the
    bracketing snapshots, which is exact for type-I growth like the sphere's.
    """
    sup = traj.sup_rm
    t = traj.times
    target = 2.0 * sup[0]
    hit = np.flatnonzero(sup >= target)
    if len(hit) == 0:
        raise NotConverged("sup|Rm| never doubled on this trajectory")
    k = int(hit[0])
    if k == 0:
        t_d = float(t[0])
    else:
        a, b = 1.0 / sup[k - 1], 1.0 / sup[k]
        t_d = float(t[k - 1] + (t[k] - t[k - 1]) * (a - 1.0 / target) / (a - b))
    product = (t_d - t[0]) * sup[0]
    return DoublingResult(t_double=t_d, product=float(product), passed=bool(product > floor))


@dataclass(frozen=True)
class MeanValueResult:
    t: float
    lhs: float            # sup over M x [0, t] of |Rm|
    rhs: float            # int_0^t int |Rm|^{n/2+2}
    C0: float             # empirical witness, max over samples of (lhs - C1) / rhs
    C1: float
    c_n: float
    T: float


def mean_value_check(traj, t, T=None, c_n=None):
    """Smallest C0 making sup_{[0,s]} f <= C0 int_0^s int |Rm|^{n/2+2} + C1 hold for s <= t.

    C1 = T max{2 sup|Rm(0)|, 2 sup|Rm(0)|^2 / c(n)} with c(n) taken from the
    doubling check (or from the data span if sup|Rm| never doubles) and T from
    the singular-time fit when the run blew up, else the last snapshot time.
    """
    times = traj.times
    if not (times[0] <= t <= times[-1] * (1 + 1e-12)):
        raise OutOfRange(f"t={t} outside [{times[0]}, {times[-1]}]")
    sup0 = float(traj.sup_rm[0])
    if c_n is None:
        try:
            c_n = doubling_check(traj).product
        except NotConverged:
            c_n = float((times[-1] - times[0]) * sup0)
    if not c_n > 0:
        raise NotConverged("c(n) is undetermined: the trajectory spans no time")
    if T is None:
        T = _existence_time(traj)
    C1 = T * max(2.0 * sup0, 2.0 * sup0 ** 2 / c_n)
    stl = fn.space_time_lp(traj, traj.n / 2.0 + 2.0, t, fit=False)
    k = int(np.searchsorted(times, t * (1 + 1e-12), side="right"))
    lhs_series = np.maximum.accumulate(traj.sup_rm[:k])
    rhs_series = stl.cumulative[:k]
    excess = lhs_series - C1
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where((excess > 0) & (rhs_series > 0), excess / rhs_series, 0.0)
    return MeanValueResult(t=float(t), lhs=float(lhs_series[-1]), rhs=float(rhs_series[-1]),
                           C0=float(np.max(w)), C1=float(C1), c_n=float(c_n), T=float(T))


def _existence_time(traj):
    from .flow import estimate_singular_time
    if traj.blew_up():
        try:
            return estimate_singular_time(traj).T
        except NotConverged as exc:
            if exc.result is not None:
                return exc.result.T
    return float(traj.times[-1])


# --------------------------------------------------------------------------
# verdict

@dataclass(frozen=True)
class ExtensionReport:
    run: GronwallRun
    totalG: float
    diagnostic: object     # DivergenceDiagnostic or None
    hBound: float          # sup h implied by the separated identity on the observed window
    divergent: bool
    verdict: str


EXTENDABLE = "extendable on observed window: criterion bounded, so sup|Rm| stays bounded"
NO_GUARANTEE = ("no extension guarantee: criterion integral diverges, consistent with "
                "(not proof of) a singular time")


def extension_verdict(times, G, f, C, h0, T=None):
    """Integrate the comparison ODE and decide whether the data guarantee extension.

    Without T the series is treated as a window away from any singular time.
    With T the growth law of int G is fitted; any unbounded law gives the
    cautious verdict, since divergence only fails to rule a singularity out.
    """
    times = np.asarray(times, float)
    G = np.asarray(G, float)
    run = gronwall_run(times, G, C, h0, f)
    cum = fn.cumulative_trapezoid(times, G)
    diag = None
    divergent = False
    if T is not None:
        diag = fn.fit_growth_law(times, cum, T)
        divergent = diag.law != "bounded"
    total = float(cum[-1])
    if divergent:
        hb = math.inf
    else:
        total_bound = total if diag is None else max(total, diag.limit)
        hb = invert_inv_psi(h0, C * total_bound)
    verdict = NO_GUARANTEE if divergent or not math.isfinite(hb) else EXTENDABLE
    return ExtensionReport(run=run, totalG=total, diagnostic=diag, hBound=float(hb),
                           divergent=divergent, verdict=verdict)
