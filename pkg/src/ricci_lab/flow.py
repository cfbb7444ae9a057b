"""Symmetry-reduced Ricci flow dg/dt = -2 Ric on warped profiles.

At fixed coordinate x (so every grid point is a fixed point of M) the flow of
g = psi^2 dx^2 + phi^2 g_{S^{n-1}} reads

    phi_t = phi_ss - (n-2)(1 - phi_s^2)/phi = -(kRad + (n-2) kSph) phi
    psi_t = (n-1)(phi_ss/phi) psi         = -(n-1) kRad psi

The integrator works in the uniform-arclength gauge (psi spatially constant),
which is the same flow up to a tangential diffeomorphism; see ``_rates``. Time
stepping is explicit RK4 under a parabolic CFL limit and a curvature limit.
"""

import dataclasses
from dataclasses import dataclass, field
import enum
import functools
import logging
import math

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import geometry as geo
from .errors import ConfigError, NotConverged, RicciLabError, SingularData, StepUnderflow

log = logging.getLogger(__name__)


class StopReason(str, enum.Enum):
    ReachedTime = "ReachedTime"
    CurvatureCeiling = "CurvatureCeiling"
    StepUnderflow = "StepUnderflow"
    PinchDetected = "PinchDetected"


BLOWUP_REASONS = (StopReason.CurvatureCeiling, StopReason.PinchDetected, StopReason.StepUnderflow)


@dataclass(frozen=True)
class StepControl:
    cflSafety: float = 0.8
    curvatureSafety: float = 0.02
    dtMin: float = 1e-15
    qMax: float = 1e6
    remeshThreshold: float = 4.0
    pinchCells: float = 4.0

    def __post_init__(self):
        for name in ("cflSafety", "curvatureSafety", "dtMin", "qMax", "remeshThreshold", "pinchCells"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", path=name)
        if self.cflSafety > 1.0:
            raise ConfigError("cflSafety must be <= 1", path="cflSafety")


# --------------------------------------------------------------------------
# initial data

@dataclass(frozen=True)
class RoundSphere:
    r0: float = 1.0


@dataclass(frozen=True)
class Dumbbell:
    """Two capped-cylinder bulbs joined by a cylindrical neck.

    With psi = L constant, phi = (1 - B) C + B * neckRadius where
    C(x) = capRadius * tanh(L min(x, 1-x) / capRadius) and B is a smooth plateau
    equal to 1 on |x - 1/2| <= neckWidth/2, decaying to 0 across ``transition``.
    L is chosen so the bulbs reach tanh(capExtent) of capRadius.
    """

    neckRadius: float = 0.3
    capRadius: float = 1.0
    neckWidth: float = 0.2
    transition: float = 0.1
    capExtent: float = 3.0


def _smooth_step(z):
    z = np.clip(z, 0.0, 1.0)
    out = np.zeros_like(z)
    mid = (z > 0) & (z < 1)
    a = np.exp(-1.0 / z[mid])
    b = np.exp(-1.0 / (1.0 - z[mid]))
    out[mid] = a / (a + b)
    out[z >= 1] = 1.0
    return out


def initial_profile(kind, n, N):
    """Initial warped profile for a RoundSphere or Dumbbell description."""
    if n < 3 or N < geo.MIN_POINTS:
        raise ConfigError(f"need n >= 3 and N >= {geo.MIN_POINTS}")
    if isinstance(kind, RoundSphere):
        if kind.r0 <= 0:
            raise ConfigError("r0 must be positive", path="r0")
        return geo.round_profile(n, kind.r0, N).validate()
    if isinstance(kind, Dumbbell):
        rn, R, w, tau = kind.neckRadius, kind.capRadius, kind.neckWidth, kind.transition
        if min(rn, R, w, tau, kind.capExtent) <= 0:
            raise ConfigError("dumbbell parameters must be positive")
        if rn >= R:
            raise ConfigError("neckRadius must be smaller than capRadius", path="neckRadius")
        bulb = 0.5 - w / 2 - tau
        if bulb <= 0:
            raise ConfigError("neckWidth + 2*transition must be < 1", path="neckWidth")
        L = kind.capExtent * R / bulb
        x = np.linspace(0.0, 1.0, N)
        C = R * np.tanh(L * np.minimum(x, 1.0 - x) / R)
        B = _smooth_step((w / 2 + tau - np.abs(x - 0.5)) / tau)
        phi = (1.0 - B) * C + B * rn
        phi[0] = phi[-1] = 0.0
        return geo.WarpProfile(n=n, x=x, psi=np.full(N, L), phi=phi).validate()
    raise ConfigError(f"unknown initial data {kind!r}")


# --------------------------------------------------------------------------
# stepping
#
# The state is integrated in the uniform-arclength gauge: x = s / L(t), so psi is
# the constant L. This differs from the fixed-x system by the tangential
# reparametrization x_t = (x W(L) - W(s)) / L with W(s) = (n-1) int_0^s phi_ss/phi,
# i.e. by a time-dependent diffeomorphism; curvature quantities at a given
# manifold point are unchanged. In fixed-x form the psi equation transports
# data out of the poles at unbounded speed and its central discretization has a
# growing mode of size ~ 1/ds^2 there.

_SLAVE_NODES = 3   # nodes per pole whose rates come from the regular extrapolation
_SLAVE_TERMS = 3   # even monomials d^2, d^4, d^6 in the extrapolation


class _Grid:
    """Per-resolution constants of the arclength-gauge integrator."""

    def __init__(self, N):
        j = np.arange(N, dtype=float)
        self.N = N
        self.h = 1.0 / (N - 1)
        self.frac = j / (N - 1)
        self.rfrac = (N - 1 - j) / (N - 1)
        # sin(pi x)/pi evaluated from the nearer pole, so it is mirror-exact
        self.b = np.minimum(np.sin(np.pi * self.frac), np.sin(np.pi * self.rfrac)) / np.pi
        m, k = _SLAVE_NODES, _SLAVE_TERMS
        powers = np.arange(1, k + 1) * 2
        A = self.frac[m:m + k, None] ** powers
        B = self.frac[:m, None] ** powers
        self.extrap = B @ np.linalg.inv(A)


@functools.lru_cache(maxsize=16)
def _grid(N):
    return _Grid(N)


def _cumulative(f, hs):
    """Left and right cumulative integrals of an even-about-the-poles f.

    Each cell uses the 4th-order four-point rule with ghost values from the even
    reflection; the right-anchored sums mirror the left-anchored ones.
    """
    fe = np.concatenate([f[1:2], f, f[-2:-1]])
    cells = hs / 24.0 * (13.0 * (fe[1:-2] + fe[2:-1]) - (fe[:-3] + fe[3:]))
    left = np.concatenate([[0.0], np.cumsum(cells)])
    right = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    return left, right


def _regularize_poles(w_t, g):
    """Replace near-pole values of an even, pole-vanishing rate by its extrapolation.

    Both poles use the same (mirrored) arithmetic so reflection symmetry is exact.
    """
    m, k = _SLAVE_NODES, _SLAVE_TERMS
    for vals in (w_t, w_t[::-1]):  # the reversed view writes through
        vals[:m] = g.extrap @ vals[m:m + k]
    return w_t


def _rates(n, phi, L, curv=None):
    """Time derivatives (phi_t, L_t, V) in the uniform-arclength gauge.

    V(x) = x W(L) - W(s) is the rate at which the arclength of the point at
    fractional position x is transported; material points move with dx/dt = -V/L.
    ``curv`` optionally supplies precomputed (kRad, kSph) for this state.
    """
    g = _grid(len(phi))
    hs = L * g.h
    kRad, kSph = curv if curv is not None else geo.sectional_curvatures(g.h, phi, L)
    # W(s) = (n-1) int_0^s phi_ss/phi ds = -(n-1) int_0^s kRad ds
    left, right = _cumulative(kRad, hs)
    total = 0.5 * (left[-1] + right[0])
    # V = x W(L) - W(s); average of the left- and right-anchored forms
    V = -(n - 1) * 0.5 * ((g.frac * total - left) + (right - g.rfrac * total))
    L_t = -(n - 1) * total
    phi_s = geo.d1(phi, g.h, -1) / L
    phi_t = -(kRad + (n - 2) * kSph) * phi + phi_s * V
    # near the poles the rate is slaved to a regular extrapolation of
    # w = phi / (L b), whose rate is even and vanishes at the poles
    w_t = np.zeros(g.N)
    w_t[1:-1] = (phi_t[1:-1] - phi[1:-1] * (L_t / L)) / (L * g.b[1:-1])
    _regularize_poles(w_t, g)
    phi_t = L * g.b * w_t + phi * (L_t / L)
    phi_t[0] = phi_t[-1] = 0.0
    return phi_t, L_t, V


def admissible_dt(p, ctl, sup_rm=None):
    """Step size min(cfl * ds_min^2 / 2, curvatureSafety / sup|Rm|)."""
    ds_min = float(np.min(p.psi)) * p.h
    dt = ctl.cflSafety * ds_min ** 2 / 2.0
    if sup_rm is None:
        sup_rm = float(np.max(geo.curvature(p).normRm))
    if sup_rm > 0:
        dt = min(dt, ctl.curvatureSafety / sup_rm)
    return dt


def _check(phi, L):
    if not np.isfinite(L) or L <= 0 or not np.all(np.isfinite(phi)):
        raise SingularData("step produced a degenerate metric")
    if np.any(phi[1:-1] < geo.PHI_FLOOR):
        raise SingularData("step drove phi below the pinch floor")


def _rk4(n, phi0, L0, dt, markers=None, curv0=None):
    g = _grid(len(phi0))

    def f(phi, L, X, curv=None):
        _check(phi, L)
        phi_t, L_t, V = _rates(n, phi, L, curv)
        if X is None:
            return phi_t, L_t, None
        return phi_t, L_t, -np.interp(X, g.frac, V) / L

    def add(state, k, c):
        phi, L, X = state
        return (phi + c * k[0], L + c * k[1], None if X is None else np.clip(X + c * k[2], 0.0, 1.0))

    s0 = (phi0, L0, markers)
    k1 = f(*s0, curv0)
    k2 = f(*add(s0, k1, 0.5 * dt))
    k3 = f(*add(s0, k2, 0.5 * dt))
    k4 = f(*add(s0, k3, dt))
    phi = phi0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    L = L0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    X = None
    if markers is not None:
        X = np.clip(markers + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]), 0.0, 1.0)
        X[0], X[-1] = 0.0, 1.0
    phi[0] = phi[-1] = 0.0
    _check(phi, L)
    return phi, L, X


def _arclength_gauge(p):
    psi = np.asarray(p.psi)
    if np.ptp(psi) <= 1e-14 * psi[0]:
        return p, np.array(p.x)
    return remesh(p)


def step(p, ctl, dt=None, sup_rm=None):
    """One RK4 step of the flow; returns (new profile, dt used).

    Profiles whose psi is not constant are first resampled to uniform arclength.
    """
    p, _ = _arclength_gauge(p)
    if dt is None:
        dt = admissible_dt(p, ctl, sup_rm)
    if dt < ctl.dtMin:
        raise StepUnderflow(f"dt={dt:.3e} below dtMin={ctl.dtMin:.3e}")
    phi, L, _ = _rk4(p.n, np.array(p.phi), float(p.psi[0]), dt)
    return geo.WarpProfile(n=p.n, x=p.x, psi=np.full(p.N, L), phi=phi, time=p.time + dt), dt


def remesh(p):
    """Resample to uniform arclength; returns (profile, new coordinate of each old node)."""
    s = geo.arclength(p)
    L = s[-1]
    interp = PchipInterpolator(s, p.phi)
    phi = interp(p.x * L)
    phi[0] = phi[-1] = 0.0
    new = geo.WarpProfile(n=p.n, x=p.x, psi=np.full(p.N, L), phi=phi, time=p.time)
    return new, s / L


# --------------------------------------------------------------------------
# trajectories

@dataclass(frozen=True, eq=False)
class FlowState:
    time: float
    profile: geo.WarpProfile
    curvature: geo.CurvatureField
    supRm: float
    supRic: float
    argmax_s: float
    doubling: int = None
    # current x-coordinate of each material point that sat on the initial grid
    material: np.ndarray = None
    kappa: float = None


@dataclass
class FlowTrajectory:
    states: list
    meta: dict = field(default_factory=dict)
    stopReason: StopReason = None

    @property
    def times(self):
        return np.array([s.time for s in self.states])

    @property
    def sup_rm(self):
        return np.array([s.supRm for s in self.states])

    @property
    def sup_ric(self):
        return np.array([s.supRic for s in self.states])

    @property
    def n(self):
        return self.states[0].profile.n

    def index_of(self, t, rtol=1e-9):
        """Index of the snapshot at time t, or None."""
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > rtol * max(1.0, abs(t)):
            return None
        return i

    @property
    def doubling_indices(self):
        return [i for i, s in enumerate(self.states) if s.doubling]

    def blew_up(self):
        return self.stopReason in BLOWUP_REASONS


def argmax_point(values, tol=1e-9):
    """First index attaining the maximum within relative ``tol`` (plateaus resolve to smallest s)."""
    values = np.asarray(values)
    vmax = np.max(values)
    return int(np.flatnonzero(values >= vmax * (1.0 - tol))[0])


def _kernel_curvature(p):
    return geo.CurvatureField.from_sectional(
        p.n, *geo.sectional_curvatures(p.h, np.asarray(p.phi), float(p.psi[0]), order=4))


def make_state(p, curv=None, doubling=None, material=None, kappa=None):
    if curv is None:
        curv = geo.curvature(p)
    s = geo.arclength(p)
    i = argmax_point(curv.normRm)
    return FlowState(time=p.time, profile=p, curvature=curv,
                     supRm=float(np.max(curv.normRm)), supRic=float(np.max(curv.normRic)),
                     argmax_s=float(s[i]), doubling=doubling, material=material, kappa=kappa)


def _kappa(p, curv):
    from .functionals import noncollapsing_ratio
    sup = float(np.max(curv.normRm))
    if sup <= 0:
        return None
    s = geo.arclength(p)
    i = argmax_point(curv.normRm)
    try:
        return noncollapsing_ratio(p, (s[i], 0.0), 1.0 / math.sqrt(sup), curv=curv)
    except RicciLabError as exc:  # monitor only; never stops a run
        log.debug("kappa monitor failed: %s", exc)
        return None


def neck_cells(p):
    """Smallest interior local minimum of phi measured in grid cells of arclength."""
    phi = np.asarray(p.phi)
    inner = phi[1:-1]
    is_min = (inner <= phi[:-2]) & (inner <= phi[2:])
    if not np.any(is_min):
        return math.inf
    ds = float(np.min(p.psi)) * p.h
    return float(np.min(inner[is_min])) / ds


def run(p0, ctl, until_time=None, snapshot_growth=2.0 ** 0.125, snapshot_dt=None,
        kappa_monitor=False, max_steps=50_000_000, descriptor=None):
    """Integrate the flow from ``p0``.

    With ``until_time`` the run stops at that time (ReachedTime); otherwise it
    runs until blow-up: sup|Rm| > qMax, a pinch, or step underflow. A pinch is
    declared when phi leaves its floor or a neck narrows below
    ``ctl.pinchCells`` grid cells, where the grid no longer resolves it.
    Snapshots are stored whenever sup|Rm| grows by ``snapshot_growth`` since the
    last one, every ``snapshot_dt`` of flow time, at every doubling of sup|Rm|
    relative to the initial value, and at the end.
    """
    p0 = p0.validate()
    p, material = _arclength_gauge(p0)
    n = p.n
    # stepping uses the stencils the integrator was tuned for; snapshots store
    # the higher-order curvature of make_state
    curv = _kernel_curvature(p)
    sup0 = float(np.max(curv.normRm))
    first = make_state(p, doubling=0, material=material)
    if kappa_monitor:
        first = dataclasses.replace(first, kappa=_kappa(p, first.curvature))
    traj = FlowTrajectory(states=[first], meta={
        "initial": descriptor, "N": p0.N, "n": n, "control": ctl,
        "snapshot_growth": snapshot_growth, "snapshot_dt": snapshot_dt,
        "until_time": until_time, "steps": 0,
    })
    last = first
    next_doubling = 1
    phi, L = np.array(p.phi), float(p.psi[0])
    steps = 0
    reason = None
    while True:
        sup = float(np.max(curv.normRm))
        if until_time is not None and p.time >= until_time * (1 - 1e-14):
            reason = StopReason.ReachedTime
            break
        if sup > ctl.qMax:
            reason = StopReason.CurvatureCeiling
            break
        if neck_cells(p) < ctl.pinchCells:
            reason = StopReason.PinchDetected
            break
        if steps >= max_steps:
            reason = StopReason.StepUnderflow
            break
        dt = admissible_dt(p, ctl, sup)
        if until_time is not None:
            dt = min(dt, until_time - p.time)
        if dt < ctl.dtMin and not (until_time is not None and until_time - p.time < ctl.dtMin):
            reason = StopReason.StepUnderflow
            break
        try:
            phi, L, material = _rk4(n, phi, L, dt, material, (curv.kRad, curv.kSph))
            p = geo.WarpProfile(n=n, x=p.x, psi=np.full(p.N, L), phi=phi, time=p.time + dt)
            curv = _kernel_curvature(p)
        except SingularData:
            reason = StopReason.PinchDetected
            break
        steps += 1
        sup = float(np.max(curv.normRm))
        if not np.isfinite(sup):
            reason = StopReason.PinchDetected
            break
        doubling = None
        if sup >= sup0 * 2.0 ** next_doubling:
            doubling = next_doubling
            while sup >= sup0 * 2.0 ** next_doubling:
                next_doubling += 1
        store = (doubling is not None or sup >= last.supRm * snapshot_growth
                 or (snapshot_dt is not None and p.time >= last.time + snapshot_dt * (1 - 1e-9)))
        if store:
            last = make_state(p, doubling=doubling, material=material.copy())
            if kappa_monitor and doubling is not None:
                last = dataclasses.replace(last, kappa=_kappa(p, last.curvature))
            traj.states.append(last)
    if last.time != p.time:
        traj.states.append(make_state(p, material=material.copy()))
    traj.stopReason = reason
    traj.meta["steps"] = steps
    kappas = [s.kappa for s in traj.states if s.kappa is not None]
    traj.meta["kappa"] = min(kappas) if kappas else None
    log.info("run stopped: %s at t=%.6g after %d steps", reason.value, p.time, steps)
    return traj


# --------------------------------------------------------------------------
# singular time

@dataclass(frozen=True)
class SingularTimeEstimate:
    T: float
    slope: float
    residual: float
    npoints: int
    assumption: str = "Type-I rate: 1/sup|Rm| = a (T - t)"


def last_decade(traj, factor=10.0):
    """Indices of snapshots in the final ``factor`` of sup|Rm| growth."""
    sup = traj.sup_rm
    return np.flatnonzero(sup >= sup[-1] / factor)


def estimate_singular_time(traj, residual_tol=2e-2, factor=10.0):
    """Least-squares fit of 1/sup|Rm(t)| = a (T - t) over the last decade.

    ``residual`` is the RMS misfit relative to the fitted values' range. Raises
    NotConverged (with the fit attached) when the trajectory did not blow up or
    the residual exceeds ``residual_tol`` (possible Type-II behaviour).
    """
    if not traj.blew_up():
        raise NotConverged("trajectory did not end in blow-up")
    idx = last_decade(traj, factor)
    if len(idx) < 3:
        raise NotConverged("fewer than three snapshots in the final decade")
    t = traj.times[idx]
    y = 1.0 / traj.sup_rm[idx]
    A = np.vstack([np.ones_like(t), t]).T
    (c0, c1), *_ = np.linalg.lstsq(A, y, rcond=None)
    a = -c1
    T = c0 / a if a > 0 else math.inf
    fit = c0 + c1 * t
    residual = float(np.sqrt(np.mean((y - fit) ** 2)) / max(np.ptp(y), 1e-300))
    est = SingularTimeEstimate(T=float(T), slope=float(a), residual=residual, npoints=len(idx))
    if not (a > 0) or residual > residual_tol:
        raise NotConverged(f"singular-time fit residual {residual:.3e} too large", result=est)
    return est
