"""Extension-criterion functionals and pointwise evolution identities on a trajectory.

All time integrals are snapshot trapezoids. Pointwise quantities are followed
along material points (fixed points of M), whose grid positions the flow engine
records in ``FlowState.material``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import trapezoid

from . import geometry as geo
from .eikonal import fast_march, local_seeds
from .errors import ConfigError, NotConverged, OutOfRange, RicciLabError
from .flow import estimate_singular_time, last_decade

GAMMA_RANGE = (0.25, 4.0)
LAWS = ("bounded", "log", "log-log", "power")


# --------------------------------------------------------------------------
# growth-law diagnostics

@dataclass(frozen=True)
class DivergenceDiagnostic:
    """Best least-squares growth law of a cumulative criterion in l = ln(1/(T - t)).

    Models: bounded a + b e^{-g l}, log a + b l, log-log a + b ln l, power
    a + b e^{g l}, with g in GAMMA_RANGE. ``rate`` is b; ``limit`` is a for the
    bounded law. Residuals are RMS misfits for every law.
    """

    law: str
    rate: float
    limit: float
    gamma: float
    residuals: dict
    T: float
    window: tuple

    def residual(self, law=None):
        return self.residuals[law or self.law]


def _lsq(basis, y):
    A = np.vstack([np.ones_like(basis), basis]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return coef, float(np.sqrt(np.mean(r * r)))


def fit_growth_law(times, cumulative, T, t_from=None):
    """Fit each growth law to cumulative values for times >= ``t_from``."""
    times = np.asarray(times, dtype=float)
    y = np.asarray(cumulative, dtype=float)
    sel = times < T
    if t_from is not None:
        sel &= times >= t_from
    if np.count_nonzero(sel) < 4:
        raise NotConverged("need at least four samples to fit a growth law")
    ell = np.log(1.0 / (T - times[sel]))
    y = y[sel]
    gammas = np.geomspace(*GAMMA_RANGE, 97)
    best = {}
    for law in LAWS:
        if law == "log":
            coef, res = _lsq(ell, y)
            best[law] = (res, coef, None)
        elif law == "log-log":
            if np.any(ell <= 0):
                best[law] = (math.inf, (math.nan, math.nan), None)
                continue
            coef, res = _lsq(np.log(ell), y)
            best[law] = (res, coef, None)
        else:
            sign = -1.0 if law == "bounded" else 1.0
            l0 = ell[-1] if law == "power" else ell[0]
            cands = []
            for g in gammas:
                coef, res = _lsq(np.exp(sign * g * (ell - l0)), y)
                cands.append((res, coef, g))
            res, coef, g = min(cands, key=lambda c: c[0])
            # undo the centring of the exponential basis
            coef = (coef[0], coef[1] * math.exp(-sign * g * l0))
            best[law] = (res, coef, g)
    law = min(LAWS, key=lambda k: best[k][0])
    res, coef, g = best[law]
    return DivergenceDiagnostic(
        law=law, rate=float(coef[1]), limit=float(coef[0]) if law == "bounded" else math.nan,
        gamma=g, residuals={k: v[0] for k, v in best.items()}, T=float(T),
        window=(float(times[sel][0]), float(times[sel][-1])))


def diagnose(traj, times, cumulative, T=None):
    """Growth-law fit over the last decade of curvature growth of a blow-up trajectory."""
    if T is None:
        try:
            T = estimate_singular_time(traj).T
        except NotConverged as exc:
            if exc.result is None:
                raise
            T = exc.result.T
    idx = last_decade(traj)
    return fit_growth_law(times, cumulative, T, t_from=traj.times[idx[0]])


# --------------------------------------------------------------------------
# series

@dataclass
class CriterionSeries:
    id: str
    times: np.ndarray
    values: np.ndarray          # integrand per snapshot (G(t) for the log-weighted criterion)
    cumulative: np.ndarray      # running time integral
    pointwiseValues: np.ndarray = None
    divergenceDiagnostic: DivergenceDiagnostic = None
    params: dict = field(default_factory=dict)

    def at(self, t):
        """Cumulative value at time t (linear between snapshots)."""
        if t < self.times[0] or t > self.times[-1] * (1 + 1e-12):
            raise OutOfRange(f"t={t} outside the snapshot range [{self.times[0]}, {self.times[-1]}]")
        return float(np.interp(t, self.times, self.cumulative))


def cumulative_trapezoid(times, values):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values, dtype=float)
    if len(times) > 1:
        dt = np.diff(times).reshape((-1,) + (1,) * (values.ndim - 1))
        out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]), axis=0)
    return out


def _check_t(traj, t):
    times = traj.times
    if t is None:
        return times[-1]
    if t < 0 or t > times[-1] * (1 + 1e-12) + 1e-300:
        raise OutOfRange(f"t={t} beyond the last snapshot {times[-1]}")
    return t


def _series(traj, cid, values, t, fit, params=None):
    t = _check_t(traj, t)
    times = traj.times
    cum = cumulative_trapezoid(times, values)
    diag = None
    if fit and traj.blew_up():
        try:
            diag = diagnose(traj, times, cum)
        except NotConverged:
            diag = None
    ser = CriterionSeries(id=cid, times=times, values=np.asarray(values), cumulative=cum,
                          divergenceDiagnostic=diag, params=dict(params or {}))
    ser.params["t"] = t
    ser.params["value"] = ser.at(t)
    return ser


def sup_norms(traj, t):
    """(sup|Rm|, sup|Ric|, arclength of the sup|Rm| point) at snapshot time t."""
    i = traj.index_of(t)
    if i is None:
        raise OutOfRange(f"t={t} is not a snapshot time")
    st = traj.states[i]
    return st.supRm, st.supRic, st.argmax_s


def int_sup_ric_series(traj, t=None, fit=True):
    return _series(traj, "intSupRic", traj.sup_ric, t, fit)


def int_sup_ric(traj, t):
    """Trapezoid integral of sup|Ric| over [0, t] on snapshot times."""
    return int_sup_ric_series(traj, t, fit=False).params["value"]


def int_sup_rm_series(traj, t=None, fit=True):
    return _series(traj, "intSupRm", traj.sup_rm, t, fit)


def _check_p(p):
    if p is None or not p >= 1:
        raise ConfigError(f"exponent p must be >= 1, got {p}", path="p")


def space_time_lp(traj, p, t=None, fit=True):
    """int_0^t int_M |Rm|^p dmu dt as a CriterionSeries."""
    _check_p(p)
    vals = np.array([geo.integrate_scalar(s.profile, s.curvature.normRm ** p) for s in traj.states])
    return _series(traj, "spaceTimeLp", vals, t, fit, {"p": p})


def log_weighted_integrand(profile, curv):
    n = profile.n
    rm = curv.normRm
    f = np.zeros_like(rm)
    pos = rm > 0
    f[pos] = rm[pos] ** (n / 2.0 + 1) / np.log1p(rm[pos])
    return geo.integrate_scalar(profile, f)


def log_weighted_integral(traj, t=None, fit=True):
    """int_0^t int_M |Rm|^{n/2+1} / log(1+|Rm|) dmu dt; ``values`` holds G(t)."""
    vals = np.array([log_weighted_integrand(s.profile, s.curvature) for s in traj.states])
    return _series(traj, "logWeighted", vals, t, fit)


# --------------------------------------------------------------------------
# material-point quantities

def _material(traj, i):
    m = traj.states[i].material
    if m is None:
        raise OutOfRange("trajectory carries no material-point maps")
    return m


@dataclass(frozen=True)
class PointwiseF:
    """F(x, t) = int_0^t |Ric(x, tau)| dtau at the material points of the initial grid."""

    t: float
    x0: np.ndarray      # material labels: initial grid coordinates
    x: np.ndarray       # current grid coordinates of the same points
    s: np.ndarray       # current arclength
    values: np.ndarray
    transportError: float

    def on_grid(self, profile):
        """F interpolated onto a profile's own grid nodes."""
        return np.interp(profile.x, self.x, self.values)


def _cubic_at(f, xq, N):
    from scipy.interpolate import CubicSpline
    return CubicSpline(np.linspace(0.0, 1.0, N), f)(xq)


def pointwise_F_history(traj, t=None, tol=0.01):
    """F at material points for every snapshot up to t.

    Returns (indices, matrix) with one row per snapshot. |Ric| is sampled at the
    material positions by linear interpolation (which cannot exceed the grid
    supremum); a cubic-spline resampling gives the transport error estimate,
    and NotConverged is raised when it exceeds ``tol`` relative to max F.
    """
    t = _check_t(traj, t)
    idx = [i for i, s in enumerate(traj.states) if s.time <= t * (1 + 1e-12)]
    N = traj.states[0].profile.N
    grid = np.linspace(0.0, 1.0, N)
    lin, cub = [], []
    for i in idx:
        X = _material(traj, i)
        ric = traj.states[i].curvature.normRic
        lin.append(np.interp(X, grid, ric))
        cub.append(_cubic_at(ric, X, N))
    times = traj.times[idx]
    F_lin = cumulative_trapezoid(times, np.array(lin))
    F_cub = cumulative_trapezoid(times, np.array(cub))
    scale = np.max(np.abs(F_lin), axis=1)
    err = np.max(np.abs(F_cub - F_lin), axis=1) / np.where(scale > 0, scale, 1.0)
    if np.max(err) > tol:
        raise NotConverged(f"material transport error {np.max(err):.3e} exceeds {tol}", result=(idx, F_lin))
    return idx, F_lin, err


def pointwise_F(traj, t, tol=0.01):
    """F(x, t) per material point."""
    idx, F, err = pointwise_F_history(traj, t, tol)
    i = idx[-1]
    st = traj.states[i]
    X = _material(traj, i)
    s = X * float(st.profile.psi[0]) if np.ptp(st.profile.psi) == 0 else np.interp(X, st.profile.x, geo.arclength(st.profile))
    return PointwiseF(t=st.time, x0=np.array(traj.states[0].material), x=X, s=s, values=F[-1],
                      transportError=float(err[-1]))


@dataclass(frozen=True)
class Modulus:
    value: float
    s_a: float
    s_b: float


def continuity_modulus(F, profile, delta):
    """sup |F(a) - F(b)| over point pairs at reduced geodesic distance <= delta.

    ``F`` is radial (given on the profile's grid). Two points of M at reduced
    distance <= delta have arclength coordinates at most delta apart, and any
    such s-pair is realized by points on one meridian at distance |s_a - s_b|,
    so the supremum runs over grid pairs with |s_a - s_b| <= delta.
    """
    if not delta > 0:
        raise OutOfRange(f"delta must be positive, got {delta}")
    F = np.asarray(F, dtype=float)
    s = geo.arclength(profile)
    if F.shape != s.shape:
        raise OutOfRange("F must be sampled on the profile grid")
    best = Modulus(0.0, float(s[0]), float(s[0]))
    j = 0
    # two-pointer sweep over windows [s_i - delta, s_i]
    for i in range(len(s)):
        while s[i] - s[j] > delta * (1 + 1e-12):
            j += 1
        window = F[j:i + 1]
        k_hi = int(np.argmax(window))
        k_lo = int(np.argmin(window))
        d = window[k_hi] - window[k_lo]
        if d > best.value:
            best = Modulus(float(d), float(s[j + k_lo]), float(s[j + k_hi]))
    return best


# --------------------------------------------------------------------------
# evolution identities

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    passed: bool
    worst: float            # worst relative discrepancy (or violation) over interior points
    worst_s: float          # arclength of the worst point at t1
    tolerance: float


def _slice(traj, i, u):
    """Fields of snapshot i sampled at the material points.

    For a radial test function u(x0) of the material label, the arclength
    gradient is u'(x0) / (dX/dx0 * psi(X)), with both derivatives taken on the
    uniform label grid (u even and X - x0 odd about each pole).
    """
    st = traj.states[i]
    p, c = st.profile, st.curvature
    X = _material(traj, i)
    N = p.N
    grid = np.linspace(0.0, 1.0, N)
    h = 1.0 / (N - 1)
    uv = u(grid) if callable(u) else np.asarray(u, dtype=float)
    du = geo.d1(uv, h, +1)
    dX = geo.d1(X - grid, h, -1) + 1.0
    # cubic sampling: linear interpolation errors shift as the markers move and
    # dominate time differences of nearby snapshots
    at = lambda f: _cubic_at(np.asarray(f), X, N)
    psi = at(p.psi)
    u_s = du / (dX * psi)
    dens = np.abs(at(p.phi)) ** (p.n - 1) * psi * dX
    return dict(t=st.time, g2=u_s ** 2, ricuu=at(c.lamRad) * u_s ** 2, R=at(c.scalar),
                Rp=at(c.scalarPlus), Rm=at(c.scalarMinus), lam=at(c.lambdaNeg),
                dens=dens, s=at(geo.arclength(p)))


def check_evolution_identities(traj, t0, t1, u, tol=0.01, margin=4):
    """Verify the pointwise evolution identities between two snapshots.

    (a) d|grad u|^2/dt = 2 Ric(grad u, grad u), centred difference vs trapezoid mean;
    (b) d(dmu)/dt = -R dmu, as d ln(dmu)/dt vs the mean of -R;
    (c) exp(-int R+) dmu(t0) <= dmu(t1) <= exp(int R-) dmu(t0), and
        |grad u|^2(t0) <= |grad u|^2(t1) exp(2 int lambda).
    ``u`` is a function of the material label x0 in [0, 1] (or its values on
    the initial grid). Points within ``margin`` nodes of a pole are excluded
    from (a) and (b), where dmu vanishes.
    """
    i0, i1 = traj.index_of(t0), traj.index_of(t1)
    if i0 is None or i1 is None:
        raise OutOfRange("t0 and t1 must be snapshot times")
    if i1 < i0:
        raise OutOfRange("need t0 <= t1")
    a, b = _slice(traj, i0, u), _slice(traj, i1, u)
    inner = slice(margin, len(a["g2"]) - margin)
    dt = b["t"] - a["t"]
    checks = []

    def report(name, err, passed=None):
        err = np.where(np.isfinite(err), err, 0.0)
        k = int(np.argmax(err[inner])) + margin
        ok = bool(err[k] <= tol) if passed is None else passed
        checks.append(IdentityCheck(name, ok, float(err[k]), float(b["s"][k]), tol))

    if dt == 0:
        zero = np.zeros_like(a["g2"])
        for name in ("gradient", "volume", "volumeSandwich", "gradientSandwich"):
            report(name, zero)
        return checks
    # integrals over [t0, t1] through every intermediate snapshot
    mids = [_slice(traj, i, u) for i in range(i0, i1 + 1)] if i1 - i0 > 1 else [a, b]
    ts = np.array([m["t"] for m in mids])
    integ = lambda key: trapezoid(np.array([m[key] for m in mids]), ts, axis=0)

    lhs = (b["g2"] - a["g2"]) / dt
    rhs = (a["ricuu"] + b["ricuu"])  # 2 * mean of Ric(grad u, grad u)
    scale = np.max(np.abs(rhs[inner])) or 1.0
    report("gradient", np.abs(lhs - rhs) / scale)

    pos = (a["dens"] > 0) & (b["dens"] > 0)
    dlog = np.zeros_like(lhs)
    dlog[pos] = np.log(b["dens"][pos] / a["dens"][pos]) / dt
    meanR = -integ("R") / dt
    scale = np.max(np.abs(meanR[inner])) or 1.0
    report("volume", np.where(pos, np.abs(dlog - meanR), 0.0) / scale)

    ratio = np.where(pos, b["dens"] / np.where(pos, a["dens"], 1.0), 1.0)
    lo, hi = np.exp(-integ("Rp")), np.exp(integ("Rm"))
    viol = np.maximum(lo / ratio - 1.0, ratio / hi - 1.0)
    report("volumeSandwich", np.maximum(viol, 0.0))

    g_lo = a["g2"]
    g_hi = b["g2"] * np.exp(2.0 * integ("lam"))
    gscale = np.max(a["g2"][inner]) or 1.0
    report("gradientSandwich", np.maximum(g_lo - g_hi, 0.0) / gscale)
    return checks


# --------------------------------------------------------------------------
# non-collapsing

def noncollapsing_ratio(profile, center, r, curv=None, check_curvature=True, grid=161):
    """Vol(B(center, r)) / r^n in the reduced (s, alpha) picture.

    The ball is rotated so its centre lies on the axis alpha = 0; distances come
    from fast marching on ds^2 + phi^2 dalpha^2 and the volume integrates
    omega_{n-2} phi^{n-1} sin^{n-2}(alpha) ds dalpha over the ball, with the
    indicator smoothed across one grid cell. With ``check_curvature`` the
    hypothesis |Rm| <= r^-2 on the ball is enforced (OutOfRange otherwise).
    """
    if not r > 0:
        raise OutOfRange(f"radius must be positive, got {r}")
    n = profile.n
    s_all = geo.arclength(profile)
    L = s_all[-1]
    s0 = float(center[0])
    if not (0.0 <= s0 <= L):
        raise OutOfRange(f"centre s={s0} outside [0, {L}]")
    phi_of = geo.phi_of_s(profile)
    lo, hi = max(0.0, s0 - r), min(L, s0 + r)
    if check_curvature:
        if curv is None:
            curv = geo.curvature(profile)
        sel = (s_all >= lo) & (s_all <= hi)
        worst = float(np.max(curv.normRm[sel])) if np.any(sel) else 0.0
        if worst > r ** -2 * (1 + 1e-9):
            raise OutOfRange(f"|Rm| = {worst:.4g} exceeds r^-2 = {r ** -2:.4g}; "
                             f"curvature scale {worst ** -0.5:.4g}")
    s = np.linspace(lo, hi, grid)
    phi = np.maximum(phi_of(s), 0.0)
    phi[np.isclose(s, 0.0, atol=1e-14)] = 0.0
    phi[np.isclose(s, L, rtol=0, atol=1e-12 * L)] = 0.0
    phi_lo = float(np.min(phi))
    a_max = math.pi if phi_lo <= 0 else min(math.pi, 1.05 * r / phi_lo)
    alpha = np.linspace(0.0, a_max, grid)
    seeds = local_seeds(s, phi, alpha, s0, 0.0)
    T = fast_march(s, phi, alpha, seeds)
    hd = max(s[1] - s[0], float(np.max(phi)) * (alpha[1] - alpha[0]))
    inside = np.clip((r - T) / hd + 0.5, 0.0, 1.0)
    w = sphere_weight(n, phi, alpha)
    vol = trapezoid(trapezoid(inside * w, alpha, axis=1), s)
    return float(vol / r ** n)


def sphere_weight(n, phi, alpha):
    return geo.sphere_volume(n - 2) * phi[:, None] ** (n - 1) * np.sin(alpha)[None, :] ** (n - 2)
