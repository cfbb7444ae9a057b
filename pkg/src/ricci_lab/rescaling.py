"""Parabolic blow-up windows g_i(tau) = Q g(t_i + tau / Q) and comparison with model flows."""

from dataclasses import dataclass, field
import math

import numpy as np

from . import geometry as geo
from .errors import NotConverged, OutOfRange, SingularData
from .functionals import cumulative_trapezoid

Q_FLOOR = 1e-12
DEFAULT_WINDOW = (-1.0, 0.0)
DEFAULT_BALL = 5.0


@dataclass(frozen=True)
class RescaledState:
    tau: float
    profile: geo.WarpProfile
    curvature: geo.CurvatureField


@dataclass(frozen=True)
class RescaledWindow:
    Q: float
    tCenter: float
    xCenter: float              # arclength of the marked point in rescaled units
    states: tuple
    provenance: dict = field(default_factory=dict)
    clipped: bool = False       # True when the requested window ran past the data

    @property
    def taus(self):
        return np.array([s.tau for s in self.states])

    def at_zero(self):
        i = int(np.argmin(np.abs(self.taus)))
        if abs(self.taus[i]) > 1e-9:
            raise OutOfRange("window does not contain rescaled time 0")
        return self.states[i]


def _rescale_state(st, Q, t0):
    p = st.profile
    q = math.sqrt(Q)
    prof = geo.WarpProfile(n=p.n, x=p.x, psi=np.asarray(p.psi) * q, phi=np.asarray(p.phi) * q,
                           time=(p.time - t0) * Q)
    return RescaledState(tau=prof.time, profile=prof, curvature=geo.curvature(prof))


def rescale_at(traj, tCenter, window=DEFAULT_WINDOW, Q=None, clip=False, source_id=None):
    """Rescaled solution window around the snapshot at ``tCenter``.

    Q defaults to |Rm| at the sup point of that snapshot, so the rescaled
    curvature there is 1. Snapshots with t in [tCenter + a/Q, tCenter + b/Q] are
    included; with ``clip`` a window running past the data is cut to what exists
    and marked, otherwise OutOfRange is raised.
    """
    i0 = traj.index_of(tCenter)
    if i0 is None:
        raise OutOfRange(f"tCenter={tCenter} is not a snapshot time")
    center = traj.states[i0]
    if Q is None:
        Q = center.supRm
    if not Q > Q_FLOOR:
        raise SingularData(f"normalization curvature Q={Q} too small to rescale")
    a, b = window
    if a > 0 or b < 0 or a > b:
        raise OutOfRange(f"window {window} must contain rescaled time 0")
    lo, hi = tCenter + a / Q, tCenter + b / Q
    times = traj.times
    clipped = False
    eps = 1e-12 * max(1.0, abs(tCenter))
    if lo < times[0] - eps or hi > times[-1] + eps:
        if not clip:
            raise OutOfRange(f"window [{lo:.6g}, {hi:.6g}] exceeds data [{times[0]:.6g}, {times[-1]:.6g}]")
        clipped = True
    sel = [j for j, t in enumerate(times) if lo - eps <= t <= hi + eps]
    states = tuple(_rescale_state(traj.states[j], Q, tCenter) for j in sel)
    return RescaledWindow(Q=float(Q), tCenter=float(tCenter), xCenter=center.argmax_s * math.sqrt(Q),
                          states=states, clipped=clipped,
                          provenance={"source": source_id, "index": i0, "window": tuple(window),
                                      "source_span": (lo, hi), "indices": tuple(sel)})


def blowup_sequence(traj, count, window=DEFAULT_WINDOW, source_id=None):
    """Windows centred at the last ``count`` doublings of sup|Rm|.

    Early windows that would reach before t = 0 are clipped and flagged.
    """
    if count < 0:
        raise OutOfRange("count must be non-negative")
    if count == 0:
        return []
    if not traj.blew_up():
        raise NotConverged("trajectory did not end in blow-up")
    dbl = traj.doubling_indices
    if len(dbl) < count:
        raise NotConverged(f"only {len(dbl)} curvature doublings available, {count} requested")
    return [rescale_at(traj, traj.states[i].time, window, clip=True, source_id=source_id)
            for i in dbl[-count:]]


def model_curvatures(n, model):
    """(kRad, kSph) of a model flow normalized to |Rm| = 1."""
    if model == "roundSphere":
        k = 1.0 / math.sqrt(2.0 * n * (n - 1))
        return k, k
    if model == "cylinder":
        return 0.0, 1.0 / math.sqrt(2.0 * (n - 1) * (n - 2))
    raise OutOfRange(f"unknown model {model!r}")


@dataclass(frozen=True)
class ModelDistance:
    value: float
    truncated: bool     # the comparison ball reached past a pole
    radius: float
    worst_s: float


def model_distance(w, model, radius=DEFAULT_BALL, strict=False):
    """sup over the rescaled ball B(xCenter, radius) at tau = 0 of max(|dkRad|, |dkSph|).

    In the symmetry class the ball is the arclength interval around xCenter.
    When it reaches past a pole the partial-ball value is returned with
    ``truncated`` set (or OutOfRange raised when ``strict``).
    """
    st = w.at_zero()
    s = geo.arclength(st.profile)
    kr, ks = model_curvatures(st.profile.n, model)
    lo, hi = w.xCenter - radius, w.xCenter + radius
    truncated = lo < s[0] or hi > s[-1]
    if truncated and strict:
        raise OutOfRange(f"ball of radius {radius} around s={w.xCenter:.4g} exceeds [0, {s[-1]:.4g}]")
    sel = (s >= lo) & (s <= hi)
    dev = np.maximum(np.abs(st.curvature.kRad - kr), np.abs(st.curvature.kSph - ks))[sel]
    k = int(np.argmax(dev))
    return ModelDistance(value=float(dev[k]), truncated=bool(truncated), radius=radius,
                         worst_s=float(s[sel][k]))


def window_int_sup_ric(w):
    """int of sup|Ric| over the window's rescaled times (trapezoid on its snapshots)."""
    taus = w.taus
    sup = np.array([float(np.max(s.curvature.normRic)) for s in w.states])
    return float(cumulative_trapezoid(taus, sup)[-1])


def source_int_sup_ric(traj, w):
    """The same integral on the source trajectory over the matching real-time span."""
    sel = np.array(w.provenance["indices"])
    return float(cumulative_trapezoid(traj.times[sel], traj.sup_ric[sel])[-1])


def rescale_window(w, Q):
    """Rescale an existing window by a further factor Q (metric times Q, time times Q)."""
    if not Q > Q_FLOOR:
        raise SingularData(f"normalization curvature Q={Q} too small to rescale")
    states = tuple(_rescale_state(st, Q, 0.0) for st in w.states)
    return RescaledWindow(Q=w.Q * Q, tCenter=w.tCenter, xCenter=w.xCenter * math.sqrt(Q),
                          states=states, provenance=dict(w.provenance), clipped=w.clipped)
