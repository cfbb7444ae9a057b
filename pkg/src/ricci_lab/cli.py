"""Config-driven scenario runner.

    python3 -m ricci_lab.cli run scenario.cfg
    python3 -m ricci_lab.cli sweep scenario.cfg --vary initial.r0=0.8,1.0,1.2
    python3 -m ricci_lab.cli report out/sphere

Config files are ``key = value`` lines; ``#`` starts a comment. Relative output
directories resolve against $RICCI_LAB_OUTPUT_ROOT when it is set, else the
current directory. Exit codes: 0 success, 2 config error, 3 numerical failure,
4 I/O error.
"""

import argparse
import concurrent.futures
import csv
import dataclasses
import io
import itertools
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import exact_models, flow, functionals as fn, geometry as geo
from . import gronwall as gw, rescaling as rs, sobolev as sb
from .errors import ConfigError, NotConverged, RicciLabError

OUTPUT_ROOT_ENV = "RICCI_LAB_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

INITIAL_KINDS = {"roundSphere": flow.RoundSphere, "dumbbell": flow.Dumbbell}
MODELS = ("auto", "roundSphere", "cylinder")


@dataclass(frozen=True)
class CriterionRequest:
    id: str
    params: dict = field(default_factory=dict)

    @property
    def label(self):
        if "p" in self.params:
            return f"{self.id}_p{self.params['p']:g}"
        return self.id


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    n: int = 3
    N: int = 129
    initialKind: str = "roundSphere"
    initialParams: dict = field(default_factory=dict)
    control: flow.StepControl = field(default_factory=flow.StepControl)
    stop: str = "blowup"
    stopTime: float = None
    snapshotGrowth: float = 2.0 ** 0.125
    snapshotDt: float = None
    criteria: tuple = tuple(CriterionRequest(c) for c in ("intSupRic", "intSupRm", "logWeighted"))
    modulusDelta: float = 0.1          # continuity-modulus window as a fraction of the initial length
    sobolevEpsilon: float = 0.0
    rescalingCount: int = 4
    rescalingWindow: tuple = (-1.0, 0.0)
    rescalingModel: str = "auto"
    rescalingRadius: float = 5.0
    gronwallC: object = "auto"
    gronwallH0: object = "auto"
    output: str = "out"
    seed: int = 0

    def initial(self):
        return INITIAL_KINDS[self.initialKind](**self.initialParams)


# --------------------------------------------------------------------------
# parsing

def _lines(text):
    """{key: (raw value, line number)} from key = value text."""
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=no)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=no)
        if key in out:
            raise ConfigError(f"duplicate key (first on line {out[key][1]})", path=key, line=no)
        out[key] = (value, no)
    return out


class _Reader:
    def __init__(self, entries):
        self.entries = dict(entries)
        self.used = set()

    def raw(self, key):
        self.used.add(key)
        return self.entries.get(key, (None, None))

    def has(self, key):
        return key in self.entries

    def number(self, key, default, kind=float, positive=False, allow_none=False):
        value, line = self.raw(key)
        if value is None:
            return default
        if allow_none and value.lower() in ("none", "auto"):
            return None
        try:
            x = kind(float(value)) if kind is int else kind(value)
        except ValueError:
            raise ConfigError(f"not a number: {value!r}", path=key, line=line) from None
        if kind is int and float(value) != int(float(value)):
            raise ConfigError(f"expected an integer, got {value!r}", path=key, line=line)
        if not math.isfinite(x):
            raise ConfigError("must be finite", path=key, line=line)
        if positive and not x > 0:
            raise ConfigError(f"must be positive, got {value}", path=key, line=line)
        return x

    def numbers(self, key, default):
        value, line = self.raw(key)
        if value is None:
            return default
        try:
            return tuple(float(v) for v in value.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"not a number list: {value!r}", path=key, line=line) from None

    def text(self, key, default, choices=None):
        value, line = self.raw(key)
        if value is None:
            return default
        if choices is not None and value not in choices:
            raise ConfigError(f"{value!r} is not one of {', '.join(choices)}", path=key, line=line)
        return value

    def line_of(self, key):
        return self.entries.get(key, (None, None))[1]


def parse_config(text):
    """Validated ScenarioConfig from key = value text."""
    r = _Reader(_lines(text))
    name, line = r.raw("name")
    if not name:
        raise ConfigError("missing required key", path="name", line=line)
    n = r.number("n", 3, int)
    if n < 3:
        raise ConfigError("dimension must be >= 3", path="n", line=r.line_of("n"))
    N = r.number("N", 129, int)
    if N < geo.MIN_POINTS:
        raise ConfigError(f"need at least {geo.MIN_POINTS} grid points", path="N", line=r.line_of("N"))

    kind = r.text("initial", "roundSphere", tuple(INITIAL_KINDS))
    fields = [f.name for f in dataclasses.fields(INITIAL_KINDS[kind])]
    params = {f: r.number(f"initial.{f}", None, positive=True) for f in fields}
    params = {k: v for k, v in params.items() if v is not None}
    for key in r.entries:
        if key.startswith("initial.") and key[len("initial."):] not in fields:
            raise ConfigError(f"unknown parameter for {kind}", path=key, line=r.line_of(key))

    ctl_fields = [f.name for f in dataclasses.fields(flow.StepControl)]
    ctl_args = {f: r.number(f"step.{f}", None) for f in ctl_fields}
    try:
        control = flow.StepControl(**{k: v for k, v in ctl_args.items() if v is not None})
    except ConfigError as exc:
        raise ConfigError(str(exc), line=r.line_of(f"step.{exc.path}")) from None

    stop = r.text("stop", "blowup", ("blowup", "time"))
    stop_time = r.number("stop.time", None, positive=True)
    if stop == "time" and stop_time is None:
        raise ConfigError("stop = time needs stop.time", path="stop.time", line=r.line_of("stop"))

    r.raw("criteria.spaceTimeLp.p")   # accepted even when the criterion is not selected
    ids_raw, line = r.raw("criteria")
    ids = ([c.strip() for c in ids_raw.split(",") if c.strip()] if ids_raw is not None
           else ["intSupRic", "intSupRm", "logWeighted"])
    criteria = []
    for cid in ids:
        if cid not in exact_models.CRITERIA:
            raise ConfigError(f"unknown criterion id {cid!r}", path="criteria", line=line)
        if cid == "spaceTimeLp":
            key = "criteria.spaceTimeLp.p"
            for p in r.numbers(key, (2.0,)):
                if not p >= 1:
                    raise ConfigError(f"exponent p must be >= 1, got {p:g}", path=key, line=r.line_of(key))
                criteria.append(CriterionRequest(cid, {"p": p}))
        else:
            criteria.append(CriterionRequest(cid))
    delta = r.number("criteria.pointwiseF.delta", 0.1, positive=True)

    window = r.numbers("rescaling.window", (-1.0, 0.0))
    if len(window) != 2 or window[0] > 0 or window[1] < 0:
        raise ConfigError("window must be 'a, b' with a <= 0 <= b", path="rescaling.window",
                          line=r.line_of("rescaling.window"))
    count = r.number("rescaling.count", 4, int)
    if count < 0:
        raise ConfigError("must be >= 0", path="rescaling.count", line=r.line_of("rescaling.count"))

    def auto_or_positive(key):
        value, ln = r.raw(key)
        if value is None or value == "auto":
            return "auto"
        return r.number(key, None, positive=True)

    eps = r.number("sobolev.epsilon", 0.0)
    if eps < 0:
        raise ConfigError("must be >= 0", path="sobolev.epsilon", line=r.line_of("sobolev.epsilon"))

    cfg = ScenarioConfig(
        name=name, n=n, N=N, initialKind=kind, initialParams=params, control=control,
        stop=stop, stopTime=stop_time,
        snapshotGrowth=r.number("snapshot.growth", 2.0 ** 0.125, positive=True),
        snapshotDt=r.number("snapshot.dt", None, positive=True, allow_none=True),
        criteria=tuple(criteria), modulusDelta=delta, sobolevEpsilon=eps,
        rescalingCount=count, rescalingWindow=tuple(window),
        rescalingModel=r.text("rescaling.model", "auto", MODELS),
        rescalingRadius=r.number("rescaling.radius", 5.0, positive=True),
        gronwallC=auto_or_positive("gronwall.C"), gronwallH0=auto_or_positive("gronwall.h0"),
        output=r.text("output", name), seed=r.number("seed", 0, int),
    )
    if cfg.snapshotGrowth <= 1.0:
        raise ConfigError("must exceed 1", path="snapshot.growth", line=r.line_of("snapshot.growth"))
    unknown = sorted(set(r.entries) - r.used, key=r.line_of)
    if unknown:
        raise ConfigError("unknown key", path=unknown[0], line=r.line_of(unknown[0]))
    try:
        flow.initial_profile(cfg.initial(), cfg.n, cfg.N)
    except ConfigError as exc:
        path = f"initial.{exc.path}" if exc.path else "initial"
        raise ConfigError(str(exc), path=path, line=r.line_of(path) or r.line_of("initial")) from None
    return cfg


# --------------------------------------------------------------------------
# output helpers

def fmt(x):
    """Deterministic CSV/report formatting: shortest round-trip repr of floats."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if x is None:
        return ""
    return str(x)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def output_dir(cfg):
    out = Path(cfg.output)
    if not out.is_absolute():
        out = Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / out
    return out


def phi_min(profile):
    """Radius of the narrowest interior cross-section: smallest interior local minimum
    of phi, or the equatorial (largest) radius when phi has no interior minimum."""
    phi = np.asarray(profile.phi)
    inner = phi[1:-1]
    is_min = (inner <= phi[:-2]) & (inner <= phi[2:])
    return float(inner[is_min].min()) if np.any(is_min) else float(phi.max())


# --------------------------------------------------------------------------
# scenario

class _Summary:
    """Ordered key/value store; every number in the report comes from here."""

    def __init__(self):
        self.rows = []

    def add(self, key, value):
        self.rows.append((key, value))
        return value

    def get(self, key, default=None):
        for k, v in self.rows:
            if k == key:
                return v
        return default


def _criterion_series(traj, req):
    if req.id == "intSupRic":
        return fn.int_sup_ric_series(traj)
    if req.id == "intSupRm":
        return fn.int_sup_rm_series(traj)
    if req.id == "spaceTimeLp":
        return fn.space_time_lp(traj, req.params["p"])
    return fn.log_weighted_integral(traj)


def _pointwise_rows(traj, cfg, S):
    """F along the material point that ends at the final sup|Rm| point, plus pole F and modulus."""
    idx, F, err = fn.pointwise_F_history(traj, tol=math.inf)
    S.add("pointwiseF.transportError", float(np.max(err)))
    last = traj.states[idx[-1]]
    x_end = np.interp(last.argmax_s / last.profile.psi[0], last.material, traj.states[0].profile.x)
    x0 = traj.states[0].profile.x
    j = int(np.argmin(np.abs(x0 - x_end)))
    L0 = float(traj.states[0].profile.psi[0])
    delta = cfg.modulusDelta * L0
    rows = []
    for k, i in enumerate(idx):
        st = traj.states[i]
        Fg = np.interp(st.profile.x, st.material, F[k])
        mod = fn.continuity_modulus(Fg, st.profile, delta)
        pole = 0.5 * (F[k][0] + F[k][-1])
        ratio = F[k][j] / pole if pole > 0 else math.nan
        rows.append((st.time, F[k][j], pole, ratio, mod.value))
    S.add("pointwiseF.x0", float(x0[j]))
    S.add("pointwiseF.delta", delta)
    return rows


def run_scenario(cfg):
    """Run one scenario and write its artifacts. Returns the exit code."""
    out = output_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    S = _Summary()
    notes = []
    code = EXIT_OK
    S.add("scenario", cfg.name)
    S.add("n", cfg.n)
    S.add("N", cfg.N)
    S.add("initial", cfg.initialKind)
    for k, v in sorted(cfg.initialParams.items()):
        S.add(f"initial.{k}", v)
    S.add("seed", cfg.seed)
    traj = None
    try:
        p0 = flow.initial_profile(cfg.initial(), cfg.n, cfg.N)
        traj = flow.run(p0, cfg.control, until_time=cfg.stopTime if cfg.stop == "time" else None,
                        snapshot_growth=cfg.snapshotGrowth, snapshot_dt=cfg.snapshotDt,
                        descriptor=cfg.initialKind)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RicciLabError as exc:
        notes.append(f"flow failed: {exc}")
        code = EXIT_NUMERIC
    try:
        if traj is not None:
            code = max(code, _analyse(cfg, traj, S, notes, out))
        _write_report(out, S, notes)
    except OSError as exc:
        print(f"error: writing artifacts in {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


def _analyse(cfg, traj, S, notes, out):
    code = EXIT_OK
    S.add("stopReason", traj.stopReason.value)
    S.add("steps", traj.meta["steps"])
    S.add("snapshots", len(traj.states))
    S.add("finalTime", traj.times[-1])
    S.add("finalSupRm", traj.sup_rm[-1])
    write_csv(out / "trajectory.csv", ["time", "supRm", "supRic", "volume", "phiMin", "argmax_s"],
              [(s.time, s.supRm, s.supRic, geo.volume(s.profile), phi_min(s.profile), s.argmax_s)
               for s in traj.states])

    T = None
    if traj.blew_up():
        try:
            est = flow.estimate_singular_time(traj)
            T = est.T
            S.add("singularTime.T", est.T)
            S.add("singularTime.slope", est.slope)
            S.add("singularTime.residual", est.residual)
        except NotConverged as exc:
            notes.append(f"singular-time fit failed: {exc}")
            code = EXIT_NUMERIC
            if exc.result is not None:
                S.add("singularTime.T", exc.result.T)
                S.add("singularTime.residual", exc.result.residual)
        if cfg.initialKind == "roundSphere":
            S.add("singularTime.exact", exact_models.SphereModel(cfg.n, cfg.initialParams.get("r0", 1.0)).T)

    # criteria
    for req in cfg.criteria:
        if req.id == "pointwiseF":
            try:
                rows = _pointwise_rows(traj, cfg, S)
            except RicciLabError as exc:
                notes.append(f"pointwiseF failed: {exc}")
                continue
            write_csv(out / "criteria_pointwiseF.csv",
                      ["time", "F_marked", "F_pole", "ratio", "modulus"], rows)
            ratios = np.array([r[3] for r in rows])
            mods = np.array([r[4] for r in rows])
            dec = flow.last_decade(traj) if traj.blew_up() else np.arange(len(traj.states))
            t_dec = traj.times[dec[0]]
            k0 = int(np.searchsorted([r[0] for r in rows], t_dec))
            S.add("pointwiseF.ratioFinal", ratios[-1])
            S.add("pointwiseF.ratioIncreasing", bool(np.all(np.diff(ratios[1:]) >= 0)))
            S.add("pointwiseF.modulusGrowthLastDecade", mods[-1] / mods[k0] if mods[k0] > 0 else math.inf)
            S.add("pointwiseF.poleChangeLastDecade", abs(rows[-1][2] / rows[k0][2] - 1.0) if rows[k0][2] > 0 else math.nan)
            S.add("pointwiseF.concentratedAtNeck",
                  bool(ratios[-1] > 2.0 and 0.05 < S.get("pointwiseF.x0") < 0.95))
            continue
        ser = _criterion_series(traj, req)
        d = ser.divergenceDiagnostic
        law = d.law if d else "none"
        rate = d.rate if d else math.nan
        write_csv(out / f"criteria_{req.label}.csv", ["time", "value", "cumulative", "law", "rate"],
                  [(t, v, c, law, rate) for t, v, c in zip(ser.times, ser.values, ser.cumulative)])
        S.add(f"{req.label}.final", ser.cumulative[-1])
        S.add(f"{req.label}.law", law)
        S.add(f"{req.label}.rate", rate)

    # Sobolev probe
    pr = sb.probe(traj, epsilon=cfg.sobolevEpsilon)
    write_csv(out / "sobolev.csv", ["time", "BMin"], pr.BLowerBounds)
    S.add("sobolev.K2", pr.K ** 2)
    S.add("sobolev.BMin0", pr.values[0])
    S.add("sobolev.BMinFinal", pr.values[-1])
    if T is not None:
        dec = flow.last_decade(traj)
        try:
            S.add("sobolev.BExponent", sb.fit_blowup_exponent(pr.times[dec], pr.values[dec], T))
        except NotConverged as exc:
            notes.append(f"B exponent fit failed: {exc}")

    # rescaling
    model = cfg.rescalingModel
    if model == "auto":
        model = "cylinder" if cfg.initialKind == "dumbbell" else "roundSphere"
    S.add("rescaling.model", model)
    if traj.blew_up() and cfg.rescalingCount > 0:
        try:
            ws = rs.blowup_sequence(traj, cfg.rescalingCount, cfg.rescalingWindow, source_id=cfg.name)
        except NotConverged as exc:
            notes.append(f"blow-up sequence unavailable: {exc}")
            ws = []
        rows = []
        for i, w in enumerate(ws):
            st = w.at_zero()
            s = geo.arclength(st.profile)
            c = st.curvature
            write_csv(out / f"rescaled_{i}.csv", ["s", "kRad", "kSph", "normRm"],
                      zip(s, c.kRad, c.kSph, c.normRm))
            d_s = rs.model_distance(w, "roundSphere", cfg.rescalingRadius)
            d_c = rs.model_distance(w, "cylinder", cfg.rescalingRadius)
            rows.append((i, w.Q, w.tCenter, w.xCenter, float(np.max(c.normRm)), d_s.value, d_c.value,
                         d_s.truncated, w.clipped, rs.window_int_sup_ric(w), rs.source_int_sup_ric(traj, w)))
        write_csv(out / "rescaled_summary.csv",
                  ["index", "Q", "tCenter", "xCenter", "supRmAtZero", "modelDistance_roundSphere",
                   "modelDistance_cylinder", "ballTruncated", "windowClipped", "intSupRicWindow",
                   "intSupRicSource"], rows)
        if rows:
            col = 5 if model == "roundSphere" else 6
            dists = [r[col] for r in rows]
            S.add("rescaling.windows", len(rows))
            S.add("rescaling.modelDistanceFinal", dists[-1])
            S.add("rescaling.modelDistanceMax", max(dists))
            S.add("rescaling.modelDistanceDecreasing", bool(np.all(np.diff(dists) <= 0)))

    # doubling, mean value, comparison ODE
    try:
        dbl = gw.doubling_check(traj)
        S.add("doubling.time", dbl.t_double)
        S.add("doubling.product", dbl.product)
    except NotConverged as exc:
        notes.append(f"doubling check: {exc}")
    try:
        mv = gw.mean_value_check(traj, traj.times[-1], T=T)
    except NotConverged as exc:
        notes.append(f"mean-value check: {exc}")
        return EXIT_NUMERIC
    S.add("meanValue.lhs", mv.lhs)
    S.add("meanValue.rhs", mv.rhs)
    S.add("meanValue.C1", mv.C1)
    S.add("meanValue.C0", mv.C0)
    lw = fn.log_weighted_integral(traj, fit=False)
    C = cfg.gronwallC if cfg.gronwallC != "auto" else (mv.C0 if mv.C0 > 0 else 1.0)
    h0 = cfg.gronwallH0 if cfg.gronwallH0 != "auto" else mv.C1
    S.add("gronwall.C", C)
    S.add("gronwall.h0", h0)
    try:
        rep = gw.extension_verdict(lw.times, lw.values, traj.sup_rm, C, h0, T=T)
        write_csv(out / "gronwall.csv", ["time", "G", "cumulativeG", "h", "f"],
                  zip(lw.times, lw.values, lw.cumulative, rep.run.h, traj.sup_rm))
        S.add("gronwall.totalG", rep.totalG)
        S.add("gronwall.hFinal", rep.run.h[-1])
        S.add("gronwall.hBound", rep.hBound)
        S.add("gronwall.identityError", rep.run.identity_error())
        S.add("gronwall.dominates", rep.run.dominates())
        S.add("verdict", rep.verdict)
    except NotConverged as exc:
        notes.append(f"comparison ODE: {exc}")
    return code


def _write_report(out, S, notes):
    write_csv(out / "summary.csv", ["quantity", "value"], S.rows)
    Path(out / "report.txt").write_text(render_report(S.rows, notes), encoding="utf-8")


def render_report(rows, notes=()):
    width = max([len(k) for k, _ in rows] + [8])
    lines = ["ricci_lab scenario report", ""]
    lines += [f"{k.ljust(width)}  {fmt(v)}" for k, v in rows]
    if notes:
        lines += ["", "notes:"] + [f"  - {n}" for n in notes]
    lines += ["", "tolerances: singular-time residual 2e-2, comparison ODE step-halving 1e-6,",
              "            pointwise-F transport reported (no cutoff)",
              f"versions: ricci_lab {__version__}, numpy {np.__version__}, scipy {scipy.__version__}, "
              f"python {platform.python_version()}", ""]
    return "\n".join(lines)


# --------------------------------------------------------------------------
# sweep

SWEEP_COLUMNS = ["exitCode", "stopReason", "finalTime", "finalSupRm", "singularTime.T",
                 "singularTime.exact", "meanValue.C0", "doubling.product", "sobolev.BExponent",
                 "rescaling.modelDistanceFinal"]


def _override(text, key, value):
    lines = []
    found = False
    for raw in text.splitlines():
        head = raw.split("#", 1)[0]
        if "=" in head and head.split("=", 1)[0].strip() == key:
            lines.append(f"{key} = {value}")
            found = True
        else:
            lines.append(raw)
    if not found:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _cell(args):
    text, assignment, out = args
    for k, v in assignment:
        text = _override(text, k, v)
    text = _override(text, "output", str(out))
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        return EXIT_CONFIG, [("error", str(exc))]
    code = run_scenario(cfg)
    path = output_dir(cfg) / "summary.csv"
    rows = []
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            rows = [tuple(r) for r in csv.reader(fh)][1:]
    return code, rows


def sweep(text, vary, jobs=1):
    """Run every combination of the ``vary`` values ({key: [values]}); returns the exit code.

    Cells write into <output>/cells/<key=value,...>; summary.csv in <output>
    gets one row per cell. A failing cell is recorded and the sweep continues.
    """
    base = parse_config(text)
    root = output_dir(base)
    keys = list(vary)
    combos = list(itertools.product(*(vary[k] for k in keys))) if keys else []
    if any(len(vary[k]) == 0 for k in keys):
        combos = []
    tasks = []
    for combo in combos:
        tag = ",".join(f"{k}={v}" for k, v in zip(keys, combo))
        tasks.append((text, list(zip(keys, combo)), (root / "cells" / tag).resolve()))
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_cell, tasks))
    else:
        results = [_cell(t) for t in tasks]
    crit_cols = sorted({k for _, summary in results for k, _ in summary if k.endswith(".final")})
    header = keys + SWEEP_COLUMNS + crit_cols
    rows = []
    for combo, (code, summary) in zip(combos, results):
        d = dict(summary)
        d["exitCode"] = str(code)
        rows.append(list(combo) + [d.get(c, "") for c in SWEEP_COLUMNS + crit_cols])
    try:
        root.mkdir(parents=True, exist_ok=True)
        write_csv(root / "summary.csv", header, rows)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point

def _parse_vary(items):
    vary = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--vary expects key=a,b,c, got {item!r}", path="--vary")
        k, vals = item.split("=", 1)
        vary[k.strip()] = [v.strip() for v in vals.split(",") if v.strip()]
    return vary


def main(argv=None):
    ap = argparse.ArgumentParser(prog="ricci-lab", description="Rotationally symmetric Ricci flow lab")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("config")
    p_sw = sub.add_parser("sweep", help="run a parameter sweep")
    p_sw.add_argument("config")
    p_sw.add_argument("--vary", action="append", metavar="KEY=A,B,C")
    p_sw.add_argument("--jobs", type=int, default=1)
    p_rep = sub.add_parser("report", help="print the report of a finished run")
    p_rep.add_argument("dir")
    args = ap.parse_args(argv)

    if args.cmd == "report":
        d = Path(args.dir)
        if not d.is_absolute() and not d.exists():
            d = Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / d
        try:
            print((d / "report.txt").read_text(encoding="utf-8"), end="")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.cmd == "run":
            return run_scenario(parse_config(text))
        return sweep(text, _parse_vary(args.vary), jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
