"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one PASS/FAIL line (also collected in the terminal summary)
before asserting, so a failing criterion still reports its measured values.
"""

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from ricci_lab import cli, exact_models as em, flow, functionals as fn, geometry as geo
from ricci_lab import gronwall as gw, rescaling as rs, sobolev as sb

from conftest import _random_profile

SQRT3 = math.sqrt(3.0)


# 1 ---------------------------------------------------------------------------

def test_criterion_1_sphere_regression(sphere_run, verdict):
    p0 = flow.initial_profile(flow.RoundSphere(1.0), 3, 1025)
    traj = flow.run(p0, flow.StepControl(), until_time=0.2, snapshot_dt=0.01)
    t = traj.times
    r2 = np.array([(s.profile.psi[0] / math.pi) ** 2 for s in traj.states])
    err = float(np.max(np.abs(r2 - (1 - 4 * t)) / (1 - 4 * t)))
    # the blow-up fit needs the run past t = 0.2; the N = 129 run uses the same scheme
    T = flow.estimate_singular_time(sphere_run).T
    ok = err < 1e-4 and abs(T - 0.25) <= 1e-3 and t[-1] == pytest.approx(0.2, abs=1e-14)
    verdict(1, ok, f"max rel err r^2 = {err:.2e} on [0, 0.2] (N=1025); T = {T:.9f}")
    assert ok


# 2 ---------------------------------------------------------------------------

def test_criterion_2_curvature_oracle(verdict):
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(20):
        p = _random_profile(rng)
        a, b = geo.curvature(p), geo.oracle_curvature_fd(p)
        inner = slice(4, p.N - 4)
        for k in ("kRad", "kSph"):
            x, y = getattr(a, k)[inner], getattr(b, k)[inner]
            # relative to the field's scale: kRad crosses zero on most profiles
            worst = max(worst, float(np.max(np.abs(x - y)) / np.max(np.abs(y))))
    ok = worst < 1e-6
    verdict(2, ok, f"worst interior deviation / sup|k| {worst:.2e} over 20 profiles")
    assert ok


# 3 ---------------------------------------------------------------------------

def test_criterion_3_sphere_criteria(sphere_run, verdict):
    m = em.SphereModel(3, 1.0)
    ric = fn.int_sup_ric_series(sphere_run).at(0.125)
    ric_exact = SQRT3 / 2 * math.log(2)
    ok_ric = abs(ric / ric_exact - 1) < 0.01

    s2 = fn.space_time_lp(sphere_run, 2.0)
    t_last = s2.times[-1]
    # closed-form tail over [t_last, T)
    tail = em.sphere_tail_descriptor(m, "spaceTimeLp", 2.0)[2] - em.sphere_criterion_closed_form(m, "spaceTimeLp", t_last, 2.0)
    total = s2.cumulative[-1] + tail
    ok_p2 = abs(total / (12 * math.pi ** 2) - 1) < 0.01

    d25 = fn.space_time_lp(sphere_run, 2.5).divergenceDiagnostic
    rate_exact = em.sphere_tail_descriptor(m, "spaceTimeLp", 2.5)[1]
    ok_p25 = d25.law == "log" and abs(d25.rate / rate_exact - 1) < 0.02

    dl = fn.log_weighted_integral(sphere_run).divergenceDiagnostic
    ok_lw = dl.law == "log-log" and dl.residual("log-log") < dl.residual("log")

    ok = ok_ric and ok_p2 and ok_p25 and ok_lw
    verdict(3, ok, f"intSupRic(1/8) = {ric:.5f} vs {ric_exact:.5f}; L2 total {total:.3f} vs {12 * math.pi ** 2:.3f}; "
                   f"p=2.5 rate {d25.rate:.3f} vs {rate_exact:.3f} ({d25.law}); "
                   f"logWeighted law {dl.law}, residuals {dl.residual('log-log'):.2e} < {dl.residual('log'):.2e}")
    assert ok


# 4 ---------------------------------------------------------------------------

def _worst_identity(traj, pairs):
    u = lambda x: np.cos(math.pi * x)
    worst = {}
    for i, j in pairs:
        for c in fn.check_evolution_identities(traj, traj.times[i], traj.times[j], u):
            worst[c.name] = max(worst.get(c.name, 0.0), c.worst)
    return worst


def test_criterion_4_evolution_identities(sphere_run, dumbbell_run, verdict):
    sph = _worst_identity(sphere_run, [(i, i + 1) for i in range(len(sphere_run.states) - 1)])
    # the first stored dumbbell pair spans the whole pre-pinch phase (sup|Rm| barely
    # grows there), so that phase is sampled separately at a resolvable spacing
    db = _worst_identity(dumbbell_run, [(i, i + 1) for i in range(1, len(dumbbell_run.states) - 1)])
    early = flow.run(flow.initial_profile(flow.Dumbbell(), 3, 1025), flow.StepControl(),
                     until_time=0.03, snapshot_dt=2.5e-4, snapshot_growth=1e9)
    db_early = _worst_identity(early, [(i, i + 1) for i in range(len(early.states) - 1)])
    worst = max(max(d.values()) for d in (sph, db, db_early))
    ok = worst <= 0.01
    fmt = lambda d: ", ".join(f"{k} {v:.1e}" for k, v in d.items())
    verdict(4, ok, f"worst {worst:.2e}; sphere [{fmt(sph)}]; dumbbell [{fmt(db)}]; dumbbell early [{fmt(db_early)}]")
    assert ok


# 5 ---------------------------------------------------------------------------

def _trapezoid_error_estimate(t, y):
    # Richardson: the error of the full-node trapezoid is about a third of its gap to the half-node one
    return abs(trapezoid(y, t) - trapezoid(y[::2], t[::2])) / 3 if len(t) > 2 else math.inf


def test_criterion_5_rescaling(sphere_run, dumbbell_run, verdict):
    sph = rs.blowup_sequence(sphere_run, len(sphere_run.doubling_indices))
    db = rs.blowup_sequence(dumbbell_run, len(dumbbell_run.doubling_indices))
    unit = max(abs(float(np.max(w.at_zero().curvature.normRm)) - 1) for w in sph + db)

    # change of variables: rescaled window integral vs source integral on the same span,
    # and on the sphere vs the closed-form source integral within the trapezoid error
    cov_discrete = max(abs(rs.window_int_sup_ric(w) / rs.source_int_sup_ric(tr, w) - 1)
                       for tr, ws in ((sphere_run, sph), (dumbbell_run, db)) for w in ws)
    m = em.SphereModel(3, 1.0)
    cov_ok = True
    cov_worst = 0.0
    for w in sph:
        if w.clipped:
            continue
        t0 = w.tCenter + w.taus[0] / w.Q
        exact = em.sphere_criterion_closed_form(m, "intSupRic", w.tCenter) - em.sphere_criterion_closed_form(m, "intSupRic", t0)
        sup = np.array([float(np.max(s.curvature.normRic)) for s in w.states])
        est = _trapezoid_error_estimate(w.taus, sup)
        gap = abs(rs.window_int_sup_ric(w) - exact)
        cov_worst = max(cov_worst, gap / est)
        cov_ok &= gap <= 2 * est

    d_cyl = [rs.model_distance(w, "cylinder").value for w in db]
    d_sph = [rs.model_distance(w, "roundSphere").value for w in sph]
    decreasing = bool(np.all(np.diff(d_cyl) < 0))
    ok = unit <= 1e-6 and cov_discrete < 1e-9 and cov_ok and decreasing and d_cyl[-1] < 0.05 and max(d_sph) < 1e-3
    verdict(5, ok, f"||Rm|-1| <= {unit:.1e} over {len(sph) + len(db)} windows; change of variables {cov_discrete:.1e} "
                   f"(discrete), <= {cov_worst:.2f} x trapezoid error (exact); cylinder distances "
                   f"{' > '.join(f'{d:.2e}' for d in d_cyl)}; sphere distance max {max(d_sph):.1e}")
    assert ok


# 6 ---------------------------------------------------------------------------

def test_criterion_6_neckpinch_rate(dumbbell_run, verdict):
    T = flow.estimate_singular_time(dumbbell_run).T
    idx = flow.last_decade(dumbbell_run)
    ratios = np.array([cli.phi_min(dumbbell_run.states[i].profile) ** 2 / (2 * (T - dumbbell_run.times[i]))
                       for i in idx])
    ok = bool(np.all((ratios >= 0.85) & (ratios <= 1.15)))
    verdict(6, ok, f"phi_min^2 / (2 (T - t)) in [{ratios.min():.5f}, {ratios.max():.5f}] over {len(idx)} snapshots, "
                   f"T = {T:.7f}")
    assert ok


# 7 ---------------------------------------------------------------------------

def test_criterion_7_localized_equicontinuity_loss(dumbbell_run, verdict):
    traj = dumbbell_run
    idx, F, _ = fn.pointwise_F_history(traj)
    last = traj.states[idx[-1]]
    # material point that ends at the final sup|Rm| point (the neck)
    x_end = np.interp(last.argmax_s / last.profile.psi[0], last.material, traj.states[0].profile.x)
    j = int(np.argmin(np.abs(traj.states[0].profile.x - x_end)))
    delta = 0.1 * float(traj.states[0].profile.psi[0])
    neck, pole, mod = [], [], []
    for k, i in enumerate(idx):
        st = traj.states[i]
        neck.append(F[k][j])
        pole.append(0.5 * (F[k][0] + F[k][-1]))
        mod.append(fn.continuity_modulus(np.interp(st.profile.x, st.material, F[k]), st.profile, delta).value)
    neck, pole, mod = map(np.array, (neck, pole, mod))
    dec = flow.last_decade(traj)
    k0 = int(np.searchsorted(traj.times[idx], traj.times[dec[0]]))
    ratio = neck[1:] / pole[1:]            # F vanishes at t = 0
    increasing = bool(np.all(np.diff(ratio) > 0))
    growth = mod[-1] / mod[k0]
    pole_change = abs(pole[-1] / pole[k0] - 1)
    ok = increasing and growth >= 10 and pole_change < 0.1
    verdict(7, ok, f"F(neck)/F(pole) {ratio[k0 - 1]:.2f} -> {ratio[-1]:.2f} (increasing: {increasing}); "
                   f"modulus growth over final decade {growth:.2f}x (need >= 10x); pole change {pole_change:.1%}")
    assert ok


# 8 ---------------------------------------------------------------------------

def test_criterion_8_sobolev(sphere_run, dumbbell_run, verdict):
    qs = [sb.bubble_quotient(3, eps) for eps in (1e-3, 1e-1, 1.0, 10.0, 1e3)]
    spread = (max(qs) - min(qs)) / min(qs)
    K2 = sb.talenti_K(3) ** 2
    vs_K = abs(qs[2] / K2 - 1)

    pr = sb.probe(sphere_run)
    T = flow.estimate_singular_time(sphere_run).T
    expo = sb.fit_blowup_exponent(pr.times, pr.values, T)

    worst = 0.0
    st = dumbbell_run.states[len(dumbbell_run.states) // 2]
    for _, u in sb.TestFamily().functions(st.profile):
        base = np.array(sb.sobolev_terms(st.profile, u))
        for Q in (0.25, 4.0, 100.0):
            got = np.array(sb.sobolev_terms(st.profile.scaled(math.sqrt(Q)), u))
            want = base * np.array([Q ** 0.5, Q ** 0.5, Q ** 1.5])
            worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-300))))
    ok = spread < 1e-6 and vs_K < 1e-3 and abs(expo + 1) <= 0.02 and worst < 1e-6
    verdict(8, ok, f"bubble spread over eps {spread:.1e}, vs K(3,2)^2 {vs_K:.1e}; B_min exponent {expo:.4f}; "
                   f"homogeneity worst {worst:.1e}")
    assert ok


# 9 ---------------------------------------------------------------------------

def test_criterion_9_gronwall_suite(sphere_run, verdict):
    d = gw.doubling_check(sphere_run)
    ok_d = abs(d.product / (SQRT3 / 4) - 1) < 0.01

    witnesses = []
    for r0 in (0.8, 1.0, 1.2):
        tr = flow.run(flow.initial_profile(flow.RoundSphere(r0), 3, 65), flow.StepControl(qMax=1e4))
        T = flow.estimate_singular_time(tr).T
        witnesses.append(gw.mean_value_check(tr, 0.9 * T, T=T).C0)
    spread = max(witnesses) / min(witnesses)
    ok_mv = min(witnesses) > 0 and spread <= 2

    lw = fn.log_weighted_integral(sphere_run, fit=False)
    keep = lw.times <= 0.24
    ident = gw.gronwall_run(lw.times[keep], lw.values[keep], 1e-3, 1.0).identity_error()
    ok_id = ident < 1e-6

    unbounded = all(gw.inv_psi_integral(1.0, gw.invert_inv_psi(1.0, B + 0.1)) > B for B in (1.0, 2.0, 3.0, 4.0))

    rng = np.random.default_rng(9)
    prop = True
    for _ in range(100):
        t = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, 29))])
        G = rng.uniform(0, 2, 30)
        lo = gw.integrate_H(t, G, 0.5, 0.3)
        hi = gw.integrate_H(t, G + rng.uniform(0, 0.5, 30), 0.5, 0.3)
        prop &= bool(np.all(hi >= lo * (1 - 1e-9)) and np.all(np.diff(lo) >= -1e-12))
    ok = ok_d and ok_mv and ok_id and unbounded and prop
    verdict(9, ok, f"doubling product {d.product:.5f} vs {SQRT3 / 4:.5f}; C0 witnesses "
                   f"{', '.join(f'{w:.5g}' for w in witnesses)} (ratio {spread:.3f}); identity {ident:.1e}; "
                   f"unbounded {unbounded}; comparison/monotonicity on 100 series {prop}")
    assert ok


# 10 --------------------------------------------------------------------------

CONV_TIMES = np.linspace(0.0, 0.025, 26)


def _segmented(N):
    """sup|Ric| and int |Rm|^2 at exactly CONV_TIMES, by running segment to segment."""
    p = flow.initial_profile(flow.Dumbbell(), 3, N)
    out = []
    for t in CONV_TIMES:
        if t > p.time:
            p = flow.run(p, flow.StepControl(), until_time=t, snapshot_growth=1e9).states[-1].profile
        c = geo.curvature(p)
        out.append((float(np.max(c.normRic)), geo.integrate_scalar(p, c.normRm ** 2)))
    out = np.array(out)
    return np.array([trapezoid(out[:, 0], CONV_TIMES), trapezoid(out[:, 1], CONV_TIMES)])


def test_criterion_10_determinism_and_convergence(tmp_path, monkeypatch, verdict):
    monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(tmp_path))
    cfg = tmp_path / "s.cfg"
    cfg.write_text("name = det\nN = 65\nstep.qMax = 1e4\ncriteria = intSupRic, spaceTimeLp, logWeighted\n"
                   "criteria.spaceTimeLp.p = 2, 2.5\nrescaling.count = 4\n")
    assert cli.main(["run", str(cfg)]) == 0
    out = tmp_path / "det"
    first = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    assert cli.main(["run", str(cfg)]) == 0
    second = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    identical = first == second and len(first) > 5

    v = [_segmented(N) for N in (257, 513, 1025)]
    orders = np.log2(np.abs(v[0] - v[1]) / np.abs(v[1] - v[2]))
    ok = identical and bool(np.all(orders >= 2))
    verdict(10, ok, f"byte-identical reruns over {len(first)} files: {identical}; observed orders "
                    f"intSupRic {orders[0]:.2f}, spaceTimeL2 {orders[1]:.2f} (N = 257, 513, 1025)")
    assert ok
