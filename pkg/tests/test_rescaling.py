import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ricci_lab import flow, geometry as geo, rescaling as rs
from ricci_lab.errors import NotConverged, OutOfRange, SingularData


@pytest.fixture(scope="module")
def short_sphere():
    p0 = flow.initial_profile(flow.RoundSphere(1.0), 3, 65)
    return flow.run(p0, flow.StepControl(), until_time=0.1, snapshot_dt=0.01)


def test_identity_rescaling(short_sphere):
    t = short_sphere.times[5]
    w = rs.rescale_at(short_sphere, t, window=(-0.01, 0.0), Q=1.0)
    st0 = w.at_zero()
    src = short_sphere.states[5]
    np.testing.assert_allclose(st0.profile.phi, src.profile.phi)
    np.testing.assert_allclose(st0.curvature.normRm, src.curvature.normRm)
    assert st0.tau == 0.0


def test_unit_curvature_at_centre(sphere_run):
    for w in rs.blowup_sequence(sphere_run, 6):
        assert float(np.max(w.at_zero().curvature.normRm)) == pytest.approx(1.0, abs=1e-9)


def test_sphere_model_curvature(sphere_run):
    w = rs.blowup_sequence(sphere_run, 1)[0]
    c = w.at_zero().curvature
    np.testing.assert_allclose(c.kRad, 1 / math.sqrt(12), rtol=1e-4)
    d = rs.model_distance(w, "roundSphere")
    assert d.value < 1e-3
    assert rs.model_distance(w, "cylinder").value > 0.1


@given(st.floats(0.5, 4.0), st.floats(0.5, 4.0))
def test_composition(a, b):
    p0 = flow.initial_profile(flow.RoundSphere(1.0), 3, 33)
    traj = flow.FlowTrajectory(states=[flow.make_state(p0)], stopReason=flow.StopReason.ReachedTime)
    w_ab = rs.rescale_at(traj, 0.0, window=(0.0, 0.0), Q=a * b)
    w_a_b = rs.rescale_window(rs.rescale_at(traj, 0.0, window=(0.0, 0.0), Q=a), b)
    assert w_a_b.Q == pytest.approx(w_ab.Q)
    np.testing.assert_allclose(w_a_b.states[0].profile.phi, w_ab.states[0].profile.phi, rtol=1e-13)
    assert w_a_b.xCenter == pytest.approx(w_ab.xCenter)


def test_change_of_variables(sphere_run):
    for w in rs.blowup_sequence(sphere_run, 4):
        # int sup|Ric_Q| dtau = int sup|Ric| dt on matching spans
        assert rs.window_int_sup_ric(w) == pytest.approx(rs.source_int_sup_ric(sphere_run, w), rel=1e-9)


def test_window_errors(short_sphere):
    t = short_sphere.times[5]
    with pytest.raises(OutOfRange):
        rs.rescale_at(short_sphere, 0.0123, Q=1.0)
    with pytest.raises(SingularData):
        rs.rescale_at(short_sphere, t, Q=0.0)
    with pytest.raises(OutOfRange):
        rs.rescale_at(short_sphere, t, window=(0.5, 1.0))
    with pytest.raises(OutOfRange):
        rs.rescale_at(short_sphere, t, window=(-10.0, 0.0), Q=1.0)
    w = rs.rescale_at(short_sphere, t, window=(-10.0, 0.0), Q=1.0, clip=True)
    assert w.clipped
    with pytest.raises(OutOfRange):
        rs.model_curvatures(3, "torus")


def test_blowup_sequence_counts(sphere_run, short_sphere):
    assert rs.blowup_sequence(sphere_run, 0) == []
    assert len(sphere_run.doubling_indices) >= 16
    assert len(rs.blowup_sequence(sphere_run, 16)) == 16
    with pytest.raises(NotConverged):
        rs.blowup_sequence(sphere_run, 10_000)
    with pytest.raises(NotConverged):
        rs.blowup_sequence(short_sphere, 1)
    with pytest.raises(OutOfRange):
        rs.blowup_sequence(sphere_run, -1)


def test_model_distance_truncation(sphere_run):
    w = rs.blowup_sequence(sphere_run, 1)[0]
    assert rs.model_distance(w, "roundSphere", radius=100.0).truncated
    with pytest.raises(OutOfRange):
        rs.model_distance(w, "roundSphere", radius=100.0, strict=True)


def test_model_curvatures_normalized():
    for n in (3, 4, 6):
        for model in ("roundSphere", "cylinder"):
            kr, ks = rs.model_curvatures(n, model)
            c = geo.CurvatureField.from_sectional(n, np.array([kr]), np.array([ks]))
            assert float(c.normRm[0]) == pytest.approx(1.0)
