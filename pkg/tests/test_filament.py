import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from filament_lab.filament import (
    Curve3D,
    FrameState,
    advance_curve,
    parallel_transport_frame,
    procrustes,
    reconstruct_self_similar,
    self_similar_curve,
    spiral_initial_curve,
    spiral_limit,
    trace_at_zero,
)
from filament_lab.profile_ode import (
    OddParams,
    integrate_gamma,
    integrate_profile_from_params,
    rotation_generator,
)


def test_frame_validation():
    with pytest.raises(ValueError):
        FrameState(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0, 0, 1.0]))
    with pytest.raises(ValueError):
        FrameState(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, -1.0]))


def test_constant_filament_function_gives_a_circle():
    kappa = 0.5
    x = np.linspace(-3, 3, 301)
    frame = FrameState(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    c = parallel_transport_frame(lambda s: kappa + 0 * np.asarray(s), frame, x=x)
    centre = np.array([0.0, 1 / kappa, 0.0])
    assert np.max(np.abs(np.linalg.norm(c.points - centre, axis=1) - 1 / kappa)) < 1e-10
    assert np.max(np.abs(c.points[:, 2])) < 1e-12


def test_zero_filament_function_gives_a_line():
    x = np.linspace(-2, 2, 41)
    frame = FrameState.from_tangent([0.0, 0.0, 1.0])
    c = parallel_transport_frame(lambda s: 0 * np.asarray(s) + 0j, frame, x=x)
    assert np.max(np.abs(c.points - x[:, None] * np.array([0.0, 0.0, 1.0]))) < 1e-13


def test_procrustes_recovers_rigid_motion(rng):
    P = rng.normal(size=(50, 3))
    R = Rotation.from_rotvec([0.3, -1.1, 0.7]).as_matrix()
    Q = P @ R.T + np.array([1.0, 2.0, -3.0])
    res = procrustes(P, Q)
    assert res.max_distance < 1e-12


def test_reconstruction_matches_closed_form_curve():
    params = OddParams(10.0, 0.956)
    curve = integrate_gamma(params, 60.0, 1e-11)
    sol = integrate_profile_from_params(params, 60.0, 1e-11)
    x = np.linspace(-3, 3, 601)
    rec = reconstruct_self_similar(curve, sol, 0.3, x)
    ref = self_similar_curve(curve, t=0.3, x=x)
    assert procrustes(ref.points, rec.points).max_distance < 1e-5
    # the rebuilt curvature is |u_f|
    assert rec.meta["frame_drift"] < 1e-8


def test_spiral_bound_and_normalisation():
    curve = integrate_gamma(OddParams(1.0, 0.3), 200.0, 1e-11)
    ts = np.geomspace(1.0, 1 / (0.95 * 200) ** 2, 12)
    sp = spiral_limit(curve, ts)
    assert sp.holds
    M = np.eye(3) + rotation_generator(curve.a)
    assert np.linalg.norm(M @ sp.A_plus) == pytest.approx(1.0, abs=1e-3)
    assert np.linalg.norm(M @ sp.A_minus) == pytest.approx(1.0, abs=1e-3)
    assert np.allclose(spiral_initial_curve(np.array([0.0]), curve.a, sp.A_plus, sp.A_minus), 0.0)


@pytest.mark.xfail(strict=True, reason="|A+-| is not near 1 for large a; |(I+R)A+-| = 1 instead")
def test_spiral_vectors_have_unit_length_for_large_a():
    curve = integrate_gamma(OddParams(10.0, 0.956), 200.0, 1e-11)
    sp = spiral_limit(curve, np.geomspace(1.0, 1e-4, 5))
    assert 0.9 <= np.linalg.norm(sp.A_plus) <= 1.1


def test_trace_exponent_is_one_half():
    curve = integrate_gamma(OddParams(10.0, 0.956), 200.0, 1e-11)
    ts = np.geomspace(1.0, 1 / (0.95 * 200) ** 2, 25)
    sp = spiral_limit(curve, ts)
    x = np.linspace(-1, 1, 401)
    traj = [self_similar_curve(curve, t=t, x=x) for t in ts]
    rep = trace_at_zero(traj, reference=spiral_initial_curve(x, curve.a, sp.A_plus, sp.A_minus))
    assert 0.45 <= rep.exponent <= 0.55


def test_binormal_step_translates_a_circle():
    kappa = 1.0
    x = np.linspace(-np.pi, np.pi, 2001)
    frame = FrameState(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    c = parallel_transport_frame(lambda s: kappa + 0 * np.asarray(s), frame, x=x)
    moved = advance_curve(c, lambda s: kappa + 0 * np.asarray(s), 0.1)
    # a circle moves rigidly along its binormal with speed kappa
    assert np.max(np.abs(moved.points[:, 2] - 0.1 * kappa)) < 1e-10
    assert moved.arclength_defect() < 1e-3


def test_curve_csv_round_trip(tmp_path):
    x = np.linspace(0, 1, 11)
    c = Curve3D(x, np.column_stack([x, x**2, 0 * x]), 0.5, curvature=np.ones_like(x))
    c.to_csv(tmp_path / "c.csv")
    back = Curve3D.from_csv(tmp_path / "c.csv")
    assert np.array_equal(back.points, c.points)
    assert back.time == 0.5
