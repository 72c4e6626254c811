import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maam_motion.errors import DegenerateSegment, InvariantError, SubdivisionLimit
from maam_motion.extrusion import (ExtrusionParams, achievable_tip_speed, densify, extrusion_volume,
                                   segment_volumes, segment_windows, speed_window, tip_speeds)
from maam_motion.kinematics import MachineConfig, MachineCoords, rotary_fk
from maam_motion.toolpath import Toolpath, Waypoint

Z = np.array([0.0, 0.0, 1.0])
pos = st.floats(-50, 50, allow_nan=False)
size = st.floats(0.05, 1.0)


def wp(x, t=0.2, w=0.4, y=0.0, z=0.0):
    return Waypoint(np.array([x, y, z], float), Z, t, w)


def test_volume_example():
    a, b = wp(0, 0.4, 0.4), wp(2, 0.4, 0.4)
    assert extrusion_volume(a, b, ExtrusionParams()) == pytest.approx(0.32, rel=1e-15)


def test_coincident_points():
    with pytest.raises(DegenerateSegment):
        extrusion_volume(wp(1), wp(1), ExtrusionParams())


def test_window_example():
    a, b = wp(0, 0.4, 0.4), wp(2, 0.4, 0.4)
    win = speed_window(a, b, ExtrusionParams(f_min=0.8, f_max=20.0))
    assert (win.v_min, win.v_max) == pytest.approx((5.0, 125.0))
    assert win.delta_e == pytest.approx(0.32)


def test_default_window_on_default_bead():
    win = speed_window(wp(0), wp(1), ExtrusionParams())
    assert (win.v_min, win.v_max) == pytest.approx((1.0, 25.0))


def test_params_invariants():
    for kw in (dict(k=0), dict(f_min=0), dict(f_min=2.0, f_max=1.0), dict(f_min=1.0, f_max=1.0)):
        with pytest.raises(InvariantError):
            ExtrusionParams(**kw)


@given(pos, pos, pos, size, size, size, size)
def test_volume_properties(x0, x1, y1, ta, tb, wa, wb):
    a = wp(x0, ta, wa)
    b = wp(x1, tb, wb, y=y1)
    if np.linalg.norm(b.p - a.p) < 1e-6:
        return
    p = ExtrusionParams()
    e = extrusion_volume(a, b, p)
    assert extrusion_volume(b, a, p) == e
    far = Waypoint(a.p + 2.0 * (b.p - a.p), Z, tb, wb)
    assert extrusion_volume(a, far, p) == pytest.approx(2 * e, rel=1e-12)
    thick = extrusion_volume(wp(x0, 2 * ta, wa), Waypoint(b.p, Z, 2 * tb, wb), p)
    assert thick == pytest.approx(2 * e, rel=1e-12)


@given(pos, pos, size, size, st.floats(0.01, 5.0), st.floats(1.001, 100.0))
def test_window_identities(x0, x1, t, w, f_min, ratio):
    if abs(x1 - x0) < 1e-6:
        return
    p = ExtrusionParams(k=1.3, f_min=f_min, f_max=f_min * ratio)
    win = speed_window(wp(x0, t, w), wp(x1, t, w), p)
    dist = abs(x1 - x0)
    assert win.v_min / win.v_max == pytest.approx(p.f_min / p.f_max, rel=1e-14)
    assert win.v_min * win.t_max == pytest.approx(dist, rel=1e-12)
    assert win.v_max * win.t_min == pytest.approx(dist, rel=1e-12)


def test_equal_limits_collapse_window():
    win = speed_window(wp(0), wp(1), ExtrusionParams(f_min=1.0, f_max=np.nextafter(1.0, 2.0)))
    assert win.v_min == pytest.approx(win.v_max)


def test_vectorized_matches_scalar(rng):
    p = np.cumsum(rng.uniform(0.1, 1, (20, 3)), axis=0)
    tp = Toolpath(p, np.tile(Z, (20, 1)), rng.uniform(0.1, 0.3, 20), rng.uniform(0.3, 0.5, 20))
    params = ExtrusionParams()
    ref = [extrusion_volume(tp.waypoint(i), tp.waypoint(i + 1), params) for i in range(19)]
    assert np.allclose(segment_volumes(tp, params), ref, rtol=1e-14)
    lo, hi = segment_windows(tp, params)
    ref_lo = [speed_window(tp.waypoint(i), tp.waypoint(i + 1), params).v_min for i in range(19)]
    assert np.allclose(lo, ref_lo, rtol=1e-14)


# -- achievable speed ------------------------------------------------------------


def test_no_rotary_motion_is_capped():
    cfg = MachineConfig()
    win = speed_window(wp(0), wp(1), ExtrusionParams())
    v, ok = achievable_tip_speed(MachineCoords(0, 0, 0, 0, 0), MachineCoords(1, 0, 0, 0, 0), 1.0, cfg, win)
    assert v == win.v_max and ok


def test_c_jump_is_too_slow():
    cfg = MachineConfig(max_axis_speed=(100, 100, 100, 36, 36))
    win = speed_window(wp(0), wp(0.5), ExtrusionParams())
    v, ok = achievable_tip_speed(MachineCoords(0, 0, 0, 0, 0), MachineCoords(0.5, 0, 0, 0, 72), 0.5,
                                 cfg, win)
    assert v == pytest.approx(0.25) and not ok


def test_halving_limits_halves_speed():
    a, b = MachineCoords(0, 0, 0, 0, 0), MachineCoords(0.5, 0, 0, 10, 72)
    win = speed_window(wp(0), wp(0.5), ExtrusionParams())
    fast = MachineConfig(max_axis_speed=(100, 100, 100, 36, 36))
    slow = MachineConfig(max_axis_speed=(50, 50, 50, 18, 18))
    v1, _ = achievable_tip_speed(a, b, 0.5, fast, win)
    v2, _ = achievable_tip_speed(a, b, 0.5, slow, win)
    assert v2 == pytest.approx(v1 / 2)


def test_tip_speeds_vector():
    mcs = np.array([[0, 0, 0, 0, 0], [1, 0, 0, 0, 0], [1, 0, 0, 0, 36.0]])
    v = tip_speeds(mcs, [1.0, 1.0], MachineConfig(), 25.0)
    assert v.tolist() == [25.0, 1.0]


# -- densify -----------------------------------------------------------------------


def _path(xs, tilt=None):
    m = len(xs)
    n = np.tile(Z, (m, 1)) if tilt is None else rotary_fk(tilt, np.zeros(m))
    return Toolpath(np.stack([xs, np.zeros(m), np.zeros(m)], 1), n,
                    np.linspace(0.2, 0.3, m), np.linspace(0.4, 0.5, m))


def test_densify_fixed_point():
    tp = _path(np.arange(5.0))
    assert densify(tp, ExtrusionParams(), segment_period=1.0) is tp


def test_densify_splits_once():
    # default bead: v_max = 25 mm/s; a 1 mm segment per 0.02 s runs at 50 mm/s
    tp = Toolpath(np.array([[0, 0, 0], [1.0, 0, 0]]), np.tile(Z, (2, 1)))
    out = densify(tp, ExtrusionParams(), segment_period=0.02)
    assert len(out) == 3
    _, hi = segment_windows(out, ExtrusionParams())
    assert np.all(out.segment_lengths / 0.02 <= hi * (1 + 1e-12))


@given(st.lists(st.floats(0.05, 3.0), min_size=1, max_size=8), st.floats(0.005, 0.2))
def test_densify_preserves_length_and_volume(steps, period):
    xs = np.concatenate([[0.0], np.cumsum(steps)])
    tp = _path(xs, tilt=np.linspace(0, 40, len(xs)))
    params = ExtrusionParams()
    out = densify(tp, params, period)
    assert len(out) >= len(tp)
    assert out.segment_lengths.sum() == pytest.approx(tp.segment_lengths.sum(), abs=1e-9)
    assert segment_volumes(out, params).sum() == pytest.approx(segment_volumes(tp, params).sum(), rel=1e-6)
    _, hi = segment_windows(out, params)
    assert np.all(out.segment_lengths / period <= hi * (1 + 1e-12))
    assert np.abs(np.linalg.norm(out.normals, axis=1) - 1).max() < 1e-9


def test_densify_limit():
    tp = Toolpath(np.array([[0, 0, 0], [100.0, 0, 0]]), np.tile(Z, (2, 1)))
    with pytest.raises(SubdivisionLimit):
        densify(tp, ExtrusionParams(), segment_period=1e-3)
