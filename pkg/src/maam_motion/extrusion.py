"""Extrusion volume per segment and the tip-speed window it implies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSegment, InvariantError, SubdivisionLimit
from .kinematics import MachineConfig, MachineCoords
from .toolpath import Toolpath

MAX_SPLITS = 64
# relative slack on v <= v_max so exact halvings are not split again over rounding
SPEED_RTOL = 1e-12


@dataclass(frozen=True)
class ExtrusionParams:
    """Calibration coefficient ``k`` and the stable extruder feedrate range (mm^3/s).

    The defaults give a [1, 25] mm/s tip-speed window on a 0.2 x 0.4 mm bead.
    """

    k: float = 1.0
    f_min: float = 0.08
    f_max: float = 2.0

    def __post_init__(self):
        if not (self.k > 0 and 0 < self.f_min < self.f_max):
            raise InvariantError("need k > 0 and 0 < f_min < f_max")


@dataclass(frozen=True)
class SpeedWindow:
    v_min: float
    v_max: float
    t_min: float
    t_max: float
    delta_e: float


def extrusion_volume(a, b, params: ExtrusionParams) -> float:
    """Material volume deposited between waypoints ``a`` and ``b``."""
    dist = float(np.linalg.norm(np.asarray(b.p, float) - np.asarray(a.p, float)))
    if dist == 0.0:
        raise DegenerateSegment("coincident waypoints")
    return params.k / 4.0 * (a.thickness + b.thickness) * (a.width + b.width) * dist


def speed_window(a, b, params: ExtrusionParams) -> SpeedWindow:
    dist = float(np.linalg.norm(np.asarray(b.p, float) - np.asarray(a.p, float)))
    de = extrusion_volume(a, b, params)
    return SpeedWindow(
        v_min=params.f_min * dist / de,
        v_max=params.f_max * dist / de,
        t_min=de / params.f_max,
        t_max=de / params.f_min,
        delta_e=de,
    )


def segment_volumes(tp: Toolpath, params: ExtrusionParams) -> np.ndarray:
    """Vectorized :func:`extrusion_volume` over every segment of ``tp``."""
    t, w = tp.thickness, tp.width
    return params.k / 4.0 * (t[:-1] + t[1:]) * (w[:-1] + w[1:]) * tp.segment_lengths


def segment_windows(tp: Toolpath, params: ExtrusionParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-segment ``(v_min, v_max)`` arrays."""
    de = segment_volumes(tp, params)
    dist = tp.segment_lengths
    return params.f_min * dist / de, params.f_max * dist / de


def axis_times(mcs_a, mcs_b, cfg: MachineConfig) -> np.ndarray:
    """Time each axis needs for a move, shape (N, 5) for (N, 5) machine coordinates."""
    delta = np.abs(np.atleast_2d(mcs_b) - np.atleast_2d(mcs_a))
    return delta / np.asarray(cfg.max_axis_speed)


def tip_speeds(mcs, dist, cfg: MachineConfig, v_cap) -> np.ndarray:
    """Axis-limited tip speed for consecutive rows of an (N, 5) machine trajectory.

    The C column must already be unwrapped.
    """
    mcs = np.asarray(mcs, dtype=float)
    t_axes = axis_times(mcs[:-1], mcs[1:], cfg).max(axis=1)
    dist = np.asarray(dist, dtype=float)
    with np.errstate(divide="ignore"):
        v = np.where(t_axes > 0, dist / np.where(t_axes > 0, t_axes, 1.0), np.inf)
    return np.minimum(v, v_cap)


def achievable_tip_speed(a: MachineCoords, b: MachineCoords, dist: float,
                         cfg: MachineConfig, win: SpeedWindow, v_cap=None):
    """Fastest tip speed the axes allow for one move, capped at ``v_cap``.

    ``v_cap`` defaults to the window's upper bound.  Returns ``(v, feasible)``
    where feasible means ``v`` lies inside the window.
    """
    cap = win.v_max if v_cap is None else v_cap
    v = float(tip_speeds(np.stack([a.as_array(), b.as_array()]), [dist], cfg, cap)[0])
    return v, bool(win.v_min <= v <= win.v_max)


def _slerp(n0, n1, t):
    dot = float(np.clip(np.dot(n0, n1), -1.0, 1.0))
    omega = np.arccos(dot)
    if omega < 1e-12:
        out = n0 + t * (n1 - n0)
    else:
        out = (np.sin((1 - t) * omega) * n0 + np.sin(t * omega) * n1) / np.sin(omega)
    return out / np.linalg.norm(out)


def _midpoint(p0, p1, n0, n1, t0, t1, w0, w1):
    t_mid = 0.5 * (t0 + t1)
    # width chosen so the two halves deposit exactly the parent's volume
    s, w = t0 + t1, w0 + w1
    a, b = t0 + t_mid, t_mid + t1
    w_mid = (2.0 * s * w - a * w0 - b * w1) / (2.0 * s)
    return 0.5 * (p0 + p1), _slerp(n0, n1, 0.5), t_mid, w_mid


def densify(tp: Toolpath, params: ExtrusionParams, segment_period: float) -> Toolpath:
    """Bisect segments whose tip speed would exceed the window's upper bound.

    Waypoints are assumed to be executed one per ``segment_period`` seconds, so
    a segment of length L moves the tip at L / period.  Each offending segment
    is halved recursively (linear position, spherical orientation) until every
    piece is within its own v_max.
    """
    if segment_period <= 0:
        raise ValueError("segment_period must be positive")
    P, N, T, W, S = tp.positions, tp.normals, tp.thickness, tp.width, tp.status
    out_p, out_n, out_t, out_w, out_s = [P[0]], [N[0]], [T[0]], [W[0]], [S[0]]
    changed = False

    for i in range(len(tp) - 1):
        stack = [(P[i], N[i], T[i], W[i], P[i + 1], N[i + 1], T[i + 1], W[i + 1])]
        splits = 0
        pieces = []
        while stack:
            p0, n0, t0, w0, p1, n1, t1, w1 = stack.pop()
            dist = float(np.linalg.norm(p1 - p0))
            de = params.k / 4.0 * (t0 + t1) * (w0 + w1) * dist
            v_max = params.f_max * dist / de
            if dist / segment_period <= v_max * (1.0 + SPEED_RTOL):
                pieces.append((p1, n1, t1, w1))
                continue
            splits += 1
            if splits > MAX_SPLITS:
                raise SubdivisionLimit(f"segment {i} needs more than {MAX_SPLITS} splits")
            pm, nm, tm, wm = _midpoint(p0, p1, n0, n1, t0, t1, w0, w1)
            # second half pushed first so the first half is processed next
            stack.append((pm, nm, tm, wm, p1, n1, t1, w1))
            stack.append((p0, n0, t0, w0, pm, nm, tm, wm))
        changed |= len(pieces) > 1
        for j, (p, n, t, w) in enumerate(pieces):
            out_p.append(p)
            out_n.append(n)
            out_t.append(t)
            out_w.append(w)
            out_s.append(S[i + 1] if j == len(pieces) - 1 else S[i])

    if not changed:
        return tp
    return Toolpath(np.array(out_p), np.array(out_n), np.array(out_t), np.array(out_w),
                    layer_id=tp.layer_id, path_id=tp.path_id, status=np.array(out_s))
