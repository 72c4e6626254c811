"""
Singular-region detection and reprojection of waypoint orientations.

Orientations within ``alpha`` of the vertical make the C-axis solution
ill-conditioned.  Runs of such waypoints are replaced by orientations that
keep the C motion smooth: pushed onto the cone boundary when the anchors are
less than 90 degrees apart in C, or routed through the pole towards the
anchor's dual solution otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import HorizontalOrientation
from .kinematics import (Branch, MachineConfig, Rotary, rotary_fk, rotary_ik, wound_c_distance,
                         wound_delta)
from .toolpath import Status, Toolpath

HORIZONTAL_TOL = 1e-12


class SegmentCase(Enum):
    INTERIOR = "interior"
    PATH_STARTS_IN = "path_starts_in"
    PATH_ENDS_IN = "path_ends_in"
    WHOLE_PATH = "whole_path"


@dataclass(frozen=True)
class SingularSegment:
    """Inclusive waypoint range ``[first, last]`` inside the singular region."""

    first: int
    last: int
    anchor_start: int | None
    anchor_end: int | None
    case: SegmentCase

    @property
    def indices(self) -> range:
        return range(self.first, self.last + 1)


@dataclass(frozen=True)
class CylCoord:
    b: float
    c: float


@dataclass(frozen=True, eq=False)
class ProcessedSegment:
    segment: SingularSegment
    normals: np.ndarray  # (m, 3) replacement orientations
    rotary: np.ndarray  # (m, 2) pinned (rot1, c) per replaced waypoint, degrees
    used_dual: bool = False
    theta: float = 0.0  # wound C gap between the anchors
    theta_dual: float | None = None  # same gap with the end anchor's dual solution
    anchor_end_branch: Branch | None = None


def is_singular(n, alpha: float) -> bool:
    """True if ``n`` lies in the closed cone of half-angle ``alpha`` about +Z."""
    nx, ny, nz = (float(v) for v in n)
    if nz <= HORIZONTAL_TOL:
        raise HorizontalOrientation(f"n_z = {nz!r} is not above the horizontal")
    return math.sqrt((nx / nz) ** 2 + (ny / nz) ** 2) <= math.tan(math.radians(alpha))


def singular_mask(normals, alpha: float) -> np.ndarray:
    """Vectorized :func:`is_singular`; horizontal orientations count as regular."""
    n = np.asarray(normals, dtype=float)
    nz = n[:, 2]
    ok = nz > HORIZONTAL_TOL
    ratio = np.full(len(n), np.inf)
    ratio[ok] = np.hypot(n[ok, 0] / nz[ok], n[ok, 1] / nz[ok])
    return ratio <= math.tan(math.radians(alpha))


def find_segments(tp: Toolpath, alpha: float) -> list[SingularSegment]:
    mask = singular_mask(tp.normals, alpha)
    last_index = len(tp) - 1
    segments = []
    i = 0
    while i <= last_index:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 <= last_index and mask[j + 1]:
            j += 1
        start = i - 1 if i > 0 else None
        end = j + 1 if j < last_index else None
        if start is not None and end is not None:
            case = SegmentCase.INTERIOR
        elif start is None and end is not None:
            case = SegmentCase.PATH_STARTS_IN
        elif start is not None:
            case = SegmentCase.PATH_ENDS_IN
        else:
            case = SegmentCase.WHOLE_PATH
        segments.append(SingularSegment(i, j, start, end, case))
        i = j + 1
    return segments


def _plus_solution(n, rotary):
    b, c, _ = rotary_ik(np.asarray(n, dtype=float)[None, :], rotary)
    return float(b[0]), float(c[0])


def process_segment(seg: SingularSegment, tp: Toolpath, alpha: float,
                    rotary: Rotary = Rotary.BC) -> ProcessedSegment:
    m = seg.last - seg.first + 1
    if seg.case is SegmentCase.WHOLE_PATH:
        normals = np.tile([0.0, 0.0, 1.0], (m, 1))
        return ProcessedSegment(seg, normals, np.zeros((m, 2)))

    if seg.case is not SegmentCase.INTERIOR:
        anchor = seg.anchor_end if seg.case is SegmentCase.PATH_STARTS_IN else seg.anchor_start
        n_a = tp.normals[anchor]
        b, c = _plus_solution(n_a, rotary)
        return ProcessedSegment(seg, np.tile(n_a, (m, 1)), np.tile([b, c], (m, 1)))

    b_s, c_s = _plus_solution(tp.normals[seg.anchor_start], rotary)
    b_e, c_e = _plus_solution(tp.normals[seg.anchor_end], rotary)
    delta, _ = wound_c_distance(c_s, c_e)
    theta = abs(delta)
    t = np.arange(1, m + 1) / (m + 1)

    if theta <= 90.0:
        # minor arc on the cone boundary, equal C spacing
        b = np.full(m, float(alpha))
        c = c_s + delta * t
        rot = np.stack([b, c], axis=1)
        return ProcessedSegment(seg, rotary_fk(b, c, rotary), rot, False, theta)

    delta_d, _ = wound_c_distance(c_s, c_e + 180.0)
    b = b_s + (-b_e - b_s) * t
    c = c_s + delta_d * t
    rot = np.stack([b, c], axis=1)
    return ProcessedSegment(seg, rotary_fk(b, c, rotary), rot, True, theta, abs(delta_d),
                            Branch.MINUS)


def process_toolpath(tp: Toolpath, cfg: MachineConfig, alpha: float | None = None):
    """Apply :func:`process_segment` to every singular run of ``tp``.

    Returns the updated toolpath (processed waypoints marked
    ``SINGULAR_PROCESSED``), the per-segment results and a dict mapping
    waypoint index to its pinned (rot1, c).
    """
    alpha = cfg.alpha if alpha is None else alpha
    segments = find_segments(tp, alpha)
    if not segments:
        return tp, [], {}
    normals = np.array(tp.normals)
    status = np.array(tp.status)
    pinned = {}
    results = []
    for seg in segments:
        res = process_segment(seg, tp, alpha, cfg.rotary)
        results.append(res)
        for k, i in enumerate(seg.indices):
            normals[i] = res.normals[k]
            status[i] = Status.SINGULAR_PROCESSED
            pinned[i] = (float(res.rotary[k, 0]), float(res.rotary[k, 1]))
    return tp.with_normals(normals, status), results, pinned


def break_extreme(c_values, delta_c_max: float) -> list[int]:
    """Indices ``i`` where the wound step from ``c[i-1]`` to ``c[i]`` exceeds the limit."""
    c = np.asarray(c_values, dtype=float)
    if len(c) < 2:
        return []
    steps = np.abs(wound_delta(c[:-1], c[1:]))
    return [int(i) + 1 for i in np.flatnonzero(steps > delta_c_max)]


def default_delta_c_max(tp: Toolpath, cfg: MachineConfig, v_min) -> float:
    """Largest C step that still lets every segment reach its lower speed bound."""
    dist = tp.segment_lengths
    v_min = np.broadcast_to(np.asarray(v_min, dtype=float), dist.shape)
    return float(np.min(cfg.max_axis_speed[4] * dist / v_min))
