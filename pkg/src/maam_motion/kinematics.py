"""
Forward and inverse kinematics of parallel-axis 5-axis printers.

Three machine layouts are supported (rotating table + tilting head,
rotating/tilting head, rotating/tilting platform), each with either a B/C or
an A/C rotary pair.  Angles at the module boundary are degrees; the C axis is
unbounded so that winding can be exploited by the planner.

The orientation convention shared by all layouts is

    BC:  n = (sin B cos C, -sin B sin C, cos B)
    AC:  n = (-sin A sin C,  sin A cos C, cos A)

which inverts to ``C = -atan2(n_y, n_x)`` (``-atan2(n_x, n_y)`` for A/C) on
the positive branch and the same plus 180 degrees on the negative branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvariantError

POLE_TOL = 1e-12
UNIT_TOL = 1e-9


class ConfigKind(Enum):
    I = "I"  # rotating table + tilting head
    II = "II"  # rotating and tilting extrusion head
    III = "III"  # rotating and tilting platform


class Rotary(Enum):
    BC = "BC"
    AC = "AC"


class Branch(Enum):
    PLUS = 1
    MINUS = -1


@dataclass(frozen=True)
class MachineConfig:
    """Geometry and limits of one machine.

    ``max_axis_speed`` is ordered (X, Y, Z, rot1, C); linear entries are mm/s,
    rotary entries deg/s.  Only the offsets relevant to ``kind`` are used:
    ``d`` for layout I, ``h`` and ``r`` for layout II.
    """

    kind: ConfigKind = ConfigKind.III
    rotary: Rotary = Rotary.BC
    d: float = 0.0
    h: float = 0.0
    r: float = 0.0
    max_axis_speed: tuple = (100.0, 100.0, 100.0, 36.0, 36.0)
    alpha: float = 4.5

    def __post_init__(self):
        object.__setattr__(self, "kind", ConfigKind(self.kind))
        object.__setattr__(self, "rotary", Rotary(self.rotary))
        object.__setattr__(self, "max_axis_speed", tuple(float(v) for v in self.max_axis_speed))
        if min(self.d, self.h, self.r) < 0:
            raise InvariantError("machine offsets d, h, r must be non-negative")
        if not 0.0 < self.alpha < 90.0:
            raise InvariantError(f"alpha must lie in (0, 90) degrees, got {self.alpha}")
        if len(self.max_axis_speed) != 5 or min(self.max_axis_speed) <= 0:
            raise InvariantError("max_axis_speed needs five positive entries (X, Y, Z, rot1, C)")

    @property
    def rotary_letter(self) -> str:
        return "B" if self.rotary is Rotary.BC else "A"


@dataclass(frozen=True)
class IkSolution:
    """Rotary part of one inverse-kinematics solution.

    ``c_free`` marks the pole, where C is indeterminate; ``c`` then holds a
    placeholder the caller is expected to replace with a neighbour's value.
    """

    rot1: float
    c: float
    branch: Branch = Branch.PLUS
    c_free: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class MachineCoords:
    x: float
    y: float
    z: float
    rot1: float
    c: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.rot1, self.c])


def normalize_angle(a):
    """Map degrees to [-180, 180)."""
    return (np.asarray(a, dtype=float) + 180.0) % 360.0 - 180.0


def validate_orientation(n, tol: float = UNIT_TOL) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or not np.all(np.isfinite(n)):
        raise InvariantError(f"orientation must be a finite 3-vector, got {n!r}")
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise InvariantError(f"orientation is not unit length: |n| = {np.linalg.norm(n)!r}")
    if n[2] < 0.0:
        raise InvariantError(f"orientation points below horizontal: n_z = {n[2]!r}")
    return n


# -- vectorized core -----------------------------------------------------------


def rotary_ik(normals, rotary: Rotary = Rotary.BC):
    """Positive-branch rotary IK for an (N, 3) array of unit normals.

    Returns ``(rot1, c, free)`` with angles in degrees, ``c`` in [-180, 180)
    and ``free`` flagging the exact pole.  The negative branch is
    ``(-rot1, c + 180)``.
    """
    n = np.atleast_2d(np.asarray(normals, dtype=float))
    nx, ny, nz = n[:, 0], n[:, 1], n[:, 2]
    lateral = np.hypot(nx, ny)
    # atan2(|n_xy|, n_z) == acos(n_z) for unit n, better conditioned near the pole
    rot1 = np.degrees(np.arctan2(lateral, nz))
    if Rotary(rotary) is Rotary.BC:
        c = -np.degrees(np.arctan2(ny, nx))
    else:
        c = -np.degrees(np.arctan2(nx, ny))
    free = lateral <= POLE_TOL
    c = np.where(free, 0.0, normalize_angle(c))
    return rot1, c, free


def rotary_fk(rot1, c, rotary: Rotary = Rotary.BC) -> np.ndarray:
    """Orientation(s) realised by rotary angles in degrees; returns (N, 3)."""
    b = np.radians(np.asarray(rot1, dtype=float))
    cr = np.radians(np.asarray(c, dtype=float))
    sb, cb = np.sin(b), np.cos(b)
    if Rotary(rotary) is Rotary.BC:
        out = np.stack([sb * np.cos(cr), -sb * np.sin(cr), cb], axis=-1)
    else:
        out = np.stack([-sb * np.sin(cr), sb * np.cos(cr), cb], axis=-1)
    return np.atleast_2d(out)


def linear_ik(p, rot1, c, cfg: MachineConfig) -> np.ndarray:
    """Machine X, Y, Z for workpiece positions ``p`` (N, 3) at the given angles."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    px, py, pz = p[:, 0], p[:, 1], p[:, 2]
    a = np.radians(np.asarray(rot1, dtype=float))
    g = np.radians(np.asarray(c, dtype=float))
    sa, ca, sc, cc = np.sin(a), np.cos(a), np.sin(g), np.cos(g)
    kind, bc = cfg.kind, cfg.rotary is Rotary.BC
    d, h, r = cfg.d, cfg.h, cfg.r

    if kind is ConfigKind.I:
        if bc:
            x = px * cc - py * sc + d * sa
            y = -px * sc - py * cc
        else:
            x = -px * cc + py * sc
            y = px * sc + py * cc - d * sa
        z = pz - d * (1.0 - ca)
    elif kind is ConfigKind.II:
        if bc:
            x = px + r * sc + h * cc * sa
            y = py - r * cc + h * sc * sa + r
        else:
            x = px - r * cc + h * sc * sa + r
            y = py - r * sc - h * cc * sa
        z = pz + h * ca - h
    else:
        if bc:
            x = px * ca * cc - py * ca * sc + pz * sa
            y = px * sc + py * cc
            z = py * sa * sc - px * sa * cc + pz * ca
        else:
            x = px * cc - py * sc
            y = px * ca * sc + py * ca * cc - pz * sa
            z = px * sa * sc + py * sa * cc + pz * ca
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def linear_fk(xyz, rot1, c, cfg: MachineConfig) -> np.ndarray:
    """Inverse of :func:`linear_ik`: workpiece positions from machine X, Y, Z."""
    m = np.atleast_2d(np.asarray(xyz, dtype=float))
    X, Y, Z = m[:, 0], m[:, 1], m[:, 2]
    a = np.radians(np.asarray(rot1, dtype=float))
    g = np.radians(np.asarray(c, dtype=float))
    sa, ca, sc, cc = np.sin(a), np.cos(a), np.sin(g), np.cos(g)
    kind, bc = cfg.kind, cfg.rotary is Rotary.BC
    d, h, r = cfg.d, cfg.h, cfg.r

    if kind is ConfigKind.I:
        # both rows are a planar rotation by C of (u, v) = (X', Y')
        if bc:
            u, v = X - d * sa, -Y
        else:
            u, v = -X, Y + d * sa
        px = u * cc + v * sc
        py = -u * sc + v * cc
        pz = Z + d * (1.0 - ca)
    elif kind is ConfigKind.II:
        if bc:
            px = X - r * sc - h * cc * sa
            py = Y + r * cc - h * sc * sa - r
        else:
            px = X + r * cc - h * sc * sa - r
            py = Y + r * sc + h * cc * sa
        pz = Z - h * ca + h
    else:
        if bc:
            # machine = Ry(B) Rz(C) p
            u = X * ca - Z * sa
            w = X * sa + Z * ca
            px = u * cc + Y * sc
            py = -u * sc + Y * cc
            pz = w
        else:
            # machine = Rx(A) Rz(C) p
            v = Y * ca + Z * sa
            w = -Y * sa + Z * ca
            px = X * cc + v * sc
            py = -X * sc + v * cc
            pz = w
    return np.stack(np.broadcast_arrays(px, py, pz), axis=-1)


# -- scalar API ----------------------------------------------------------------


def ik_rotational(n, cfg: MachineConfig) -> tuple[IkSolution, IkSolution]:
    """Both rotary IK branches for a single orientation, PLUS first.

    At the exact pole both solutions have ``rot1 = 0`` and ``c_free`` set.
    """
    n = validate_orientation(n)
    rot1, c, free = rotary_ik(n[None, :], cfg.rotary)
    b, cp, f = float(rot1[0]), float(c[0]), bool(free[0])
    plus = IkSolution(b, cp, Branch.PLUS, f)
    minus = IkSolution(-b, float(normalize_angle(cp + 180.0)), Branch.MINUS, f)
    return plus, minus


def ik_linear(p, sol: IkSolution, cfg: MachineConfig) -> tuple[float, float, float]:
    x, y, z = linear_ik(np.asarray(p, dtype=float)[None, :], sol.rot1, sol.c, cfg)[0]
    return float(x), float(y), float(z)


def fk(sol: IkSolution, xyz, cfg: MachineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Workpiece position and orientation realised by ``sol`` at machine ``xyz``."""
    p = linear_fk(np.asarray(xyz, dtype=float)[None, :], sol.rot1, sol.c, cfg)[0]
    n = rotary_fk(sol.rot1, sol.c, cfg.rotary)[0]
    return p, n


def dual_of(sol: IkSolution) -> IkSolution:
    """The other rotary solution realising the same orientation: (-rot1, c + 180)."""
    other = Branch.MINUS if sol.branch is Branch.PLUS else Branch.PLUS
    return IkSolution(-sol.rot1, sol.c + 180.0, other, sol.c_free)


def wound_c_distance(c_from: float, c_to: float) -> tuple[float, float]:
    """Shortest signed rotation from ``c_from`` to any angle congruent to ``c_to``.

    Returns ``(delta, c_to_unwrapped)`` with ``|delta| <= 180`` and
    ``c_to_unwrapped = c_from + delta``.
    """
    turns = round((c_from - c_to) / 360.0)
    unwrapped = c_to + 360.0 * turns
    delta = unwrapped - c_from
    if delta > 180.0:
        unwrapped -= 360.0
    elif delta < -180.0:
        unwrapped += 360.0
    return unwrapped - c_from, unwrapped


def wound_delta(c_from, c_to):
    """Vectorized signed wound difference in [-180, 180)."""
    return (np.asarray(c_to, dtype=float) - np.asarray(c_from, dtype=float) + 180.0) % 360.0 - 180.0


def unwrap_c(c_values) -> np.ndarray:
    """Unwrap a C sequence so every step is the shortest congruent rotation."""
    c = np.asarray(c_values, dtype=float)
    out = np.empty_like(c)
    if c.size == 0:
        return out
    out[0] = c[0]
    for i in range(1, c.size):
        out[i] = wound_c_distance(out[i - 1], c[i])[1]
    return out


def mcs_coordinates(p, sol: IkSolution, cfg: MachineConfig) -> MachineCoords:
    x, y, z = ik_linear(p, sol, cfg)
    return MachineCoords(x, y, z, sol.rot1, sol.c)


def polar_angle(n) -> float:
    """Angle in degrees between ``n`` and the vertical."""
    n = np.asarray(n, dtype=float)
    return math.degrees(math.atan2(math.hypot(n[0], n[1]), n[2]))
