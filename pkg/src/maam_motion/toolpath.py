"""Waypoint and toolpath containers, text I/O and orientation smoothing."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .errors import InvariantError, ParseError

DEFAULT_THICKNESS = 0.2
DEFAULT_WIDTH = 0.4
MIN_STEP = 1e-6
# normals already unit to this tolerance are kept bit-for-bit (exact save/load round trip)
RENORM_TOL = 1e-12


class Status(IntEnum):
    UNCHANGED = 0
    SINGULAR_PROCESSED = 1
    VARIANT_SET = 2


@dataclass(frozen=True)
class Waypoint:
    p: np.ndarray
    n: np.ndarray
    thickness: float = DEFAULT_THICKNESS
    width: float = DEFAULT_WIDTH
    status: Status = Status.UNCHANGED

    def __post_init__(self):
        if not (self.thickness > 0 and self.width > 0):
            raise InvariantError("waypoint thickness and width must be positive")


@dataclass(frozen=True, eq=False)
class Toolpath:
    """An ordered run of waypoints stored column-wise.

    ``positions`` and ``normals`` are (N, 3) arrays; ``thickness``, ``width``
    and ``status`` are length-N arrays.  Operations never mutate a toolpath;
    they return a new one.
    """

    positions: np.ndarray
    normals: np.ndarray
    thickness: np.ndarray = None
    width: np.ndarray = None
    layer_id: int = 0
    path_id: int = 0
    status: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, ndmin=2)
        nrm = np.array(self.normals, dtype=float, ndmin=2)
        n = len(pos)
        if pos.shape != (n, 3) or nrm.shape != (n, 3):
            raise InvariantError("positions and normals must both be (N, 3)")
        if n < 2:
            raise InvariantError("a toolpath needs at least two waypoints")
        thick = _per_point(self.thickness, DEFAULT_THICKNESS, n)
        width = _per_point(self.width, DEFAULT_WIDTH, n)
        status = (np.zeros(n, dtype=np.int8) if self.status is None
                  else np.array(self.status, dtype=np.int8))
        if status.shape != (n,):
            raise InvariantError("status must have one entry per waypoint")
        if np.any(thick <= 0) or np.any(width <= 0):
            raise InvariantError("thickness and width must be positive")
        lengths = np.linalg.norm(nrm, axis=1)
        if np.any(np.abs(lengths - 1.0) > 1e-9):
            i = int(np.argmax(np.abs(lengths - 1.0)))
            raise InvariantError(f"waypoint {i}: orientation is not unit length")
        if np.any(nrm[:, 2] < 0):
            i = int(np.argmin(nrm[:, 2]))
            raise InvariantError(f"waypoint {i}: orientation points below horizontal")
        steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
        if np.any(steps <= MIN_STEP):
            i = int(np.argmin(steps))
            raise InvariantError(f"waypoints {i} and {i + 1} share a position")
        for name, arr in (("positions", pos), ("normals", nrm), ("thickness", thick),
                          ("width", width), ("status", status)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.positions)

    def waypoint(self, i: int) -> Waypoint:
        return Waypoint(self.positions[i], self.normals[i], float(self.thickness[i]),
                        float(self.width[i]), Status(int(self.status[i])))

    @property
    def waypoints(self) -> list[Waypoint]:
        return [self.waypoint(i) for i in range(len(self))]

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.positions, axis=0), axis=1)

    def with_normals(self, normals, status=None) -> "Toolpath":
        return replace(self, normals=normals, status=self.status if status is None else status)

    @classmethod
    def from_waypoints(cls, waypoints, layer_id=0, path_id=0) -> "Toolpath":
        return cls(
            positions=[w.p for w in waypoints],
            normals=[w.n for w in waypoints],
            thickness=[w.thickness for w in waypoints],
            width=[w.width for w in waypoints],
            status=[int(w.status) for w in waypoints],
            layer_id=layer_id,
            path_id=path_id,
        )


def _per_point(values, default, n):
    if values is None:
        return np.full(n, float(default))
    arr = np.array(values, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise InvariantError("per-waypoint attribute has the wrong length")
    return arr


# -- file format ---------------------------------------------------------------


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_toolpaths(source, thickness: float = DEFAULT_THICKNESS,
                   width: float = DEFAULT_WIDTH) -> list[Toolpath]:
    """Parse a waypoint file.

    One waypoint per line, ``px py pz nx ny nz [thickness width]``.  Lines
    starting with ``;`` are comments except ``;path`` (start a new toolpath)
    and ``;layer N`` (set the layer id for the following paths, which also
    starts a new toolpath).  Normals are renormalized; missing thickness and
    width fall back to the given defaults.

    ``source`` may be a path, raw bytes or an open file.
    """
    text = _read_text(source)
    paths: list[Toolpath] = []
    layer = 0
    path_ids: dict[int, int] = {}
    rows: list[list[float]] = []
    first_line = 0

    def flush():
        nonlocal rows
        if rows:
            arr = np.array(rows)
            pid = path_ids.get(layer, 0)
            path_ids[layer] = pid + 1
            try:
                paths.append(Toolpath(arr[:, 0:3], arr[:, 3:6], arr[:, 6], arr[:, 7],
                                      layer_id=layer, path_id=pid))
            except InvariantError as exc:
                raise InvariantError(f"toolpath starting at line {first_line}: {exc}") from None
        rows = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(";"):
            words = line[1:].split()
            if words and words[0].lower() == "path":
                flush()
            elif words and words[0].lower() == "layer":
                flush()
                if len(words) != 2:
                    raise ParseError(lineno, "expected ';layer N'")
                try:
                    layer = int(words[1])
                except ValueError:
                    raise ParseError(lineno, f"bad layer id {words[1]!r}") from None
            continue
        fields = line.split()
        if len(fields) not in (6, 8):
            raise ParseError(lineno, f"expected 6 or 8 columns, got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        if not np.all(np.isfinite(vals)):
            raise ParseError(lineno, "non-finite value")
        norm = float(np.linalg.norm(vals[3:6]))
        if norm == 0.0:
            raise InvariantError(f"line {lineno}: zero-length orientation")
        if abs(norm - 1.0) > RENORM_TOL:
            vals[3:6] = [v / norm for v in vals[3:6]]
        if len(vals) == 6:
            vals += [thickness, width]
        if not rows:
            first_line = lineno
        rows.append(vals)
    flush()
    return paths


def save_toolpaths(toolpaths, dest=None) -> str:
    """Write toolpaths in canonical form; returns the text and optionally writes it.

    Canonical files always carry all eight columns, a ``;layer`` line when the
    layer changes and a ``;path`` line before every path.
    """
    out = io.StringIO()
    layer = None
    for tp in toolpaths:
        if tp.layer_id != layer:
            layer = tp.layer_id
            out.write(f";layer {layer}\n")
        out.write(";path\n")
        for p, n, t, w in zip(tp.positions, tp.normals, tp.thickness, tp.width):
            out.write(" ".join(repr(float(v)) for v in (*p, *n, t, w)) + "\n")
    text = out.getvalue()
    if dest is not None:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


# -- smoothing -----------------------------------------------------------------


def smooth_orientations(tp: Toolpath, lam: float = 0.5, iterations: int = 10) -> Toolpath:
    """Umbrella-operator smoothing of the orientations with fixed endpoints.

    Each iteration applies ``n_i <- normalize(n_i + lam * ((n_{i-1} + n_{i+1}) / 2 - n_i))``
    to all interior waypoints simultaneously.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    n = np.array(tp.normals)
    if len(n) < 3 or iterations <= 0:
        return tp
    for _ in range(iterations):
        mid = n[1:-1] + lam * (0.5 * (n[:-2] + n[2:]) - n[1:-1])
        n[1:-1] = mid / np.linalg.norm(mid, axis=1, keepdims=True)
    return tp.with_normals(n)
