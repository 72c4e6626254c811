"""G-code serialization, G-code replay and the speed-feasibility report."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .kinematics import MachineConfig, linear_fk, rotary_fk
from .planner import Trajectory

FILAMENT_DIAMETER = 1.75
HIST_BIN = 0.5
_AXES = ("X", "Y", "Z", "R", "C")  # R stands for the rotary letter of the machine


def _fmt(v: float) -> str:
    s = f"{v:.4f}"
    return "0.0000" if s == "-0.0000" else s


@dataclass(frozen=True)
class GCodeLine:
    command: str
    axes: dict
    e: float | None = None
    f: float | None = None

    def render(self, rotary_letter: str = "B") -> str:
        parts = [self.command]
        for k, v in self.axes.items():
            parts.append(f"{rotary_letter if k == 'R' else k}{_fmt(v)}")
        if self.e is not None:
            parts.append(f"E{_fmt(self.e)}")
        if self.f is not None:
            parts.append(f"F{_fmt(self.f)}")
        return " ".join(parts)


def _as_list(trajs):
    return [trajs] if isinstance(trajs, Trajectory) else list(trajs)


def gcode_lines(trajs, cfg: MachineConfig, filament_diameter: float = FILAMENT_DIAMETER,
                raw_volume: bool = False, lift: float = 5.0, travel_feed: float = 6000.0):
    """Yield :class:`GCodeLine` objects for a sequence of trajectories.

    Travel moves (between paths and at breaks) are a lift in Z, a move to the
    next pose lifted by the same amount, and a descent.  E is cumulative over
    the whole program.
    """
    scale = 1.0 if raw_volume else 1.0 / (math.pi * (filament_diameter / 2.0) ** 2)
    e_total = 0.0
    last = None  # last emitted rounded axis values

    def changed(row):
        vals = {ax: float(v) for ax, v in zip(_AXES, row)}
        if last is None:
            return vals
        return {ax: v for ax, v in vals.items() if _fmt(v) != _fmt(last[ax])}

    def travel(row):
        nonlocal last
        cur_z = last["Z"] if last is not None else row[2]
        up = max(cur_z, row[2]) + lift
        if last is not None:
            yield GCodeLine("G0", {"Z": up})
        over = dict(zip(_AXES, map(float, row)))
        over["Z"] = up
        yield GCodeLine("G0", over, f=travel_feed)
        yield GCodeLine("G0", {"Z": float(row[2])})
        last = dict(zip(_AXES, map(float, row)))

    for traj in _as_list(trajs):
        mcs = traj.mcs
        breaks = set(traj.breaks)
        yield from travel(mcs[0])
        for i in range(1, len(mcs)):
            if i in breaks:
                yield from travel(mcs[i])
                continue
            axes = changed(mcs[i])
            e_total += float(traj.delta_e[i - 1]) * scale
            yield GCodeLine("G1", axes, e=e_total, f=float(traj.v[i - 1]) * 60.0)
            last = dict(zip(_AXES, map(float, mcs[i])))


def emit_gcode(trajs, cfg: MachineConfig, filament_diameter: float = FILAMENT_DIAMETER,
               raw_volume: bool = False, lift: float = 5.0, header: dict | None = None) -> bytes:
    """Serialize trajectories to G-code (UTF-8, LF endings, 4 decimals, no timestamp)."""
    out = io.StringIO()
    out.write("; multi-axis motion plan\n")
    out.write(f"; machine: config {cfg.kind.value} {cfg.rotary.value}"
              f" d={cfg.d!r} h={cfg.h!r} r={cfg.r!r}\n")
    out.write("; max axis speed X,Y,Z,{},C: {}\n".format(
        cfg.rotary_letter, ",".join(repr(v) for v in cfg.max_axis_speed)))
    out.write("; units: mm, degrees, F in mm/min of nozzle-tip speed\n")
    out.write("; E: {}\n".format("mm^3 of material" if raw_volume
                                 else f"mm of {filament_diameter!r} mm filament"))
    for k, v in (header or {}).items():
        out.write(f"; {k}: {v}\n")
    out.write("G21\nG90\nM82\n")
    letter = cfg.rotary_letter
    for line in gcode_lines(trajs, cfg, filament_diameter, raw_volume, lift):
        out.write(line.render(letter) + "\n")
    out.write("M2\n")
    return out.getvalue().encode("utf-8")


@dataclass(frozen=True, eq=False)
class Replay:
    """Machine states reached by the G-code, one row per move."""

    commands: list
    mcs: np.ndarray  # (M, 5)
    e: np.ndarray  # cumulative E after each move (nan before any G1)


def parse_gcode(data, cfg: MachineConfig) -> Replay:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    letter = cfg.rotary_letter
    state = dict.fromkeys("XYZRC", 0.0)
    e = math.nan
    cmds, rows, es = [], [], []
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].split()
        if not line or line[0] not in ("G0", "G1"):
            continue
        for word in line[1:]:
            key, val = word[0], float(word[1:])
            if key == letter:
                state["R"] = val
            elif key in "XYZC":
                state[key] = val
            elif key == "E":
                e = val
        cmds.append(line[0])
        rows.append([state[k] for k in "XYZRC"])
        es.append(e)
    return Replay(cmds, np.array(rows, dtype=float).reshape(-1, 5), np.array(es))


def replay_positions(rep: Replay, cfg: MachineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Workpiece-frame tip positions and orientations for every replayed move."""
    m = rep.mcs
    return linear_fk(m[:, :3], m[:, 3], m[:, 4], cfg), rotary_fk(m[:, 3], m[:, 4], cfg.rotary)


# -- speed report ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpeedReport:
    """Histogram of per-segment tip speeds and the share outside the window.

    Travel segments (breaks) are not extrusion moves and are left out of both.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    violation_fraction: float  # percent
    segments: int
    violations: np.ndarray  # segment indices with v outside [v_min, v_max]
    breaks: int = 0

    @classmethod
    def from_trajectory(cls, traj: Trajectory, bin_width: float = HIST_BIN) -> "SpeedReport":
        mask = traj.extruding
        v = traj.v[mask]
        bad = np.flatnonzero(~traj.feasible & mask)
        top = max(float(v.max()) if len(v) else 0.0, bin_width)
        edges = np.arange(0.0, top + bin_width, bin_width)
        if edges[-1] <= top:
            edges = np.append(edges, edges[-1] + bin_width)
        counts, _ = np.histogram(v, bins=edges)
        frac = 100.0 * len(bad) / len(v) if len(v) else 0.0
        return cls(edges, counts, frac, int(len(v)), bad, len(traj.breaks))


@dataclass(frozen=True, eq=False)
class Report:
    before: SpeedReport
    after: SpeedReport
    csv: str
    summary: str


def _merge(reports):
    reports = list(reports)
    width = float(reports[0].bin_edges[1] - reports[0].bin_edges[0])
    top = max(r.bin_edges[-1] for r in reports)
    edges = np.arange(0.0, top + 0.5 * width, width)
    counts = np.zeros(len(edges) - 1, dtype=int)
    viol, offset = [], 0
    for r in reports:
        counts[: len(r.counts)] += r.counts
        viol.append(r.violations + offset)
        offset += r.segments + r.breaks
    segs = sum(r.segments for r in reports)
    nv = sum(len(r.violations) for r in reports)
    return SpeedReport(edges, counts, 100.0 * nv / segs if segs else 0.0, segs,
                       np.concatenate(viol) if viol else np.zeros(0, int),
                       sum(r.breaks for r in reports))


def emit_report(before, after, params=None, cfg: MachineConfig | None = None) -> Report:
    """Before/after speed reports, a per-waypoint CSV and a ``key: value`` summary.

    ``before`` and ``after`` are trajectories (or equal-length lists of them);
    ``before`` is normally the raw-IK motion of the unprocessed toolpath.
    ``params`` and ``cfg`` are only echoed into the summary.
    """
    before, after = _as_list(before), _as_list(after)
    rb = _merge(SpeedReport.from_trajectory(t) for t in before)
    ra = _merge(SpeedReport.from_trajectory(t) for t in after)
    letter = cfg.rotary_letter if cfg is not None else "B"

    rows = [f"path,index,{letter}_before,C_before,v_before,{letter}_after,C_after,v_after"]
    for k, (tb, ta) in enumerate(zip(before, after)):
        for i in range(len(ta.nodes)):
            vb = "" if i == 0 else repr(float(tb.v[i - 1]))
            va = "" if i == 0 or i in ta.breaks else repr(float(ta.v[i - 1]))
            rows.append(f"{k},{i},{float(tb.rot1[i])!r},{float(tb.c[i])!r},{vb},"
                        f"{float(ta.rot1[i])!r},{float(ta.c[i])!r},{va}")
    csv = "\n".join(rows) + "\n"

    lines = [
        ("paths", len(after)),
        ("waypoints", sum(len(t.nodes) for t in after)),
        ("segments_before", rb.segments),
        ("segments_after", ra.segments),
        ("breaks_after", ra.breaks),
        ("violation_percent_before", f"{rb.violation_fraction:.4f}"),
        ("violation_percent_after", f"{ra.violation_fraction:.4f}"),
        ("cost_before", f"{sum(t.cost for t in before):.4f}"),
        ("cost_after", f"{sum(t.cost for t in after):.4f}"),
        ("histogram_bin_width", HIST_BIN),
        ("histogram_before", " ".join(str(int(c)) for c in rb.counts)),
        ("histogram_after", " ".join(str(int(c)) for c in ra.counts)),
    ]
    if params is not None:
        lines.append(("extrusion", f"k={params.k!r} f_min={params.f_min!r} f_max={params.f_max!r}"))
    summary = "".join(f"{k}: {v}\n" for k, v in lines)
    return Report(rb, ra, csv, summary)
