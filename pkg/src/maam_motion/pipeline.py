"""
End-to-end planning: load, smooth, reproject singular runs, resolve
collisions, search the candidate graph and write the program.
"""

from __future__ import annotations

import configparser
import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .collision import CollisionScene, HeadHull, default_head_hull, gamma, sample_variants
from .emitter import Report, emit_gcode, emit_report
from .extrusion import ExtrusionParams, densify, segment_windows
from .errors import Disconnected
from .geometry import read_mesh
from .kinematics import ConfigKind, MachineConfig, Rotary
from .planner import Trajectory, build_graph, finalize, naive_trajectory, prune_edges, shortest_trajectory
from .singularity import break_extreme, default_delta_c_max, process_toolpath, singular_mask
from .toolpath import Status, Toolpath, load_toolpaths, smooth_orientations

log = logging.getLogger("maam_motion")

ENV_PREFIX = "MAAM_"


@dataclass(frozen=True)
class RunConfig:
    machine: MachineConfig = field(default_factory=MachineConfig)
    extrusion: ExtrusionParams = field(default_factory=ExtrusionParams)
    beta: float = 45.0
    dual_beta: float = 10.0
    sample_count: int = 16
    lam: float = 0.5
    iterations: int = 10
    delta_c_max: float | None = None
    rng_seed: int = 0
    thickness: float = 0.2
    width: float = 0.4
    platform_z: float = 0.0
    tip_clearance: float = 1.0
    filament_diameter: float = 1.75
    raw_volume: bool = False
    lift: float = 5.0
    segment_period: float | None = None
    on_disconnect: str = "break"
    singularity: bool = True
    variants: bool = True
    toolpath: Path | None = None
    hull: Path | None = None
    layer_meshes: Path | None = None
    out: Path = Path("out")

    @property
    def alpha(self) -> float:
        return self.machine.alpha


# -- config file -----------------------------------------------------------------

_FIELDS = {
    "machine": {"kind": str, "rotary": str, "d": float, "h": float, "r": float,
                "max_axis_speed": str, "alpha": float},
    "extrusion": {"k": float, "f_min": float, "f_max": float, "filament_diameter": float,
                  "raw_volume": bool},
    "planner": {"beta": float, "dual_beta": float, "sample_count": int, "lambda": float,
                "iterations": int, "delta_c_max": str, "rng_seed": int, "thickness": float,
                "width": float, "platform_z": float, "tip_clearance": float, "lift": float,
                "segment_period": str, "on_disconnect": str},
    "io": {"toolpath": str, "hull": str, "layer_meshes": str, "out": str},
}


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config(path=None, env=None, text: str | None = None) -> RunConfig:
    """Read an INI-style config; ``MAAM_<SECTION>_<KEY>`` environment variables win.

    Relative paths in ``[io]`` resolve against the config file's directory.
    """
    env = os.environ if env is None else env
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    base = Path(".")
    if path is not None:
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
        base = path.parent
    elif text is not None:
        cp.read_string(text)
    for section in cp.sections():
        if section not in _FIELDS:
            raise ValueError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in _FIELDS[section]:
                raise ValueError(f"unknown config key {section}.{key}")

    values = {}
    for section, keys in _FIELDS.items():
        for key, kind in keys.items():
            raw = env.get(f"{ENV_PREFIX}{section}_{key}".upper())
            if raw is None and cp.has_option(section, key):
                raw = cp.get(section, key)
            if raw is None or raw.strip() == "":
                continue
            values[(section, key)] = _bool(raw) if kind is bool else kind(raw.strip())

    def get(section, key, default):
        return values.get((section, key), default)

    m = MachineConfig()
    speeds = get("machine", "max_axis_speed", None)
    machine = MachineConfig(
        kind=ConfigKind(get("machine", "kind", m.kind.value).upper()),
        rotary=Rotary(get("machine", "rotary", m.rotary.value).upper()),
        d=get("machine", "d", m.d), h=get("machine", "h", m.h), r=get("machine", "r", m.r),
        max_axis_speed=tuple(float(s) for s in speeds.split(",")) if speeds else m.max_axis_speed,
        alpha=get("machine", "alpha", m.alpha),
    )
    e = ExtrusionParams()
    extrusion = ExtrusionParams(get("extrusion", "k", e.k), get("extrusion", "f_min", e.f_min),
                                get("extrusion", "f_max", e.f_max))
    d = RunConfig()

    def opt_float(key):
        raw = get("planner", key, None)
        return None if raw is None or raw.lower() in ("auto", "none") else float(raw)

    def opt_path(key, default=None):
        raw = get("io", key, None)
        if raw is None:
            return default
        p = Path(raw)
        return p if p.is_absolute() else base / p

    cfg = RunConfig(
        machine=machine, extrusion=extrusion,
        beta=get("planner", "beta", d.beta), dual_beta=get("planner", "dual_beta", d.dual_beta),
        sample_count=get("planner", "sample_count", d.sample_count),
        lam=get("planner", "lambda", d.lam), iterations=get("planner", "iterations", d.iterations),
        delta_c_max=opt_float("delta_c_max"), rng_seed=get("planner", "rng_seed", d.rng_seed),
        thickness=get("planner", "thickness", d.thickness), width=get("planner", "width", d.width),
        platform_z=get("planner", "platform_z", d.platform_z),
        tip_clearance=get("planner", "tip_clearance", d.tip_clearance),
        filament_diameter=get("extrusion", "filament_diameter", d.filament_diameter),
        raw_volume=get("extrusion", "raw_volume", d.raw_volume),
        lift=get("planner", "lift", d.lift), segment_period=opt_float("segment_period"),
        on_disconnect=get("planner", "on_disconnect", d.on_disconnect),
        toolpath=opt_path("toolpath"), hull=opt_path("hull"),
        layer_meshes=opt_path("layer_meshes"), out=opt_path("out", base / "out"),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if not 0.0 < cfg.lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    if cfg.iterations < 0 or cfg.sample_count < 1:
        raise ValueError("iterations must be >= 0 and sample_count >= 1")
    if not (0.0 < cfg.beta <= 90.0 and 0.0 < cfg.dual_beta <= 90.0):
        raise ValueError("beta and dual_beta must lie in (0, 90]")
    if cfg.on_disconnect not in ("break", "raise"):
        raise ValueError("on_disconnect must be 'break' or 'raise'")
    for name in ("toolpath", "hull", "layer_meshes"):
        p = getattr(cfg, name)
        if p is not None and not p.exists():
            raise FileNotFoundError(f"{name} not found: {p}")


# -- scene -----------------------------------------------------------------------


def load_layer_meshes(directory) -> dict:
    """Meshes keyed by layer id, taken from the digits of each file name."""
    meshes = {}
    if directory is None:
        return meshes
    for path in sorted(Path(directory).iterdir()):
        if path.suffix.lower() not in (".obj", ".off"):
            continue
        digits = re.findall(r"\d+", path.stem)
        if not digits:
            continue
        meshes.setdefault(int(digits[-1]), []).append(read_mesh(path))
    return meshes


def bead_scene(toolpaths, platform_z=0.0, triangles=None) -> CollisionScene:
    """One bead per waypoint across all paths in print order."""
    pts = np.concatenate([tp.positions for tp in toolpaths])
    rad = np.concatenate([np.maximum(tp.width, tp.thickness) / 2.0 for tp in toolpaths])
    tris = np.zeros((0, 3, 3)) if triangles is None else triangles
    return CollisionScene(platform_z=platform_z, triangles=tris, beads=pts, bead_radius=rad)


# -- planning --------------------------------------------------------------------


@dataclass(eq=False)
class PathResult:
    trajectory: Trajectory
    baseline: Trajectory
    toolpath: Toolpath
    singular_segments: list
    variant_columns: dict
    disconnects: list


def _trace(trace, step, msg):
    if trace is not None:
        trace.append(f"{step}: {msg}")


def plan_toolpath(tp: Toolpath, cfg: RunConfig, scene: CollisionScene | None = None,
                  hull: HeadHull | None = None, bead_offset: int = 0, trace: list | None = None,
                  label: str = "") -> PathResult:
    """Plan one toolpath; ``scene.prefix(bead_offset + i)`` is what is printed before waypoint i."""
    mcfg, params = cfg.machine, cfg.extrusion
    hull = hull or default_head_hull(cfg.tip_clearance)
    scene = scene or CollisionScene(platform_z=cfg.platform_z)
    baseline = naive_trajectory(tp, mcfg, params)
    original = tp

    _trace(trace, "line 1", f"{label} smooth orientations lambda={cfg.lam} iterations={cfg.iterations}")
    if cfg.iterations:
        tp = smooth_orientations(tp, cfg.lam, cfg.iterations)

    mask = singular_mask(tp.normals, cfg.alpha)
    _trace(trace, "line 2", f"{label} singular check: {int(mask.sum())} of {len(tp)} waypoints")
    _trace(trace, "line 3", f"{label} initial IK for {len(tp)} waypoints")

    results, pinned = [], {}
    if cfg.singularity:
        tp, results, pinned = process_toolpath(tp, mcfg)
        n_dual = sum(r.used_dual for r in results)
        _trace(trace, "lines 4-9", f"{label} processed {len(results)} singular segments ({n_dual} dual)")
    else:
        _trace(trace, "lines 4-9", f"{label} singularity processing disabled")

    variants = {}
    if cfg.variants:
        for i in range(len(tp)):
            view = scene.prefix(bead_offset + i)
            if gamma(tp.positions[i], tp.normals[i], view, hull) == 0:
                continue
            processed = tp.status[i] == Status.SINGULAR_PROCESSED
            vs = sample_variants(
                tp.waypoint(i), view, hull,
                beta=cfg.dual_beta if processed else cfg.beta,
                count=cfg.sample_count, exclude_singular=True,
                rng_seed=np.random.default_rng([cfg.rng_seed, bead_offset + i]),
                alpha=cfg.alpha, waypoint_index=bead_offset + i)
            variants[i] = vs.variants
        if variants:
            status = np.array(tp.status)
            status[list(variants)] = Status.VARIANT_SET
            tp = tp.with_normals(tp.normals, status)
        _trace(trace, "lines 10-13", f"{label} {len(variants)} waypoints replaced by variants")
    else:
        _trace(trace, "lines 10-13", f"{label} collision variants disabled")

    g = build_graph(tp, mcfg, pinned, variants)
    if cfg.variants:
        try:
            g = prune_edges(g, scene, hull, bead_offset, on_disconnect=cfg.on_disconnect)
        except Disconnected as exc:
            raise Disconnected(bead_offset + exc.waypoint_index) from None
    traj = shortest_trajectory(g)
    _trace(trace, "line 14", f"{label} graph {len(g.columns)} columns, {g.edge_count} edges")
    _trace(trace, "line 15", f"{label} shortest path cost {traj.cost:.6f}")

    v_min, _ = segment_windows(tp, params)
    dcm = cfg.delta_c_max if cfg.delta_c_max is not None else default_delta_c_max(tp, mcfg, v_min)
    c_path = np.array([n.c for n in traj.nodes])
    breaks = set(g.breaks)
    if cfg.singularity:
        breaks |= set(break_extreme(c_path, dcm))
    traj = finalize(traj, tp, mcfg, params, breaks)
    _trace(trace, "line 16", f"{label} linear axes by IK; {len(traj.breaks)} breaks")

    return PathResult(traj, baseline, original, results, variants, sorted(g.breaks))


@dataclass(eq=False)
class RunResult:
    paths: list
    gcode: bytes
    report: Report
    trace: list


def run_pipeline(cfg: RunConfig, toolpaths=None, hull: HeadHull | None = None,
                 write: bool = True) -> RunResult:
    """Plan every toolpath in file order and write G-code, CSV and report.

    ``toolpaths`` overrides ``cfg.toolpath``; nothing is written when
    ``write`` is false.
    """
    trace = []
    if toolpaths is None:
        toolpaths = load_toolpaths(cfg.toolpath, cfg.thickness, cfg.width)
    if cfg.segment_period is not None:
        toolpaths = [densify(tp, cfg.extrusion, cfg.segment_period) for tp in toolpaths]
    if hull is None:
        hull = (HeadHull.from_mesh(cfg.hull, tip_clearance=cfg.tip_clearance) if cfg.hull
                else default_head_hull(cfg.tip_clearance))
    meshes = load_layer_meshes(cfg.layer_meshes)
    scene = bead_scene(toolpaths, cfg.platform_z)

    results, offset = [], 0
    current_layer, layer_scene = None, scene
    for tp in toolpaths:
        if tp.layer_id != current_layer:
            current_layer = tp.layer_id
            done = [CollisionScene.from_meshes(meshes[k]).triangles for k in sorted(meshes)
                    if k < current_layer]
            tris = np.concatenate(done) if done else np.zeros((0, 3, 3))
            layer_scene = (scene if not len(tris) and not len(scene.triangles)
                           else CollisionScene(cfg.platform_z, tris, scene.beads, scene.bead_radius))
        label = f"layer {tp.layer_id} path {tp.path_id}"
        results.append(plan_toolpath(tp, cfg, layer_scene, hull, offset, trace, label))
        offset += len(tp)

    trajs = [r.trajectory for r in results]
    header = {"seed": cfg.rng_seed, "singularity": cfg.singularity, "variants": cfg.variants,
              "alpha": cfg.alpha}
    gcode = emit_gcode(trajs, cfg.machine, cfg.filament_diameter, cfg.raw_volume, cfg.lift, header)
    report = emit_report([r.baseline for r in results], trajs, cfg.extrusion, cfg.machine)
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "program.gcode").write_bytes(gcode)
        (out / "speeds.csv").write_text(report.csv, encoding="utf-8", newline="\n")
        (out / "report.txt").write_text(report.summary, encoding="utf-8", newline="\n")
    for line in trace:
        log.debug(line)
    return RunResult(results, gcode, report, trace)


def with_flags(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **changes)
