"""Synthetic toolpaths for demos, tests and benchmarks."""

from __future__ import annotations

import math

import numpy as np

from .kinematics import rotary_fk
from .toolpath import Toolpath


def pole_crossing_path(step_deg: float = 10.0, miss_deg: float = 1.0, span_deg: float = 80.0,
                       spacing: float = 1.0, z: float = 20.0) -> Toolpath:
    """Straight line along +y whose orientation sweeps through a plane passing ``miss_deg`` from the pole.

    The orientation plane contains (1, 0, 0) and (0, sin m, cos m), so its
    closest approach to the vertical is ``miss_deg``.  Orientation angles in
    that plane run from ``-span_deg`` to ``span_deg`` in ``step_deg`` steps and
    include 0 (the closest approach).
    """
    s = np.radians(np.arange(-span_deg, span_deg + 0.5 * step_deg, step_deg))
    m = math.radians(miss_deg)
    normals = np.stack([np.sin(s), np.cos(s) * math.sin(m), np.cos(s) * math.cos(m)], axis=1)
    pos = np.stack([np.zeros(len(s)), np.arange(len(s)) * spacing, np.full(len(s), z)], axis=1)
    return Toolpath(pos, normals)


def dome_toolpaths(radius: float = 30.0, cap_deg: float = 60.0, line_spacing: float = 0.5,
                   half_width: float = 6.0, step: float = 0.5, base_z: float = 20.0,
                   thickness: float = 0.2, width: float = 0.4) -> list[Toolpath]:
    """Parallel lines over a spherical cap; normals are the sphere normals.

    Lines run along x at ``y = -half_width .. half_width``, alternating
    direction; the cap sits with its rim at ``base_z``.  Lines near ``y = 0``
    cross the apex, where orientations are nearly vertical.
    """
    rim = radius * math.sin(math.radians(cap_deg))
    drop = radius * math.cos(math.radians(cap_deg))
    paths = []
    ys = np.arange(-half_width, half_width + 0.5 * line_spacing, line_spacing)
    for k, y in enumerate(ys):
        half = math.sqrt(max(rim * rim - y * y, 0.0))
        x = np.arange(-half, half + 1e-9, step)
        if len(x) < 2:
            continue
        if k % 2:
            x = x[::-1]
        zz = np.sqrt(radius * radius - x * x - y * y)
        n = np.stack([x, np.full_like(x, y), zz], axis=1) / radius
        p = np.stack([x, np.full_like(x, y), zz - drop + base_z], axis=1)
        paths.append(Toolpath(p, n, np.full(len(x), thickness), np.full(len(x), width),
                              layer_id=0, path_id=len(paths)))
    return paths


def wavy_layers(n_waypoints: int, per_path: int = 500, layer_height: float = 0.2,
                tilt_deg: float = 25.0, seed: int = 0) -> list[Toolpath]:
    """Large synthetic input: meandering lines with slowly varying tilt, stacked in layers."""
    rng = np.random.default_rng(seed)
    paths = []
    left = n_waypoints
    layer, z = 0, 5.0
    per_layer = 4
    while left > 0:
        n = min(per_path, left)
        if n < 2:
            break
        t = np.arange(n) * 0.5
        y0 = (len(paths) % per_layer) * 2.0
        pos = np.stack([t, y0 + 0.5 * np.sin(t / 7.0), np.full(n, z)], axis=1)
        phase = rng.uniform(0, 2 * np.pi)
        b = tilt_deg * np.sin(t / 23.0 + phase)
        c = np.degrees(np.unwrap(np.radians(40.0 * np.sin(t / 31.0 + phase))))
        normals = rotary_fk(b, c)
        paths.append(Toolpath(pos, normals, layer_id=layer, path_id=len(paths) % per_layer))
        left -= n
        if len(paths) % per_layer == 0:
            layer += 1
            z += layer_height
    return paths
