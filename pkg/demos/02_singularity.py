"""A toolpath sweeping past the pole: raw C motion versus the processed plan."""

import numpy as np

from maam_motion import RunConfig, plan_toolpath
from maam_motion.kinematics import rotary_ik, wound_delta
from maam_motion.synthetic import pole_crossing_path

for miss in (1.0, 0.5):
    tp = pole_crossing_path(step_deg=10.0, miss_deg=miss)
    _, c, _ = rotary_ik(tp.normals)
    raw = np.abs(wound_delta(c[:-1], c[1:]))
    res = plan_toolpath(tp, RunConfig())
    after = np.abs(np.diff(res.trajectory.c))
    print(f"miss {miss} deg")
    print("  raw |dC| per step:      ", np.round(raw, 2))
    print("  processed |dC| per step:", np.round(after, 2))
    for seg in res.singular_segments:
        kind = "dual reroute" if seg.used_dual else "cone boundary"
        print(f"  waypoints {seg.segment.first}-{seg.segment.last}: {kind}, theta {seg.theta:.1f} deg")
