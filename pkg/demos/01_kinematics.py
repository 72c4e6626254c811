"""Inverse and forward kinematics for one orientation on every machine layout."""

import numpy as np

from maam_motion import ConfigKind, MachineConfig, Rotary, dual_of, fk, ik_linear, ik_rotational

n = np.array([0.3, -0.2, 0.9])
n /= np.linalg.norm(n)
p = (12.0, -4.0, 7.5)

for kind in ConfigKind:
    for rotary in Rotary:
        cfg = MachineConfig(kind=kind, rotary=rotary, d=10.0, h=5.0, r=20.0)
        plus, minus = ik_rotational(n, cfg)
        xyz = ik_linear(p, plus, cfg)
        p_back, n_back = fk(plus, xyz, cfg)
        print(f"config {kind.value:>3} {rotary.value}: {cfg.rotary_letter}={plus.rot1:8.3f} C={plus.c:8.3f}"
              f"  dual {minus.rot1:8.3f} {minus.c:8.3f}  XYZ={np.round(xyz, 3)}"
              f"  err={max(np.abs(p_back - p).max(), np.abs(n_back - n).max()):.1e}")

assert dual_of(dual_of(plus)).rot1 == plus.rot1
