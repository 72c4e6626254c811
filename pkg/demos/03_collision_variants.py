"""A vertical head blocked by printed beads, and the tilted variants that clear them."""

import numpy as np

from maam_motion import CollisionScene, default_head_hull, gamma, sample_variants
from maam_motion.toolpath import Waypoint

hull = default_head_hull()
wall = np.array([[x, 12.0, z] for x in np.arange(-20, 21, 2.0) for z in np.arange(10, 40, 2.0)])
scene = CollisionScene(platform_z=0.0, beads=wall, bead_radius=1.0)
w = Waypoint(np.array([0.0, 0.0, 10.0]), np.array([0.0, 0.0, 1.0]))

print("vertical pose collides:", bool(gamma(w.p, w.n, scene, hull)))
vs = sample_variants(w, scene, hull, beta=45.0, count=16, rng_seed=0)
print(f"{len(vs.variants)} collision-free variants within {vs.beta:.1f} deg:")
for v in vs.variants:
    print("  ", np.round(v, 3), "tilt", round(float(np.degrees(np.arccos(v[2]))), 1))
