import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull
from scipy.spatial.transform import Rotation

from oracles import pose_interpolation_hits
from maam_motion.collision import (CollisionScene, HeadHull, default_head_hull, gamma, sample_cap,
                                   sample_variants, swept_collision)
from maam_motion.errors import InvariantError, NoFeasibleOrientation
from maam_motion.kinematics import rotary_fk
from maam_motion.toolpath import Waypoint

Z = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="module")
def hull():
    return default_head_hull()


def _posed(hull, p, n, clipped=True):
    # independent pose: scipy's minimal rotation aligning +Z with n
    rot, _ = Rotation.align_vectors([n], [[0, 0, 1]])
    v = hull.clip_vertices if clipped else hull.vertices
    return rot.apply(v) + p


def test_high_vertical_head_is_free(hull):
    assert gamma([0, 0, 50], Z, CollisionScene(), hull) == 0


def test_tilted_vertex_hits_platform():
    pts = [[0, 0, 0], [5, 0, 2], [-5, 0, 2], [0, 5, 2], [0, -5, 2],
           [5, 0, 10], [-5, 0, 10], [0, 5, 10], [0, -5, 10]]
    hull = HeadHull.from_points(pts, tip_clearance=0.5)
    n = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    tip = np.array([0.0, 0.0, 1.0])
    assert _posed(hull, tip, n)[:, 2].min() < 0.0
    assert gamma(tip, n, CollisionScene(), hull) == 1
    assert gamma(tip, Z, CollisionScene(), hull) == 0


def test_bead_on_hull_surface_counts(hull):
    # a point on a facet of the posed, clipped hull
    p, n = np.array([0.0, 0.0, 30.0]), rotary_fk(25.0, 40.0)[0]
    V = _posed(hull, p, n)
    ch = ConvexHull(V)
    face = V[ch.simplices[0]]
    q = face.mean(axis=0)
    normal = ch.equations[0, :3]
    on = CollisionScene(beads=q, bead_radius=0.0)
    off = CollisionScene(beads=q + 1e-6 * normal, bead_radius=0.0)
    assert gamma(p, n, on, hull) == 1
    assert gamma(p, n, off, hull) == 0


def test_deposition_zone_is_ignored(hull):
    # the bead being laid down right at the tip must not count
    scene = CollisionScene(platform_z=-10, beads=[[0, 0, 0]], bead_radius=0.2)
    assert gamma([0, 0, 0], Z, scene, hull) == 0


def test_gamma_monotone_in_scene(hull, rng):
    for _ in range(50):
        beads = rng.uniform(-30, 30, (20, 3)) + [0, 0, 30]
        p = rng.uniform(-5, 5, 3) + [0, 0, 30]
        n = rotary_fk(rng.uniform(0, 60), rng.uniform(-180, 180))[0]
        small = CollisionScene(beads=beads[:10], bead_radius=1.0)
        big = CollisionScene(beads=beads, bead_radius=1.0)
        assert gamma(p, n, small, hull) <= gamma(p, n, big, hull)


def test_prefix_hides_later_beads(hull):
    scene = CollisionScene(beads=[[100, 0, 0], [0, 0, 20]], bead_radius=1.0)
    assert gamma([0, 0, 5], Z, scene.prefix(1), hull) == 0
    assert gamma([0, 0, 5], Z, scene.prefix(2), hull) == 1
    assert gamma([0, 0, 5], Z, scene, hull) == 1


def test_add_beads_grows(hull):
    scene = CollisionScene().add_beads([[0, 0, 20]], 0.5)
    assert gamma([0, 0, 5], Z, scene, hull) == 1


def test_platform_rotation_invariance(hull, rng):
    # the default hull has 16-fold symmetry; platform-only results are invariant
    # under world-Z rotations by multiples of 22.5 degrees
    scene = CollisionScene(platform_z=0.0)
    checked = 0
    for _ in range(300):
        p = np.array([*rng.uniform(-10, 10, 2), rng.uniform(0, 25)])
        n = rotary_fk(rng.uniform(0, 85), rng.uniform(-180, 180))[0]
        margin = abs(_posed(hull, p, n)[:, 2].min())
        if margin < 1e-6:
            continue
        rot = Rotation.from_euler("z", 22.5 * rng.integers(1, 16), degrees=True)
        assert gamma(p, n, scene, hull) == gamma(rot.apply(p), rot.apply(n), scene, hull)
        checked += 1
    assert checked > 250


def test_mesh_obstacle(hull):
    wall = np.array([[[-20, -200, -10], [-20, 200, -10], [-20, 0, 200]]], float)
    scene = CollisionScene(triangles=wall, platform_z=-50)
    assert gamma([0, 0, 30], Z, scene, hull) == 0
    assert gamma([0, 0, 30], rotary_fk(-30, 0)[0], scene, hull) == 1


def test_hull_invariants():
    with pytest.raises(InvariantError):
        HeadHull(np.array([[1, 1, 1], [2, 1, 1], [1, 2, 1], [1, 1, 2]], float))
    with pytest.raises(InvariantError):
        HeadHull.from_points([[1, 0, 0.5], [-1, 0, 0.5], [0, 1, 0.5]], tip_clearance=1.0)


# -- swept volumes -----------------------------------------------------------------


def test_swept_degenerate_equals_gamma(hull, rng):
    for _ in range(30):
        scene = CollisionScene(beads=rng.uniform(-20, 20, (10, 3)) + [0, 0, 20], bead_radius=1.0)
        p = rng.uniform(-5, 5, 3) + [0, 0, 20]
        n = rotary_fk(rng.uniform(0, 40), rng.uniform(-180, 180))[0]
        assert swept_collision((p, n), (p, n), scene, hull) == gamma(p, n, scene, hull)


def test_swept_catches_obstacle_between_poses(hull):
    scene = CollisionScene(beads=[[0, 0, 20]], bead_radius=0.5)
    a, b = (np.array([-40.0, 0, 5]), Z), (np.array([40.0, 0, 5]), Z)
    assert gamma(*a, scene, hull) == 0 and gamma(*b, scene, hull) == 0
    assert pose_interpolation_hits(a, b, scene, hull)
    assert swept_collision(a, b, scene, hull) == 1


def test_swept_over_approximates_interpolation(hull, rng):
    misses = 0
    for _ in range(100):
        beads = rng.uniform([-25, -25, 0], [25, 25, 40], (int(rng.integers(1, 6)) * 4, 3))
        scene = CollisionScene(platform_z=0.0, beads=beads, bead_radius=0.5)
        pa = rng.uniform([-10, -10, 15], [10, 10, 30])
        pb = pa + rng.uniform(-3, 3, 3)
        na = rotary_fk(rng.uniform(0, 50), rng.uniform(-180, 180))[0]
        axis = np.cross(na, rng.normal(size=3))
        axis /= np.linalg.norm(axis)
        nb = Rotation.from_rotvec(axis * math.radians(rng.uniform(0, 30))).apply(na)
        if nb[2] <= 0:
            continue
        dense = pose_interpolation_hits((pa, na), (pb, nb), scene, hull)
        swept = swept_collision((pa, na), (pb, nb), scene, hull)
        misses += dense and not swept
        if gamma(pa, na, scene, hull):
            assert swept
    assert misses == 0


def test_swept_rejects_large_rotation(hull):
    with pytest.raises(ValueError):
        swept_collision(([0, 0, 9], Z), ([1, 0, 9], rotary_fk(120, 0)[0]), CollisionScene(), hull)


# -- variants ----------------------------------------------------------------------


def test_cap_sampling_is_inside_cap(rng):
    n = rotary_fk(30.0, 70.0)[0]
    s = sample_cap(n, 45.0, 5000, rng)
    assert np.all(s @ n >= math.cos(math.radians(45.0)) - 1e-12)
    assert np.abs(np.linalg.norm(s, axis=1) - 1).max() < 1e-12
    # area-uniform: the cosine to the axis is uniform on [cos beta, 1]
    c = s @ n
    assert abs(np.median(c) - (1 + math.cos(math.radians(45))) / 2) < 0.01


def test_variants_empty_scene(hull):
    w = Waypoint(np.array([0, 0, 50.0]), rotary_fk(20, 10)[0])
    vs = sample_variants(w, CollisionScene(), hull, beta=45, count=16, rng_seed=3)
    assert len(vs.variants) == 16
    assert np.all(vs.variants @ w.n >= math.cos(math.radians(45)) - 1e-12)


def test_variants_avoid_blocked_side(hull):
    wall = np.array([[[-18 - 1e-6, -400, -10], [-18 - 1e-6, 400, -10], [-18 - 1e-6, 0, 400]]])
    scene = CollisionScene(platform_z=-100, triangles=wall)
    w = Waypoint(np.array([0, 0, 30.0]), rotary_fk(-40.0, 0.0)[0])
    assert gamma(w.p, w.n, scene, hull) == 1
    vs = sample_variants(w, scene, hull, beta=45, count=16, rng_seed=7)
    assert len(vs.variants) > 0
    assert np.all(vs.variants[:, 0] >= 0.0)
    for v in vs.variants:
        assert gamma(w.p, v, scene, hull) == 0
        assert v @ w.n >= math.cos(math.radians(vs.beta)) - 1e-12


def test_variants_deterministic(hull):
    scene = CollisionScene(beads=[[10, 0, 40]], bead_radius=3.0)
    w = Waypoint(np.array([0, 0, 30.0]), rotary_fk(20, 0)[0])
    a = sample_variants(w, scene, hull, rng_seed=11).variants
    b = sample_variants(w, scene, hull, rng_seed=11).variants
    assert np.array_equal(a, b)


def test_variants_exclude_singular(hull):
    w = Waypoint(np.array([0, 0, 50.0]), Z)
    vs = sample_variants(w, CollisionScene(), hull, beta=10, count=64, exclude_singular=True, rng_seed=1)
    tilt = np.degrees(np.arctan2(np.hypot(vs.variants[:, 0], vs.variants[:, 1]), vs.variants[:, 2]))
    assert np.all(tilt > 4.5)


def test_variants_unprintable(hull):
    w = Waypoint(np.array([0, 0, 0.5]), Z)
    with pytest.raises(NoFeasibleOrientation) as err:
        sample_variants(w, CollisionScene(platform_z=5.0), hull, rng_seed=0, waypoint_index=9)
    assert err.value.waypoint_index == 9
