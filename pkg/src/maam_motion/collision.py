"""
Collision tests between the printer head and the platform / printed part.

The head is a convex hull in its own frame (tip at the origin, nozzle axis
along +Z).  The part of the hull below ``tip_clearance`` is the deposition
zone and is not tested against printed material, otherwise every pose would
touch the bead it is laying down.

Printed material is a set of bead spheres (one per traversed waypoint) plus
optional triangle meshes of finished layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import InvariantError, NoFeasibleOrientation
from .geometry import (GJK_MAX_ITER, GJK_TOL, bounding_sphere, gjk_distance_nb, njit,
                       read_mesh, rotation_to)

CONTACT_TOL = 1e-9


def _hull_planes(points):
    hull = ConvexHull(points)
    eq = hull.equations
    return hull, eq[:, :3].copy(), -eq[:, 3].copy()


@dataclass(frozen=True, eq=False)
class HeadHull:
    """Convex printer-head model in the tool frame.

    ``vertices`` must all be extreme points of their hull and the tip (origin)
    must lie in the closed hull.  Use :meth:`from_points` for arbitrary point
    clouds or meshes.
    """

    vertices: np.ndarray
    axis_symmetric: bool = True
    tip_clearance: float = 1.0
    clip_vertices: np.ndarray = field(init=False, repr=False)
    normals: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)
    radius: float = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        hull, nrm, off = _hull_planes(v)
        if len(hull.vertices) != len(v):
            raise InvariantError("head hull vertices are not all extreme points")
        if np.max(-off) > 1e-9:
            raise InvariantError("the nozzle tip (origin) is outside the head hull")
        if v[:, 2].max() <= self.tip_clearance:
            raise InvariantError("tip_clearance removes the whole hull")
        clip = _clip_above(v, hull, self.tip_clearance)
        _, cn, co = _hull_planes(clip)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "clip_vertices", clip)
        object.__setattr__(self, "normals", cn)
        object.__setattr__(self, "offsets", co)
        object.__setattr__(self, "radius", float(np.linalg.norm(clip, axis=1).max()))

    @classmethod
    def from_points(cls, points, **kw) -> "HeadHull":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        pts = np.vstack([pts, np.zeros((1, 3))])
        hull = ConvexHull(pts)
        return cls(pts[hull.vertices], **kw)

    @classmethod
    def from_mesh(cls, path, **kw) -> "HeadHull":
        verts, _ = read_mesh(path)
        return cls.from_points(verts, **kw)

    def pose(self, p, n):
        """World-frame clipped vertices and facet planes for tip ``p``, axis ``n``."""
        R = rotation_to(n)
        p = np.asarray(p, dtype=float)
        V = self.clip_vertices @ R.T + p
        U = self.normals @ R.T
        h = self.offsets + U @ p
        return V, U, h

    def full_pose(self, p, n):
        return self.vertices @ rotation_to(n).T + np.asarray(p, dtype=float)


def _clip_above(v, hull, z0):
    """Vertices of conv(v) intersected with the half-space z >= z0."""
    keep = [v[v[:, 2] >= z0]]
    for simplex in hull.simplices:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            p, q = v[simplex[a]], v[simplex[b]]
            if (p[2] - z0) * (q[2] - z0) < 0:
                t = (z0 - p[2]) / (q[2] - p[2])
                keep.append((p + t * (q - p))[None, :])
    pts = np.unique(np.round(np.vstack(keep), 12), axis=0)
    return pts[ConvexHull(pts).vertices]


def default_head_hull(tip_clearance: float = 1.0) -> HeadHull:
    """A generic desktop print head: nozzle tip below a 36 mm wide, 38 mm tall body."""
    ang = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    ring = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=1)
    pts = [np.zeros((1, 3))]
    for r, z in ((4.0, 8.0), (18.0, 12.0), (18.0, 50.0)):
        pts.append(ring * [r, r, 0.0] + [0.0, 0.0, z])
    return HeadHull.from_points(np.vstack(pts), tip_clearance=tip_clearance)


@dataclass(eq=False)
class CollisionScene:
    """Platform half-space, finished-layer meshes and printed bead spheres.

    Beads are stored in print order; ``visible`` limits queries to the first
    ``visible`` of them so a single scene can answer "what was printed before
    waypoint i" for every i.  Use :meth:`prefix` for such a view and
    :meth:`add_beads` to grow the printed set.
    """

    platform_z: float = 0.0
    triangles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3)))
    beads: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    bead_radius: np.ndarray = field(default_factory=lambda: np.zeros(0))
    visible: int | None = None
    _bead_grid: "BeadGrid | None" = field(default=None, repr=False)
    _tri_tree: cKDTree | None = field(default=None, repr=False)
    _tri_radius: float = field(default=0.0, repr=False)

    def __post_init__(self):
        self.triangles = np.asarray(self.triangles, dtype=float).reshape(-1, 3, 3)
        self.beads = np.asarray(self.beads, dtype=float).reshape(-1, 3)
        r = np.asarray(self.bead_radius, dtype=float)
        self.bead_radius = np.full(len(self.beads), float(r)) if r.ndim == 0 else r
        if len(self.bead_radius) != len(self.beads):
            raise InvariantError("one bead radius per bead point required")
        if self.visible is None:
            self.visible = len(self.beads)
        if self._bead_grid is None and len(self.beads):
            self._bead_grid = BeadGrid.build(self.beads, self.bead_radius)
        if self._tri_tree is None and len(self.triangles):
            cent = self.triangles.mean(axis=1)
            self._tri_tree = cKDTree(cent)
            self._tri_radius = float(np.linalg.norm(self.triangles - cent[:, None, :], axis=2).max())

    @classmethod
    def from_meshes(cls, meshes, platform_z=0.0) -> "CollisionScene":
        tris = [np.asarray(v, float)[np.asarray(f, int)] for v, f in meshes]
        tris = np.concatenate(tris) if tris else np.zeros((0, 3, 3))
        return cls(platform_z=platform_z, triangles=tris)

    def prefix(self, count: int) -> "CollisionScene":
        """View exposing only the first ``count`` beads; shares spatial indices."""
        view = CollisionScene.__new__(CollisionScene)
        view.__dict__.update(self.__dict__)
        view.visible = int(min(max(count, 0), len(self.beads)))
        return view

    def add_beads(self, points, radius) -> "CollisionScene":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        r = np.broadcast_to(np.asarray(radius, dtype=float), (len(pts),))
        beads = np.vstack([self.beads[: self.visible], pts])
        radii = np.concatenate([self.bead_radius[: self.visible], r])
        return CollisionScene(self.platform_z, self.triangles, beads, radii,
                              _tri_tree=self._tri_tree, _tri_radius=self._tri_radius)

    @property
    def max_bead_radius(self) -> float:
        return float(self.bead_radius.max()) if len(self.bead_radius) else 0.0


@dataclass(frozen=True, eq=False)
class BeadGrid:
    """Uniform grid over bead centres; ``order`` lists bead ids cell by cell, ascending."""

    lo: np.ndarray
    cell: float
    dims: np.ndarray
    starts: np.ndarray
    order: np.ndarray
    r_max: float

    MAX_CELLS = 1 << 21

    @classmethod
    def build(cls, points, radii, cell: float = 4.0) -> "BeadGrid":
        pts = np.asarray(points, dtype=float)
        lo = pts.min(axis=0)
        span = pts.max(axis=0) - lo
        while np.prod(np.floor(span / cell) + 1) > cls.MAX_CELLS:
            cell *= 2.0
        dims = (np.floor(span / cell) + 1).astype(np.int64)
        ijk = np.minimum(((pts - lo) // cell).astype(np.int64), dims - 1)
        flat = (ijk[:, 0] * dims[1] + ijk[:, 1]) * dims[2] + ijk[:, 2]
        order = np.argsort(flat, kind="stable").astype(np.int64)
        counts = np.bincount(flat, minlength=int(np.prod(dims)))
        starts = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        r_max = float(np.max(radii)) if len(radii) else 0.0
        return cls(lo, float(cell), dims, starts, order, r_max)


@njit(cache=True)
def _grid_hits(V, U, h, lo, cell, dims, starts, order, pts, radii, visible, r_max, tol, max_iter):
    i0 = np.empty(3, np.int64)
    i1 = np.empty(3, np.int64)
    for k in range(3):
        a = int(np.floor((V[:, k].min() - r_max - lo[k]) / cell))
        b = int(np.floor((V[:, k].max() + r_max - lo[k]) / cell))
        i0[k] = max(a, 0)
        i1[k] = min(b, dims[k] - 1)
        if i0[k] > i1[k]:
            return False
    P = np.empty((1, 3))
    for ix in range(i0[0], i1[0] + 1):
        for iy in range(i0[1], i1[1] + 1):
            for iz in range(i0[2], i1[2] + 1):
                c = (ix * dims[1] + iy) * dims[2] + iz
                for s in range(starts[c], starts[c + 1]):
                    j = order[s]
                    if j >= visible:
                        break  # ids ascend within a cell
                    q0 = pts[j, 0]
                    q1 = pts[j, 1]
                    q2 = pts[j, 2]
                    r = radii[j] + CONTACT_TOL
                    separated = False
                    for f in range(U.shape[0]):
                        if U[f, 0] * q0 + U[f, 1] * q1 + U[f, 2] * q2 - h[f] > r:
                            separated = True
                            break
                    if separated:
                        continue
                    P[0, 0] = q0
                    P[0, 1] = q1
                    P[0, 2] = q2
                    if gjk_distance_nb(V, P, tol, max_iter) <= r:
                        return True
    return False


@njit(cache=True)
def _any_triangle_touching(V, T, tol, max_iter):
    for i in range(T.shape[0]):
        if gjk_distance_nb(V, T[i], tol, max_iter) <= CONTACT_TOL:
            return True
    return False


def _body_hits(V, U, h, scene: CollisionScene) -> bool:
    """True if the convex body conv(V) touches anything in ``scene``.

    ``U``/``h`` are directions with h = max over V of U.v; they give cheap
    separation certificates before the exact GJK test.
    """
    if V[:, 2].min() <= scene.platform_z + CONTACT_TOL:
        return True
    if scene.visible and scene._bead_grid is not None:
        g = scene._bead_grid
        if _grid_hits(V, U, h, g.lo, g.cell, g.dims, g.starts, g.order, scene.beads,
                      scene.bead_radius, scene.visible, g.r_max, GJK_TOL, GJK_MAX_ITER):
            return True

    if scene._tri_tree is not None:
        center, rad = bounding_sphere(V)
        idx = scene._tri_tree.query_ball_point(center, rad + scene._tri_radius)
        if idx:
            T = scene.triangles[np.asarray(idx)]
            # separated if every triangle vertex lies beyond one support plane
            proj = np.einsum("kvj,fj->kfv", T, U).min(axis=2) - h
            cand = ~(proj > CONTACT_TOL).any(axis=1)
            if cand.any():
                if _any_triangle_touching(V, np.ascontiguousarray(T[cand]), GJK_TOL, GJK_MAX_ITER):
                    return True
    return False


def gamma(p, n, scene: CollisionScene, hull: HeadHull) -> int:
    """Collision indicator: 1 if the head posed at tip ``p`` along ``n`` hits the scene."""
    V, U, h = hull.pose(p, n)
    return int(_body_hits(V, U, h, scene))


def swept_collision(a, b, scene: CollisionScene, hull: HeadHull) -> int:
    """Collision indicator for the convex hull of the head in poses ``a`` and ``b``.

    Each pose is ``(p, n)``; the orientations must be within 90 degrees.
    """
    (pa, na), (pb, nb) = a, b
    if float(np.dot(na, nb)) < -1e-12:
        raise ValueError("swept check needs orientations within 90 degrees")
    Va, Ua, _ = hull.pose(pa, na)
    Vb, Ub, _ = hull.pose(pb, nb)
    V = np.vstack([Va, Vb])
    U = np.vstack([Ua, Ub])
    h = (V @ U.T).max(axis=0)
    return int(_body_hits(V, U, h, scene))


# -- variant sampling ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VariantSet:
    base: object
    variants: np.ndarray
    beta: float


def sample_cap(n, beta_deg: float, count: int, rng) -> np.ndarray:
    """``count`` unit vectors uniform (by area) on the cap of half-angle beta around n."""
    cb = math.cos(math.radians(beta_deg))
    cos_t = rng.uniform(cb, 1.0, size=count)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
    sin_t = np.sqrt(np.clip(1.0 - cos_t * cos_t, 0.0, None))
    local = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1)
    out = local @ rotation_to(n).T
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _is_singular_vec(n, alpha):
    # same test as singularity.is_singular, inlined to avoid a circular import
    return math.hypot(n[0], n[1]) <= math.tan(math.radians(alpha)) * n[2]


def sample_variants(w, scene: CollisionScene, hull: HeadHull, beta: float = 45.0,
                    count: int = 16, exclude_singular: bool = False, rng_seed=None,
                    alpha: float = 4.5, waypoint_index=None) -> VariantSet:
    """Collision-free orientations near ``w.n``.

    Draws ``count`` samples in the cap of half-angle ``beta``; if none survive,
    the cap grows by 10% and sampling repeats, up to a hemisphere.  Orientations
    below the horizontal are discarded, as are singular ones when
    ``exclude_singular`` is set.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    n0 = np.asarray(w.n, dtype=float)
    b = float(beta)
    while True:
        b_try = min(b, 90.0)
        keep = []
        for v in sample_cap(n0, b_try, count, rng):
            if v[2] <= 1e-9:
                continue
            if exclude_singular and _is_singular_vec(v, alpha):
                continue
            if gamma(w.p, v, scene, hull) == 0:
                keep.append(v)
        if keep:
            return VariantSet(w, np.array(keep), b_try)
        if b_try >= 90.0:
            raise NoFeasibleOrientation(waypoint_index)
        b *= 1.1
