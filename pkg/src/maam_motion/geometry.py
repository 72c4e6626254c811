"""
Convex geometry helpers: GJK distance, frame rotations and mesh readers.

The GJK routines are written in a loop-oriented style so numba can compile
them; without numba they run as plain Python.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

GJK_TOL = 1e-9
GJK_MAX_ITER = 128


@njit(cache=True)
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def _support(A, B, d, out):
    # support of the Minkowski difference A - B in direction d
    ia = 0
    best = -1e300
    for i in range(A.shape[0]):
        s = A[i, 0] * d[0] + A[i, 1] * d[1] + A[i, 2] * d[2]
        if s > best:
            best = s
            ia = i
    ib = 0
    best = 1e300
    for i in range(B.shape[0]):
        s = B[i, 0] * d[0] + B[i, 1] * d[1] + B[i, 2] * d[2]
        if s < best:
            best = s
            ib = i
    for k in range(3):
        out[k] = A[ia, k] - B[ib, k]


@njit(cache=True)
def _closest_segment(S, v):
    a = S[0]
    b = S[1]
    ab = b - a
    denom = _dot(ab, ab)
    t = 0.0 if denom <= 0.0 else -_dot(a, ab) / denom
    if t <= 0.0:
        v[:] = a
        return 1
    if t >= 1.0:
        v[:] = b
        S[0] = b
        return 1
    v[:] = a + t * ab
    return 2


@njit(cache=True)
def _closest_triangle_pts(a, b, c, v):
    """Closest point of triangle abc to the origin; returns a vertex bitmask."""
    ab = b - a
    ac = c - a
    ap = -a
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    if d1 <= 0.0 and d2 <= 0.0:
        v[:] = a
        return 1
    bp = -b
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    if d3 >= 0.0 and d4 <= d3:
        v[:] = b
        return 2
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        v[:] = a + t * ab
        return 3
    cp = -c
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    if d6 >= 0.0 and d5 <= d6:
        v[:] = c
        return 4
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        v[:] = a + t * ac
        return 5
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        v[:] = b + t * (c - b)
        return 6
    denom = va + vb + vc
    if denom == 0.0:
        # degenerate triangle; fall back to its best edge
        v[:] = a
        return 1
    s = vb / denom
    t = vc / denom
    v[:] = a + s * ab + t * ac
    return 7


@njit(cache=True)
def _reduce(S, pts, mask):
    n = 0
    tmp = np.empty((4, 3))
    for i in range(len(pts)):
        if mask & (1 << i):
            tmp[n] = S[pts[i]]
            n += 1
    for i in range(n):
        S[i] = tmp[i]
    return n


@njit(cache=True)
def _closest_simplex(S, n, v):
    """Closest point to the origin of the simplex S[:n]; shrinks S in place.

    Returns the new vertex count, 0 meaning the origin is enclosed.
    """
    if n == 1:
        v[:] = S[0]
        return 1
    if n == 2:
        return _closest_segment(S, v)
    if n == 3:
        mask = _closest_triangle_pts(S[0], S[1], S[2], v)
        return _reduce(S, np.array([0, 1, 2]), mask)
    # tetrahedron: test the origin against each face plane
    faces = np.array([[0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2], [1, 3, 2, 0]])
    best = 1e300
    best_mask = 0
    best_face = -1
    w = np.empty(3)
    for f in range(4):
        i = faces[f, 0]
        j = faces[f, 1]
        k = faces[f, 2]
        o = faces[f, 3]
        nrm = np.cross(S[j] - S[i], S[k] - S[i])
        side_o = _dot(nrm, S[o] - S[i])
        side_p = _dot(nrm, -S[i])
        if side_o * side_p < 0.0 or (side_p != 0.0 and side_o == 0.0):
            mask = _closest_triangle_pts(S[i], S[j], S[k], w)
            dd = _dot(w, w)
            if dd < best:
                best = dd
                best_mask = mask
                best_face = f
                v[:] = w
    if best_face < 0:
        v[:] = 0.0
        return 0
    return _reduce(S, faces[best_face, :3].copy(), best_mask)


@njit(cache=True)
def gjk_distance_nb(A, B, tol, max_iter):
    S = np.empty((4, 3))
    v = np.empty(3)
    w = np.empty(3)
    v[:] = A[0] - B[0]
    n = 0
    for _ in range(max_iter):
        vv = _dot(v, v)
        if vv <= tol * tol:
            return 0.0
        _support(A, B, -v, w)
        vw = _dot(v, w)
        # duality gap: |v| - (v.w)/|v| bounds the error of |v|
        if vv - vw <= tol * np.sqrt(vv):
            return np.sqrt(vv)
        dup = False
        for i in range(n):
            if S[i, 0] == w[0] and S[i, 1] == w[1] and S[i, 2] == w[2]:
                dup = True
        if dup:
            return np.sqrt(vv)
        S[n] = w
        n += 1
        n = _closest_simplex(S, n, v)
        if n == 0:
            return 0.0
    return np.sqrt(_dot(v, v))


def gjk_distance(A, B, tol: float = GJK_TOL, max_iter: int = GJK_MAX_ITER) -> float:
    """Euclidean distance between the convex hulls of point sets ``A`` and ``B``.

    Returns 0.0 when the hulls touch or overlap (within ``tol``).
    """
    A = np.ascontiguousarray(A, dtype=float).reshape(-1, 3)
    B = np.ascontiguousarray(B, dtype=float).reshape(-1, 3)
    return float(gjk_distance_nb(A, B, tol, max_iter))


def rotation_to(n) -> np.ndarray:
    """Minimal rotation matrix taking +Z onto the unit vector ``n``."""
    n = np.asarray(n, dtype=float)
    x, y, z = n
    if z < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    k = 1.0 / (1.0 + z)
    return np.array([
        [z + k * y * y, -k * x * y, x],
        [-k * x * y, z + k * x * x, y],
        [-x, -y, z],
    ])


def bounding_sphere(points) -> tuple[np.ndarray, float]:
    """Cheap enclosing sphere: box centre plus max distance."""
    pts = np.asarray(points, dtype=float)
    c = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    return c, float(np.sqrt(((pts - c) ** 2).sum(axis=1).max()))


# -- mesh files ------------------------------------------------------------------


def _lines(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return fh.read().splitlines()
    data = source.read()
    return (data.decode("utf-8") if isinstance(data, bytes) else data).splitlines()


def _fan(face):
    return [(face[0], face[i], face[i + 1]) for i in range(1, len(face) - 1)]


def read_obj(source) -> tuple[np.ndarray, np.ndarray]:
    """Vertices (V, 3) and triangles (F, 3) of an OBJ file; polygons are fanned."""
    verts, tris = [], []
    for line in _lines(source):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(t) for t in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            tris.extend(_fan(idx))
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(tris, dtype=int).reshape(-1, 3)


def read_off(source) -> tuple[np.ndarray, np.ndarray]:
    tokens = []
    for line in _lines(source):
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if not tokens or tokens[0][0] != "OFF":
        raise ValueError("not an OFF file")
    head = tokens[0][1:] if len(tokens[0]) > 1 else tokens[1]
    body = tokens[1:] if len(tokens[0]) > 1 else tokens[2:]
    nv, nf = int(head[0]), int(head[1])
    verts = np.array([[float(t) for t in row[:3]] for row in body[:nv]], dtype=float)
    tris = []
    for row in body[nv:nv + nf]:
        k = int(row[0])
        tris.extend(_fan([int(t) for t in row[1:1 + k]]))
    return verts.reshape(-1, 3), np.array(tris, dtype=int).reshape(-1, 3)


def read_mesh(path) -> tuple[np.ndarray, np.ndarray]:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".obj":
        return read_obj(path)
    if ext == ".off":
        return read_off(path)
    raise ValueError(f"unsupported mesh format: {path}")


def write_obj(vertices, triangles) -> str:
    out = [f"v {float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in np.asarray(vertices, float)]
    out += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(triangles, int)]
    return "\n".join(out) + "\n"
