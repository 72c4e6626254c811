"""
Candidate graph over machine configurations and its shortest-path search.

Every waypoint contributes a column of rotary candidates (both IK branches
of its orientation, or of each collision-free variant).  Adjacent columns are
fully connected with weight ``|d rot1| + |wound d C|`` and the trajectory is
the minimum-weight source-to-sink path.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .collision import CollisionScene, HeadHull, gamma, swept_collision
from .errors import Disconnected, EmptyColumn, NoPath
from .extrusion import ExtrusionParams, segment_volumes, segment_windows, tip_speeds
from .kinematics import Branch, MachineConfig, linear_ik, normalize_angle, rotary_ik, unwrap_c, wound_delta
from .toolpath import Status, Toolpath


class NodeSource(IntEnum):
    ORIGINAL = 0
    SINGULAR_PROCESSED = 1
    VARIANT = 2


@dataclass(frozen=True, eq=False)
class GraphNode:
    waypoint_index: int
    rot1: float
    c: float
    branch: Branch
    normal: np.ndarray
    source: NodeSource = NodeSource.ORIGINAL
    variant: int = -1


@dataclass(eq=False)
class Graph:
    """Layered graph: ``weights[i][a, b]`` joins node a of column i to node b of column i + 1.

    Pruned edges hold ``inf``.  ``breaks`` lists column pairs (by the index of
    the later column) that were disconnected and are crossed by a travel move.
    """

    columns: list
    weights: list
    raw_weights: list = None
    positions: np.ndarray = None
    breaks: set = field(default_factory=set)

    def __post_init__(self):
        if self.raw_weights is None:
            self.raw_weights = [w.copy() for w in self.weights]

    @property
    def edge_count(self) -> int:
        return int(sum(np.isfinite(w).sum() for w in self.weights))

    def copy(self) -> "Graph":
        return Graph(self.columns, [w.copy() for w in self.weights], self.raw_weights,
                     self.positions, set(self.breaks))


def edge_weights(rot_a, c_a, rot_b, c_b) -> np.ndarray:
    """Pairwise L1 rotary distance between two candidate lists, wound on C."""
    db = np.abs(np.subtract.outer(np.asarray(rot_a, float), np.asarray(rot_b, float)))
    dc = np.abs(wound_delta(np.asarray(c_a, float)[:, None], np.asarray(c_b, float)[None, :]))
    return db + dc


def _resolve_free(c, free):
    """Replace indeterminate pole C values by the nearest determinate neighbour's."""
    c = np.array(c, dtype=float)
    if not free.any():
        return c
    if free.all():
        c[:] = 0.0
        return c
    idx = np.flatnonzero(~free)
    for i in np.flatnonzero(free):
        k = np.searchsorted(idx, i)
        j = idx[k - 1] if k > 0 else idx[k]
        c[i] = c[j]
    return c


def build_graph(tp: Toolpath, cfg: MachineConfig, pinned=None, variants=None) -> Graph:
    """Build the candidate graph.

    ``pinned`` maps waypoint index to a fixed (rot1, c) (singular-processed
    waypoints); ``variants`` maps waypoint index to an (k, 3) array of
    collision-free orientations replacing the waypoint's own.  Each
    orientation yields the two IK branches.
    """
    pinned = pinned or {}
    variants = variants or {}
    rot, c, free = rotary_ik(tp.normals, cfg.rotary)
    c = _resolve_free(c, free)
    for i, (b, cc) in pinned.items():
        if i not in variants:
            rot[i], c[i] = b, cc

    columns = []
    for i in range(len(tp)):
        if i in variants:
            vs = np.asarray(variants[i], dtype=float).reshape(-1, 3)
            if len(vs) == 0:
                raise EmptyColumn(i)
            vr, vc, vf = rotary_ik(vs, cfg.rotary)
            vc = np.where(vf, c[i], vc)
            col = []
            for j in range(len(vs)):
                col.append(GraphNode(i, float(vr[j]), float(vc[j]), Branch.PLUS, vs[j],
                                     NodeSource.VARIANT, j))
                col.append(GraphNode(i, -float(vr[j]), float(normalize_angle(vc[j] + 180.0)),
                                     Branch.MINUS, vs[j], NodeSource.VARIANT, j))
        else:
            src = (NodeSource.SINGULAR_PROCESSED if tp.status[i] == Status.SINGULAR_PROCESSED
                   else NodeSource.ORIGINAL)
            b0, c0 = float(rot[i]), float(c[i])
            first = Branch.PLUS if b0 >= 0 else Branch.MINUS
            second = Branch.MINUS if first is Branch.PLUS else Branch.PLUS
            col = [GraphNode(i, b0, c0, first, tp.normals[i], src),
                   GraphNode(i, -b0, float(normalize_angle(c0 + 180.0)), second, tp.normals[i], src)]
        columns.append(col)

    weights = []
    for i in range(len(columns) - 1):
        a, b = columns[i], columns[i + 1]
        weights.append(edge_weights([n.rot1 for n in a], [n.c for n in a],
                                    [n.rot1 for n in b], [n.c for n in b]))
    return Graph(columns, weights, positions=np.array(tp.positions))


def _pose_groups(column):
    """Distinct orientations in a column and the node indices using each."""
    groups = {}
    for k, node in enumerate(column):
        key = node.variant if node.source is NodeSource.VARIANT else -1
        groups.setdefault(key, (node.normal, []))[1].append(k)
    return list(groups.values())


def prune_edges(g: Graph, scene: CollisionScene, hull: HeadHull, bead_offset=None,
                on_disconnect: str = "raise") -> Graph:
    """Remove edges whose swept head volume collides.

    With ``bead_offset`` set, the edge leaving column i is checked against
    ``scene.prefix(bead_offset + i)``; otherwise against the whole scene.
    Edges joining orientations more than 90 degrees apart are removed as well.
    ``on_disconnect="break"`` records a travel break instead of raising
    :class:`Disconnected` when no surviving edge reaches the next column from
    a node that is itself reachable.
    """
    out = g.copy()
    reach = np.ones(len(out.columns[0]), dtype=bool) if out.columns else np.zeros(0, bool)
    for i, w in enumerate(out.weights):
        if i + 1 in out.breaks:
            reach = np.ones(w.shape[1], dtype=bool)
            continue
        view = scene if bead_offset is None else scene.prefix(bead_offset + i)
        pa, pb = out.positions[i], out.positions[i + 1]
        for na, rows in _pose_groups(out.columns[i]):
            for nb, cols in _pose_groups(out.columns[i + 1]):
                ix = np.ix_(rows, cols)
                if not np.isfinite(w[ix]).any():
                    continue
                if float(np.dot(na, nb)) < 0.0 or swept_collision((pa, na), (pb, nb), view, hull):
                    w[ix] = np.inf
        # a column is cut off once no surviving edge leaves a reachable node
        nxt = np.isfinite(w[reach]).any(axis=0)
        if not nxt.any():
            if on_disconnect == "break":
                out.breaks.add(i + 1)
                out.weights[i] = out.raw_weights[i].copy()
                nxt = np.ones(w.shape[1], dtype=bool)
            else:
                raise Disconnected(i)
        reach = nxt
    return out


@dataclass(eq=False)
class Trajectory:
    """Chosen configuration per waypoint plus the derived machine motion.

    ``breaks`` holds waypoint indices ``i`` such that the move from ``i - 1``
    to ``i`` is a travel move without extrusion.
    """

    nodes: list
    cost: float
    rot1: np.ndarray = None
    c: np.ndarray = None
    xyz: np.ndarray = None
    normals: np.ndarray = None
    positions: np.ndarray = None
    delta_e: np.ndarray = None
    v_min: np.ndarray = None
    v_max: np.ndarray = None
    v: np.ndarray = None
    breaks: tuple = ()
    layer_id: int = 0
    path_id: int = 0

    @property
    def mcs(self) -> np.ndarray:
        return np.column_stack([self.xyz, self.rot1, self.c])

    @property
    def feasible(self) -> np.ndarray:
        return (self.v >= self.v_min) & (self.v <= self.v_max)

    @property
    def extruding(self) -> np.ndarray:
        mask = np.ones(len(self.nodes) - 1, dtype=bool)
        for b in self.breaks:
            mask[b - 1] = False
        return mask


def shortest_trajectory(g: Graph) -> Trajectory:
    """Dijkstra from a virtual source (all first-column nodes) to a virtual sink.

    Ties resolve to the lowest node id: nodes are numbered column by column.
    """
    sizes = [len(col) for col in g.columns]
    if not sizes or min(sizes) == 0:
        raise NoPath("graph has an empty column")
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    last = len(sizes) - 1
    dist = np.full(total, np.inf)
    pred = np.full(total, -1, dtype=np.int64)
    done = np.zeros(total, dtype=bool)
    heap = []
    for k in range(sizes[0]):
        dist[k] = 0.0
        heap.append((0.0, k))
    heapq.heapify(heap)
    col_of = np.repeat(np.arange(len(sizes)), sizes)
    sink = -1
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        ci = int(col_of[u])
        if ci == last:
            sink = u  # zero-weight edge to the virtual sink: first settled wins
            break
        row = g.weights[ci][u - offsets[ci]]
        base = offsets[ci + 1]
        for j in np.flatnonzero(np.isfinite(row)):
            v = int(base + j)
            nd = d + float(row[j])
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    if sink < 0:
        raise NoPath("no path reaches the last column")
    chosen = []
    u = sink
    while u >= 0:
        ci = int(col_of[u])
        chosen.append(g.columns[ci][u - offsets[ci]])
        u = int(pred[u])
    chosen.reverse()
    return Trajectory(nodes=chosen, cost=float(dist[sink]))


def first_unreachable_column(g: Graph) -> int | None:
    reach = np.ones(len(g.columns[0]), dtype=bool)
    for i, w in enumerate(g.weights):
        reach = np.isfinite(w[reach]).any(axis=0) if reach.any() else np.zeros(w.shape[1], bool)
        if not reach.any():
            return i + 1
    return None


def path_cost(nodes) -> float:
    total = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        total += float(edge_weights([a.rot1], [a.c], [b.rot1], [b.c])[0, 0])
    return total


def finalize(traj: Trajectory, tp: Toolpath, cfg: MachineConfig, params: ExtrusionParams,
             breaks=()) -> Trajectory:
    """Fill machine coordinates, extrusion and feedrate for a chosen node sequence."""
    nodes = traj.nodes
    rot1 = np.array([n.rot1 for n in nodes])
    c = unwrap_c([n.c for n in nodes])
    normals = np.array([n.normal for n in nodes])
    xyz = linear_ik(tp.positions, rot1, c, cfg)
    final_tp = tp.with_normals(normals)
    delta_e = segment_volumes(final_tp, params)
    v_min, v_max = segment_windows(final_tp, params)
    mcs = np.column_stack([xyz, rot1, c])
    v = tip_speeds(mcs, tp.segment_lengths, cfg, v_max)
    brk = tuple(sorted({int(b) for b in breaks if 0 < b < len(nodes)}))
    for b in brk:
        delta_e[b - 1] = 0.0
    return Trajectory(nodes=nodes, cost=traj.cost, rot1=rot1, c=c, xyz=xyz, normals=normals,
                      positions=np.array(tp.positions), delta_e=delta_e, v_min=v_min, v_max=v_max,
                      v=v, breaks=brk, layer_id=tp.layer_id, path_id=tp.path_id)


def naive_trajectory(tp: Toolpath, cfg: MachineConfig, params: ExtrusionParams) -> Trajectory:
    """Raw IK baseline: positive branch everywhere, C unwrapped, no replanning."""
    rot, c, free = rotary_ik(tp.normals, cfg.rotary)
    c = _resolve_free(c, free)
    nodes = [GraphNode(i, float(rot[i]), float(c[i]), Branch.PLUS, tp.normals[i])
             for i in range(len(tp))]
    return finalize(Trajectory(nodes, path_cost(nodes)), tp, cfg, params)


def verify_collision_free(traj: Trajectory, scene: CollisionScene, hull: HeadHull,
                          bead_offset=None) -> list:
    """Indices of nodes (``("node", i)``) and moves (``("edge", i)``) that collide."""
    bad = []
    for i, (p, n) in enumerate(zip(traj.positions, traj.normals)):
        view = scene if bead_offset is None else scene.prefix(bead_offset + i)
        if gamma(p, n, view, hull):
            bad.append(("node", i))
    skip = set(traj.breaks)
    for i in range(len(traj.positions) - 1):
        if i + 1 in skip:
            continue
        view = scene if bead_offset is None else scene.prefix(bead_offset + i)
        a = (traj.positions[i], traj.normals[i])
        b = (traj.positions[i + 1], traj.normals[i + 1])
        if swept_collision(a, b, view, hull):
            bad.append(("edge", i))
    return bad
