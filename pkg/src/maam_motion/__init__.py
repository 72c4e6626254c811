"""Motion planning for five-axis parallel-kinematics material extrusion.

Waypoint toolpaths (position plus nozzle orientation) are turned into
machine-axis trajectories that avoid the C-axis singularity, keep the
print head clear of the platform and printed material, and extrude at a
rate the nozzle-tip speed can follow.
"""

from .collision import CollisionScene, HeadHull, default_head_hull, gamma, sample_variants, swept_collision
from .emitter import SpeedReport, emit_gcode, emit_report, parse_gcode
from .errors import (DegenerateSegment, Disconnected, EmptyColumn, HorizontalOrientation,
                     InvariantError, NoFeasibleOrientation, NoPath, ParseError, PlanningError,
                     SubdivisionLimit)
from .extrusion import ExtrusionParams, SpeedWindow, achievable_tip_speed, densify, extrusion_volume, speed_window
from .kinematics import (Branch, ConfigKind, IkSolution, MachineConfig, MachineCoords, Rotary, dual_of, fk,
                         ik_linear, ik_rotational, wound_c_distance)
from .pipeline import RunConfig, plan_toolpath, read_config, run_pipeline
from .planner import Graph, GraphNode, Trajectory, build_graph, finalize, prune_edges, shortest_trajectory
from .singularity import SegmentCase, break_extreme, find_segments, is_singular, process_segment
from .toolpath import Status, Toolpath, Waypoint, load_toolpaths, save_toolpaths, smooth_orientations

__version__ = "0.1.0"
