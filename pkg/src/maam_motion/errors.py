"""Exception types shared across the planner modules."""


class PlanningError(Exception):
    """Base class for every error raised by maam_motion."""


class InvariantError(PlanningError, ValueError):
    """A value violates a documented invariant (bad normal, duplicate point, ...)."""


class ParseError(PlanningError, ValueError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class HorizontalOrientation(PlanningError, ValueError):
    """Orientation with n_z <= 0 where the singular-region test is undefined."""


class DegenerateSegment(PlanningError, ValueError):
    """Two consecutive waypoints share a position."""


class SubdivisionLimit(PlanningError):
    """A segment needed more splits than allowed during densification."""


class NoFeasibleOrientation(PlanningError):
    def __init__(self, waypoint_index=None, message="no collision-free orientation found"):
        self.waypoint_index = waypoint_index
        super().__init__(message if waypoint_index is None else f"waypoint {waypoint_index}: {message}")


class EmptyColumn(PlanningError):
    def __init__(self, waypoint_index):
        self.waypoint_index = waypoint_index
        super().__init__(f"waypoint {waypoint_index} has no feasible graph node")


class Disconnected(PlanningError):
    """Edge pruning removed every edge between column ``waypoint_index`` and the next."""

    def __init__(self, waypoint_index):
        self.waypoint_index = waypoint_index
        super().__init__(f"no collision-free edge leaves waypoint {waypoint_index}")


class NoPath(PlanningError):
    pass
