"""Exception types shared across the planner subsystems.

Every error that can surface through the CLI carries a ``module`` tag (the
subsystem name used in machine-readable error output) and an optional
``details`` mapping with things like the failing point index or file path.
"""

from __future__ import annotations


class PlanningError(Exception):
    """Base class for all terracover errors."""

    module = "cli_io"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = dict(details)

    def to_json_dict(self) -> dict:
        out = {"module": self.module, "error": self.message}
        out.update(self.details)
        return out


class TerrainDataError(PlanningError):
    """Bad or insufficient terrain sample data."""

    module = "terrain_model"


class OutsideTerrainExtent(PlanningError):
    """A query point fell outside the gridded terrain bounds."""

    module = "terrain_model"


class GeometryError(PlanningError):
    """Invalid field contour or an offset that destroys it."""

    module = "field_geometry"


class LaneExitsExtent(PlanningError):
    """A probe or candidate point left the terrain extent while planning.

    Consumed by adjacent_lane / cascade_lanes as a stop-or-skip signal, not
    necessarily fatal for the whole run.
    """

    module = "lane_planner"


class PlanningFailure(PlanningError):
    """The pipeline produced no converged lane at all."""

    module = "lane_planner"


class MetricsError(PlanningError):
    """Invalid input to a coverage metric."""

    module = "coverage_metrics"


class ValidationError(PlanningError):
    """Bad run configuration or malformed input file content."""

    module = "cli_io"
