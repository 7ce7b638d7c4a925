# Sensors import identity, which needs Pose from here; import them from
# v2vsim.world.sensors directly.
from .pose import (
    Pose,
    Segment,
    WorldState,
    advance,
    angle_difference,
    extrapolate,
    line_of_sight,
    normalize_angle,
)

__all__ = [
    "Pose",
    "Segment",
    "WorldState",
    "advance",
    "extrapolate",
    "line_of_sight",
    "normalize_angle",
    "angle_difference",
]
