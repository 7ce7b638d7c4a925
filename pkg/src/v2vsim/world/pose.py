import math

from pydantic import BaseModel, ConfigDict, Field, field_validator

from v2vsim.crypto.encoding import decode_fields, decode_float, encode_fields, encode_float

TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Map any finite angle into [0, 2pi)."""
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    # fmod can round up to exactly 2pi for tiny negative inputs
    return 0.0 if wrapped >= TWO_PI else wrapped


def angle_difference(a: float, b: float) -> float:
    """Signed difference a - b in (-pi, pi]."""
    delta = normalize_angle(a - b)
    return delta - TWO_PI if delta > math.pi else delta


class Pose(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float = Field(..., allow_inf_nan=False, description="Easting in m")
    y: float = Field(..., allow_inf_nan=False, description="Northing in m")
    heading: float = Field(
        default=0.0, allow_inf_nan=False, description="Heading in rad, [0, 2pi)"
    )
    speed: float = Field(
        default=0.0, ge=0, allow_inf_nan=False, description="Speed in m/s"
    )

    @field_validator("heading")
    @classmethod
    def normalize_heading(cls, value: float) -> float:
        return normalize_angle(value)

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def bearing_to(self, other: "Pose") -> float:
        """Bearing of `other` relative to this pose's heading, in [0, 2pi)."""
        absolute = math.atan2(other.y - self.y, other.x - self.x)
        return normalize_angle(absolute - self.heading)

    def to_bytes(self) -> bytes:
        return encode_fields(
            [
                encode_float(self.x),
                encode_float(self.y),
                encode_float(self.heading),
                encode_float(self.speed),
            ]
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Pose":
        x, y, heading, speed = (decode_float(f) for f in decode_fields(data, expected=4))
        return cls(x=x, y=y, heading=heading, speed=speed)

    def short(self) -> str:
        return f"{self.x:.3f},{self.y:.3f},{self.heading:.6f},{self.speed:.3f}"


def extrapolate(pose: Pose, dt: float) -> Pose:
    """Constant-velocity prediction of a pose dt seconds later."""
    if dt == 0 or pose.speed == 0:
        return pose
    return Pose(
        x=pose.x + pose.speed * dt * math.cos(pose.heading),
        y=pose.y + pose.speed * dt * math.sin(pose.heading),
        heading=pose.heading,
        speed=pose.speed,
    )


class Segment(BaseModel):
    model_config = ConfigDict(frozen=True)

    ax: float
    ay: float
    bx: float
    by: float


def _orientation(px: float, py: float, qx: float, qy: float, rx: float, ry: float) -> int:
    value = (qy - py) * (rx - qx) - (qx - px) * (ry - qy)
    if value == 0:
        return 0
    return 1 if value > 0 else 2


def _on_segment(px: float, py: float, qx: float, qy: float, rx: float, ry: float) -> bool:
    return min(px, rx) <= qx <= max(px, rx) and min(py, ry) <= qy <= max(py, ry)


def segments_intersect(
    p1: tuple[float, float],
    p2: tuple[float, float],
    q1: tuple[float, float],
    q2: tuple[float, float],
) -> bool:
    o1 = _orientation(*p1, *p2, *q1)
    o2 = _orientation(*p1, *p2, *q2)
    o3 = _orientation(*q1, *q2, *p1)
    o4 = _orientation(*q1, *q2, *p2)
    if o1 != o2 and o3 != o4:
        return True
    # collinear touching cases
    if o1 == 0 and _on_segment(*p1, *q1, *p2):
        return True
    if o2 == 0 and _on_segment(*p1, *q2, *p2):
        return True
    if o3 == 0 and _on_segment(*q1, *p1, *q2):
        return True
    if o4 == 0 and _on_segment(*q1, *p2, *q2):
        return True
    return False


class WorldState(BaseModel):
    """Ground truth: every vehicle's pose, the clock and static obstructions."""

    model_config = ConfigDict(frozen=True)

    poses: dict[str, Pose]
    clock: float = 0.0
    obstructions: tuple[Segment, ...] = ()

    def pose(self, vehicle_id: str) -> Pose:
        try:
            return self.poses[vehicle_id]
        except KeyError:
            raise KeyError(f"unknown vehicle {vehicle_id!r}") from None

    def vehicle_near(
        self, region: Pose, radius: float, exclude: str | None = None
    ) -> str | None:
        """Nearest vehicle within radius of region; ties go to the smaller id."""
        best: tuple[float, str] | None = None
        for vehicle_id in sorted(self.poses):
            if vehicle_id == exclude:
                continue
            distance = self.poses[vehicle_id].distance_to(region)
            if distance <= radius and (best is None or distance < best[0]):
                best = (distance, vehicle_id)
        return None if best is None else best[1]


def advance(world: WorldState, dt: float) -> WorldState:
    if not dt > 0:
        raise ValueError(f"advance needs dt > 0, got {dt}")
    return WorldState(
        poses={vid: extrapolate(pose, dt) for vid, pose in world.poses.items()},
        clock=world.clock + dt,
        obstructions=world.obstructions,
    )


def line_of_sight(world: WorldState, a: str, b: str) -> bool:
    pa, pb = world.pose(a), world.pose(b)
    return segment_clear(world, pa, pb)


def segment_clear(world: WorldState, pa: Pose, pb: Pose) -> bool:
    return not any(
        segments_intersect((pa.x, pa.y), (pb.x, pb.y), (s.ax, s.ay), (s.bx, s.by))
        for s in world.obstructions
    )
