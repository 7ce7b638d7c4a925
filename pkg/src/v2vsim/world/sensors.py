"""Camera, LIDAR and autocollimator models over the ground-truth world."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from v2vsim.config import DEFAULT_CONSTANTS, SimConstants
from v2vsim.identity import AttributeObservation, Brand, Color, StaticAttributes

from .pose import Pose, WorldState, angle_difference, line_of_sight, normalize_angle

NO_TARGET = None
PLATE_ALPHABET = "0123456789ABCDEFGHJKLMNPRSTUVWXYZ-"


class RangeBearing(BaseModel):
    model_config = ConfigDict(frozen=True)

    range: float = Field(..., gt=0, description="Distance in m")
    bearing: float = Field(..., description="Radians relative to observer heading")
    measured_at: float


class Alignment(BaseModel):
    aligned: bool
    delta: float = Field(..., description="Absolute angular difference in rad")

    def __bool__(self) -> bool:
        return self.aligned


def _other_member(rng: np.random.Generator, enum_cls, current):
    choices = [member for member in enum_cls if member is not current]
    return choices[int(rng.integers(len(choices)))]


def _corrupt_plate(rng: np.random.Generator, plate: str) -> str:
    position = int(rng.integers(len(plate)))
    replacement = plate[position]
    while replacement == plate[position]:
        replacement = PLATE_ALPHABET[int(rng.integers(len(PLATE_ALPHABET)))]
    return plate[:position] + replacement + plate[position + 1 :]


def camera_observe(
    world: WorldState,
    observer: str,
    target: str,
    attributes: StaticAttributes,
    rng: np.random.Generator,
    constants: SimConstants = DEFAULT_CONSTANTS,
) -> AttributeObservation:
    """Read the target's visible attributes.

    `attributes` is the target's physical appearance, which for a twin
    differs from whatever its certificate says.
    """
    observer_pose = world.pose(observer)
    distance = observer_pose.distance_to(world.pose(target))
    if distance > constants.camera_max_range or not line_of_sight(
        world, observer, target
    ):
        return AttributeObservation(observer_pose=observer_pose, observed_at=world.clock)

    plate, brand, color = attributes.appearance()
    if constants.p_confuse > 0:
        if rng.random() < constants.p_confuse:
            plate = _corrupt_plate(rng, plate)
        if rng.random() < constants.p_confuse:
            brand = _other_member(rng, Brand, brand)
        if rng.random() < constants.p_confuse:
            color = _other_member(rng, Color, color)
    return AttributeObservation(
        observed_plate=plate,
        observed_brand=brand,
        observed_color=color,
        observer_pose=observer_pose,
        observed_at=world.clock,
    )


def lidar_measure(
    world: WorldState,
    observer: str,
    target_region: Pose,
    rng: np.random.Generator,
    constants: SimConstants = DEFAULT_CONSTANTS,
) -> RangeBearing | None:
    subject = world.vehicle_near(
        target_region, constants.capture_radius, exclude=observer
    )
    if subject is None or not line_of_sight(world, observer, subject):
        return NO_TARGET
    observer_pose = world.pose(observer)
    target_pose = world.pose(subject)
    true_range = observer_pose.distance_to(target_pose)
    true_bearing = observer_pose.bearing_to(target_pose)
    noisy_range = true_range
    noisy_bearing = true_bearing
    if constants.sigma_range > 0:
        noisy_range += float(rng.normal(0.0, constants.sigma_range))
    if constants.sigma_bearing > 0:
        noisy_bearing += float(rng.normal(0.0, constants.sigma_bearing))
    return RangeBearing(
        range=max(noisy_range, 1e-9),
        bearing=normalize_angle(noisy_bearing),
        measured_at=world.clock,
    )


def bearing_alignment(
    incoming_bearing: float, expected_bearing: float, theta_tol: float
) -> Alignment:
    delta = abs(angle_difference(incoming_bearing, expected_bearing))
    return Alignment(aligned=delta <= theta_tol, delta=delta)


def autocollimator_check(
    world: WorldState,
    receiver: str,
    incoming_bearing: float,
    expected: float | Pose,
    constants: SimConstants = DEFAULT_CONSTANTS,
) -> Alignment:
    """Compare a pulse's arrival bearing with where its source should be.

    Both bearings are relative to the receiver's heading. A `Pose` for
    `expected` is the claimed source position; its bearing is taken from
    the receiver's pose in `world`.
    """
    if isinstance(expected, Pose):
        expected = geometric_bearing(world.pose(receiver), expected)
    return bearing_alignment(incoming_bearing, expected, constants.theta_tol)


def geometric_bearing(from_pose: Pose, to_pose: Pose) -> float:
    if from_pose.distance_to(to_pose) == 0:
        return 0.0
    return from_pose.bearing_to(to_pose)
