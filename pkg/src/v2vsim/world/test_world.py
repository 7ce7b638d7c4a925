import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from v2vsim.config import DEFAULT_CONSTANTS
from v2vsim.identity import Brand, Color, StaticAttributes
from v2vsim.world.pose import (
    Pose,
    Segment,
    WorldState,
    advance,
    angle_difference,
    extrapolate,
    line_of_sight,
    normalize_angle,
)
from v2vsim.world.sensors import (
    autocollimator_check,
    bearing_alignment,
    camera_observe,
    geometric_bearing,
    lidar_measure,
)

LOOKS = StaticAttributes(
    vin="WVWZZZ1JZXW000001", license_plate="V2-2002", brand=Brand.VOLKSWAGEN, color=Color.BLUE
)
NOISELESS = DEFAULT_CONSTANTS.with_overrides({"sigma_range": 0.0, "sigma_bearing": 0.0})


def _world(**poses: Pose) -> WorldState:
    return WorldState(poses=poses)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_normalized_angles_stay_in_range(angle) -> None:
    wrapped = normalize_angle(angle)
    assert 0.0 <= wrapped < 2 * math.pi


def test_angle_difference_wraps() -> None:
    assert angle_difference(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)
    assert angle_difference(2 * math.pi - 0.1, 0.1) == pytest.approx(-0.2)


def test_extrapolate_constant_velocity() -> None:
    pose = Pose(x=0, y=0, heading=math.pi / 2, speed=10)
    later = extrapolate(pose, 0.5)
    assert later.x == pytest.approx(0.0, abs=1e-9)
    assert later.y == pytest.approx(5.0)
    assert extrapolate(Pose(x=1, y=1), 5.0) == Pose(x=1, y=1)


def test_advance_moves_clock_and_vehicles() -> None:
    world = _world(v1=Pose(x=0, y=0, speed=20))
    later = advance(world, 0.25)
    assert later.clock == pytest.approx(0.25)
    assert later.pose("v1").x == pytest.approx(5.0)
    with pytest.raises(ValueError):
        advance(world, 0.0)


def test_vehicle_near_prefers_nearest_then_smaller_id() -> None:
    world = _world(b=Pose(x=1, y=0), a=Pose(x=-1, y=0), c=Pose(x=0.5, y=0))
    assert world.vehicle_near(Pose(x=0, y=0), 2.0) == "c"
    world = _world(b=Pose(x=1, y=0), a=Pose(x=-1, y=0))
    assert world.vehicle_near(Pose(x=0, y=0), 2.0) == "a"
    assert world.vehicle_near(Pose(x=50, y=0), 2.0) is None


def test_obstruction_blocks_line_of_sight() -> None:
    wall = Segment(ax=10, ay=-5, bx=10, by=5)
    world = WorldState(poses={"v1": Pose(x=0, y=0), "v2": Pose(x=20, y=0)}, obstructions=(wall,))
    assert not line_of_sight(world, "v1", "v2")
    open_road = WorldState(poses=world.poses)
    assert line_of_sight(open_road, "v1", "v2")


def test_camera_reads_within_range_only(rng) -> None:
    near = _world(v1=Pose(x=0, y=0), v2=Pose(x=30, y=0))
    seen = camera_observe(near, "v1", "v2", LOOKS, rng)
    assert seen.observed_plate == "V2-2002"
    far = _world(v1=Pose(x=0, y=0), v2=Pose(x=300, y=0))
    assert camera_observe(far, "v1", "v2", LOOKS, rng).is_empty()


def test_camera_confusion_changes_every_field() -> None:
    confused = DEFAULT_CONSTANTS.with_overrides({"p_confuse": 1.0})
    world = _world(v1=Pose(x=0, y=0), v2=Pose(x=30, y=0))
    seen = camera_observe(world, "v1", "v2", LOOKS, np.random.default_rng(0), confused)
    assert seen.observed_plate != LOOKS.license_plate
    assert len(seen.observed_plate) == len(LOOKS.license_plate)
    assert seen.observed_brand is not LOOKS.brand
    assert seen.observed_color is not LOOKS.color


def test_lidar_measures_the_vehicle_in_the_region(rng) -> None:
    world = _world(v1=Pose(x=0, y=0), v2=Pose(x=30, y=40))
    measurement = lidar_measure(world, "v1", Pose(x=30.5, y=40), rng, NOISELESS)
    assert measurement.range == pytest.approx(50.0)
    assert measurement.bearing == pytest.approx(math.atan2(40, 30))
    assert lidar_measure(world, "v1", Pose(x=-30, y=0), rng, NOISELESS) is None


def test_lidar_noise_is_seeded() -> None:
    world = _world(v1=Pose(x=0, y=0), v2=Pose(x=30, y=0))
    first = lidar_measure(world, "v1", Pose(x=30, y=0), np.random.default_rng(9))
    second = lidar_measure(world, "v1", Pose(x=30, y=0), np.random.default_rng(9))
    assert first == second
    assert abs(first.range - 30.0) < 1.0


def test_bearing_alignment_tolerance() -> None:
    assert bearing_alignment(0.005, 2 * math.pi - 0.004, 0.01)
    assert not bearing_alignment(0.02, 0.0, 0.01)
    world = _world(v1=Pose(x=0, y=0))
    check = autocollimator_check(world, "v1", 1.0, 1.0)
    assert check.aligned and check.delta == 0.0


def test_autocollimator_aims_from_the_receivers_pose() -> None:
    source = Pose(x=20, y=0)
    facing_east = _world(v1=Pose(x=0, y=0))
    facing_north = _world(v1=Pose(x=0, y=0, heading=math.pi / 2))
    assert autocollimator_check(facing_east, "v1", 0.0, source)
    assert not autocollimator_check(facing_north, "v1", 0.0, source)
    assert autocollimator_check(facing_north, "v1", 3 * math.pi / 2, source)
    moved = _world(v1=Pose(x=20, y=-20))
    check = autocollimator_check(moved, "v1", 0.0, source)
    assert not check.aligned
    assert check.delta == pytest.approx(math.pi / 2)


def test_geometric_bearing_of_coincident_poses() -> None:
    assert geometric_bearing(Pose(x=1, y=1), Pose(x=1, y=1)) == 0.0
    assert geometric_bearing(Pose(x=0, y=0, heading=math.pi), Pose(x=-5, y=0)) == pytest.approx(0.0)


def test_lidar_noise_matches_its_sigma() -> None:
    world = _world(v1=Pose(x=0, y=0), v2=Pose(x=0, y=30))
    rng = np.random.default_rng(77)
    range_errors, bearing_errors = [], []
    for _ in range(10_000):
        measurement = lidar_measure(world, "v1", Pose(x=0, y=30), rng)
        range_errors.append(measurement.range - 30.0)
        bearing_errors.append(angle_difference(measurement.bearing, math.pi / 2))
    assert np.std(range_errors) == pytest.approx(DEFAULT_CONSTANTS.sigma_range, rel=0.05)
    assert np.std(bearing_errors) == pytest.approx(DEFAULT_CONSTANTS.sigma_bearing, rel=0.05)
    assert abs(np.mean(range_errors)) < 0.01


def test_camera_confusion_rate() -> None:
    confusing = DEFAULT_CONSTANTS.with_overrides({"p_confuse": 0.1})
    world = _world(v1=Pose(x=0, y=0), v2=Pose(x=30, y=0))
    rng = np.random.default_rng(31)
    trials = 10_000
    wrong_plate = wrong_brand = wrong_color = 0
    for _ in range(trials):
        seen = camera_observe(world, "v1", "v2", LOOKS, rng, confusing)
        wrong_plate += seen.observed_plate != LOOKS.license_plate
        wrong_brand += seen.observed_brand is not LOOKS.brand
        wrong_color += seen.observed_color is not LOOKS.color
    for wrong in (wrong_plate, wrong_brand, wrong_color):
        assert wrong / trials == pytest.approx(0.1, abs=0.015)


@given(
    st.floats(min_value=0.01, max_value=10.0),
    st.floats(min_value=0.0, max_value=2 * math.pi, exclude_max=True),
    st.floats(min_value=0.0, max_value=40.0),
)
def test_two_half_steps_equal_one_step(dt, heading, speed) -> None:
    world = _world(v1=Pose(x=3.0, y=-2.0, heading=heading, speed=speed), v2=Pose(x=10, y=10))
    halves = advance(advance(world, dt / 2), dt / 2)
    whole = advance(world, dt)
    assert halves.clock == pytest.approx(whole.clock)
    for vid in whole.poses:
        assert halves.pose(vid).x == pytest.approx(whole.pose(vid).x, abs=1e-9)
        assert halves.pose(vid).y == pytest.approx(whole.pose(vid).y, abs=1e-9)
        assert halves.pose(vid).heading == whole.pose(vid).heading


def _crosses(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> bool:
    # solve a + t (b - a) = c + u (d - c) for generic segments
    matrix = np.column_stack([b - a, c - d])
    t, u = np.linalg.solve(matrix, c - a)
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def test_line_of_sight_agrees_with_a_parametric_oracle() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(500):
        points = rng.uniform(-50.0, 50.0, size=(2 + 2 * 3, 2))
        v1, v2 = points[0], points[1]
        walls = tuple(
            Segment(ax=p[0], ay=p[1], bx=q[0], by=q[1])
            for p, q in zip(points[2::2], points[3::2])
        )
        world = WorldState(
            poses={"v1": Pose(x=v1[0], y=v1[1]), "v2": Pose(x=v2[0], y=v2[1])},
            obstructions=walls,
        )
        blocked = any(
            _crosses(v1, v2, np.array([w.ax, w.ay]), np.array([w.bx, w.by])) for w in walls
        )
        assert line_of_sight(world, "v1", "v2") is not blocked
