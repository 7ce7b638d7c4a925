"""Radio and optical transports.

Radio is a broadcast medium handed to a mediator (the adversary controller
in a simulation) before anything is delivered. Optics are point-to-point:
a pulse reaches at most the one vehicle in the beam, and its origin is
stamped by the channel from ground truth.
"""

import hashlib
from enum import Enum
from typing import Protocol

from pydantic import BaseModel, ConfigDict

from v2vsim.config import DEFAULT_CONSTANTS, SimConstants
from v2vsim.logger import get_logger
from v2vsim.world.pose import Pose, WorldState, line_of_sight

logger = get_logger(__name__)

_EMISSION = object()


class OpticalForgeryError(Exception):
    pass


def payload_digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()[:16]


class RadioFrame(BaseModel):
    model_config = ConfigDict(frozen=True)

    claimed_sender: str
    addressee: str
    payload: bytes
    sent_at: float

    def digest(self) -> str:
        return payload_digest(self.payload)


class RadioDelivery(BaseModel):
    model_config = ConfigDict(frozen=True)

    receiver: str
    frame: RadioFrame
    arrive_at: float
    origin: str
    injected: bool = False


class RadioMediator(Protocol):
    def mediate(
        self, channel: "RadioChannel", world: WorldState, origin: str, frame: RadioFrame
    ) -> list[RadioDelivery]: ...


class RadioChannel:
    def __init__(
        self,
        mediator: RadioMediator | None = None,
        constants: SimConstants = DEFAULT_CONSTANTS,
    ):
        self.constants = constants
        self.mediator: RadioMediator = mediator or BroadcastMediator()

    def in_range(self, world: WorldState, a: str, b: str) -> bool:
        return world.pose(a).distance_to(world.pose(b)) <= self.constants.radio_range

    def receivers(self, world: WorldState, origin: str) -> list[str]:
        return [
            vid
            for vid in sorted(world.poses)
            if vid != origin and self.in_range(world, origin, vid)
        ]

    def arrival_time(
        self, world: WorldState, origin: str, receiver: str, at: float
    ) -> float:
        distance = world.pose(origin).distance_to(world.pose(receiver))
        return at + self.constants.radio_latency + distance / self.constants.c_sim

    def send(
        self, world: WorldState, origin: str, frame: RadioFrame
    ) -> list[RadioDelivery]:
        """radio_send: the mediator decides what, if anything, is delivered."""
        deliveries = self.mediator.mediate(self, world, origin, frame)
        logger.debug(
            "radio %s -> %s (%d deliveries)",
            frame.claimed_sender,
            frame.addressee,
            len(deliveries),
        )
        return deliveries


class BroadcastMediator:
    """Delivery to everyone in range: the passive-adversary radio."""

    def mediate(
        self, channel: RadioChannel, world: WorldState, origin: str, frame: RadioFrame
    ) -> list[RadioDelivery]:
        return [
            RadioDelivery(
                receiver=receiver,
                frame=frame,
                arrive_at=channel.arrival_time(world, origin, receiver, frame.sent_at),
                origin=origin,
            )
            for receiver in channel.receivers(world, origin)
        ]


class OpticalStatus(str, Enum):
    SCHEDULED = "SCHEDULED"
    BEAM_MISS = "BEAM_MISS"
    NO_LOS = "NO_LOS"


class OpticalPulse:
    """A laser pulse as it physically left its emitter.

    Only OpticalChannel can build one; instances are immutable and cannot
    be copied, so the origin pose always reflects a real emission.
    """

    __slots__ = ("emitter", "true_origin_pose", "aimed_at", "payload", "emitted_at")

    def __init__(
        self,
        *,
        true_origin_pose: Pose,
        aimed_at: Pose,
        payload: bytes,
        emitted_at: float,
        emitter: str,
        _token: object = None,
    ):
        if _token is not _EMISSION:
            raise OpticalForgeryError("optical pulses are created by emission only")
        object.__setattr__(self, "emitter", emitter)
        object.__setattr__(self, "true_origin_pose", true_origin_pose)
        object.__setattr__(self, "aimed_at", aimed_at)
        object.__setattr__(self, "payload", payload)
        object.__setattr__(self, "emitted_at", emitted_at)

    def __setattr__(self, name, value):
        raise OpticalForgeryError("optical pulses are immutable")

    def __delattr__(self, name):
        raise OpticalForgeryError("optical pulses are immutable")

    def __copy__(self):
        raise OpticalForgeryError("optical pulses cannot be copied")

    def __deepcopy__(self, memo):
        raise OpticalForgeryError("optical pulses cannot be copied")

    def __reduce__(self):
        raise OpticalForgeryError("optical pulses cannot be serialized")


class OpticalReceipt(BaseModel):
    model_config = ConfigDict(frozen=True)

    payload: bytes
    arrival_bearing: float
    arrived_at: float


class OpticalDelivery(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    receiver: str
    pulse: OpticalPulse
    receipt: OpticalReceipt


class OpticalChannel:
    def __init__(self, constants: SimConstants = DEFAULT_CONSTANTS):
        self.constants = constants

    def send(
        self,
        world: WorldState,
        emitter: str,
        aimed_at: Pose,
        payload: bytes,
        emitted_at: float | None = None,
    ) -> tuple[OpticalStatus, OpticalDelivery | None]:
        """optical_send: deliver to the single vehicle in the beam, if any."""
        origin = world.pose(emitter)
        emitted_at = world.clock if emitted_at is None else emitted_at
        target = world.vehicle_near(
            aimed_at, self.constants.beam_radius, exclude=emitter
        )
        if target is None:
            return OpticalStatus.BEAM_MISS, None
        if not line_of_sight(world, emitter, target):
            return OpticalStatus.NO_LOS, None
        pulse = OpticalPulse(
            true_origin_pose=origin,
            aimed_at=aimed_at,
            payload=payload,
            emitted_at=emitted_at,
            emitter=emitter,
            _token=_EMISSION,
        )
        target_pose = world.pose(target)
        receipt = OpticalReceipt(
            payload=payload,
            arrival_bearing=target_pose.bearing_to(origin),
            arrived_at=emitted_at
            + origin.distance_to(target_pose) / self.constants.c_sim,
        )
        return OpticalStatus.SCHEDULED, OpticalDelivery(
            receiver=target, pulse=pulse, receipt=receipt
        )
