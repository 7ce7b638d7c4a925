from collections.abc import Callable
from enum import Enum, IntEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from v2vsim.config import DEFAULT_CONSTANTS, SimConstants
from v2vsim.crypto import CryptoProvider, KeyPair, SessionKeys
from v2vsim.identity import AttributeObservation, Certificate
from v2vsim.puf import Challenge, CrpRecord, CrpVerifier
from v2vsim.world.pose import Pose
from v2vsim.world.sensors import RangeBearing

from .messages import DynClaim, Role, Variant


class HandshakeSetupError(Exception):
    pass


class Phase(IntEnum):
    IDLE = 0
    HELLO_SENT = 1
    KEY_EXCHANGE = 2
    PEER_CHECK = 3
    OPTICAL_EXCHANGE = 4
    FINISHING = 5
    ESTABLISHED = 6
    ABORTED = 7

    @property
    def terminal(self) -> bool:
        return self in (Phase.ESTABLISHED, Phase.ABORTED)


class AbortReason(str, Enum):
    BAD_CERT = "BAD_CERT"
    CERT_ATTR_MISMATCH = "CERT_ATTR_MISMATCH"
    BAD_SIGNATURE = "BAD_SIGNATURE"
    DYNAMIC_COUPLING_FAILED = "DYNAMIC_COUPLING_FAILED"
    BEACON_TIMEOUT = "BEACON_TIMEOUT"
    ALIGNMENT_FAILED = "ALIGNMENT_FAILED"
    PUF_VERIFY_FAILED = "PUF_VERIFY_FAILED"
    TIMING_VIOLATION = "TIMING_VIOLATION"
    FINISHED_MISMATCH = "FINISHED_MISMATCH"
    MALFORMED = "MALFORMED"
    HANDSHAKE_TIMEOUT = "HANDSHAKE_TIMEOUT"


_BASE_CHECKS = frozenset(
    {AbortReason.FINISHED_MISMATCH, AbortReason.MALFORMED, AbortReason.HANDSHAKE_TIMEOUT}
)
_V1_CHECKS = _BASE_CHECKS | {
    AbortReason.BAD_CERT,
    AbortReason.BAD_SIGNATURE,
    AbortReason.CERT_ATTR_MISMATCH,
}
_V2_CHECKS = _V1_CHECKS | {
    AbortReason.DYNAMIC_COUPLING_FAILED,
    AbortReason.BEACON_TIMEOUT,
    AbortReason.ALIGNMENT_FAILED,
}
_V3_CHECKS = _V2_CHECKS | {AbortReason.PUF_VERIFY_FAILED, AbortReason.TIMING_VIOLATION}

CHECKS_BY_VARIANT: dict[Variant, frozenset[AbortReason]] = {
    Variant.V0_BASELINE: _BASE_CHECKS,
    Variant.V1_BASIC: _V1_CHECKS,
    Variant.V2_INTERMEDIATE: _V2_CHECKS,
    Variant.V3_SOPHISTICATED: _V3_CHECKS,
}


class Awaiting(str, Enum):
    HELLO = "hello"
    PEER_FLIGHT = "peer_flight"
    CAMERA = "camera"
    LIDAR_CLAIM = "lidar_claim"
    LIDAR_CHALLENGE = "lidar_challenge"
    BEACON_ECHO = "beacon_echo"
    PUF_RESPONSE = "puf_response"
    PEER_BEACON = "peer_beacon"
    PEER_CHALLENGE = "peer_challenge"
    PUF_EVALUATION = "puf_evaluation"
    FINISHED = "finished"
    NOTHING = "nothing"


class TimerName(str, Enum):
    HANDSHAKE = "handshake"
    BEACON = "beacon"


class TimingBudget(BaseModel):
    """Deadlines for the optical round trips of one verification."""

    model_config = ConfigDict(frozen=True)

    tau_puf: float = Field(..., description="Allowed PUF round trip in s")
    beacon_window: float = Field(..., description="Allowed beacon round trip in s")
    d_est: float = Field(..., description="LIDAR-estimated distance in m")

    @classmethod
    def from_estimate(
        cls, d_est: float, constants: SimConstants = DEFAULT_CONSTANTS
    ) -> "TimingBudget":
        return cls(
            tau_puf=2.0 * d_est / constants.c_sim
            + constants.puf_response_latency
            + constants.puf_slack,
            beacon_window=constants.beacon_window,
            d_est=d_est,
        )


class PeerBinding(BaseModel):
    """Who the accepted session is really with, along three axes."""

    model_config = ConfigDict(frozen=True)

    identity_party: str = Field(..., description="Owner of the accepted identity")
    physical_party: str = Field(..., description="Vehicle verified by sensors")
    radio_party: str = Field(..., description="Vehicle that sent the peer key share")

    @property
    def consistent(self) -> bool:
        return self.identity_party == self.physical_party == self.radio_party


# Output actions


class SendRadio(BaseModel):
    model_config = ConfigDict(frozen=True)

    payload: bytes
    label: str


class RequestCamera(BaseModel):
    """Observe the vehicle at `at`, or scan every visible vehicle if absent."""

    model_config = ConfigDict(frozen=True)

    at: Pose | None = None


class RequestLidar(BaseModel):
    model_config = ConfigDict(frozen=True)

    at: Pose
    purpose: Awaiting


class FireOptical(BaseModel):
    model_config = ConfigDict(frozen=True)

    at: Pose
    payload: bytes
    label: str


class EvaluatePuf(BaseModel):
    model_config = ConfigDict(frozen=True)

    challenge: Challenge


class SetTimer(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: TimerName
    deadline: float


Action = SendRadio | RequestCamera | RequestLidar | FireOptical | EvaluatePuf | SetTimer


# Input events


class MessageReceived(BaseModel):
    model_config = ConfigDict(frozen=True)

    payload: bytes
    at: float
    origin: str = Field(..., description="Ground-truth transmitting vehicle")


class CameraSighting(BaseModel):
    model_config = ConfigDict(frozen=True)

    subject: str | None
    observation: AttributeObservation


class CameraResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    sightings: tuple[CameraSighting, ...]
    at: float


class LidarResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    measurement: RangeBearing | None
    subject: str | None = Field(default=None, description="Ground-truth annotation")
    at: float


class OpticalReceived(BaseModel):
    model_config = ConfigDict(frozen=True)

    payload: bytes
    arrival_bearing: float
    at: float


class PufEvaluated(BaseModel):
    model_config = ConfigDict(frozen=True)

    response: bytes
    at: float


class TimerExpired(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: TimerName
    at: float


InputEvent = (
    MessageReceived
    | CameraResult
    | LidarResult
    | OpticalReceived
    | PufEvaluated
    | TimerExpired
)


class HandshakeContext(BaseModel):
    """Everything a party brings into a handshake."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    party_id: str
    provider: CryptoProvider
    rng: np.random.Generator
    ca_public: bytes
    signing_keys: KeyPair | None = None
    certificate: Certificate | None = None
    pose_at: Callable[[float], Pose]
    target_pose: Pose | None = Field(
        default=None, description="Initiator's sighting of its intended peer"
    )
    target_seen_at: float = 0.0
    crp_verifier: CrpVerifier = Field(default_factory=CrpVerifier)
    constants: SimConstants = DEFAULT_CONSTANTS
    trusting: bool = Field(
        default=False, description="Skip peer checks (adversary-run engines)"
    )


class HandshakeState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    variant: Variant
    role: Role
    context: HandshakeContext
    peer_claimed_id: str
    phase: Phase = Phase.IDLE
    awaiting: Awaiting = Awaiting.HELLO
    abort_reason: AbortReason | None = None
    abort_detail: str = ""
    started_at: float = 0.0
    established_at: float | None = None

    transcript: bytes = b""
    messages: list[str] = Field(default_factory=list)
    my_nonce: bytes | None = None
    peer_nonce: bytes | None = None
    ephemeral: KeyPair | None = None
    peer_ephemeral: bytes | None = None
    shared: bytes | None = Field(default=None, repr=False)
    my_handshake_keys: SessionKeys | None = None
    peer_handshake_keys: SessionKeys | None = None
    session_keys: SessionKeys | None = None

    flight_position: int = 0
    peer_certificate: Certificate | None = None
    peer_claim: DynClaim | None = None
    peer_key_origin: str | None = None
    physical_subject: str | None = None
    verified_peer: bool = False
    answered_peer: bool = False

    beacon_nonce: bytes | None = None
    beacon_sent_at: float | None = None
    beacon_deadline: float | None = None
    puf_crp: CrpRecord | None = None
    puf_emitted_at: float | None = None
    puf_budget: TimingBudget | None = None
    pending_challenge: Challenge | None = None

    send_seq: int = 0
    recv_seq: int = 0
    log: list[tuple[str, dict[str, str]]] = Field(default_factory=list)

    @property
    def terminal(self) -> bool:
        return self.phase.terminal

    def advance_phase(self, phase: Phase) -> None:
        if phase < self.phase:
            raise HandshakeSetupError(
                f"phase regression {self.phase.name} -> {phase.name}"
            )
        self.phase = phase

    def note(self, event: str, **detail: object) -> None:
        """Queue a PROTO trace entry; the driver drains `log` after each step."""
        self.log.append((event, {k: _fmt(v) for k, v in detail.items()}))


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return f"{value:.9f}"
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, Enum):
        return str(value.value) if not isinstance(value, IntEnum) else value.name
    return str(value)
