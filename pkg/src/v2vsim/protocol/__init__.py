from .handshake import accept, initiate, opening_actions, step, transcript_digest
from .messages import (
    ApplicationRecord,
    Beacon,
    BeaconEcho,
    CertMsg,
    DynClaim,
    Finished,
    Hello,
    KeyShare,
    MalformedMessageError,
    MessageType,
    PufChallengeMsg,
    PufResponseMsg,
    Role,
    Variant,
    WireMessage,
    decode_message,
    decode_optical,
    decode_radio,
    describe_radio,
    encode_flight,
)
from .session import (
    SessionDecryptError,
    SessionError,
    SessionStateError,
    session_recv,
    session_send,
)
from .state import (
    CHECKS_BY_VARIANT,
    AbortReason,
    Action,
    Awaiting,
    CameraResult,
    CameraSighting,
    EvaluatePuf,
    FireOptical,
    HandshakeContext,
    HandshakeSetupError,
    HandshakeState,
    InputEvent,
    LidarResult,
    MessageReceived,
    OpticalReceived,
    PeerBinding,
    Phase,
    PufEvaluated,
    RequestCamera,
    RequestLidar,
    SendRadio,
    SetTimer,
    TimerExpired,
    TimerName,
    TimingBudget,
)

__all__ = [
    "initiate",
    "accept",
    "opening_actions",
    "step",
    "transcript_digest",
    "session_send",
    "session_recv",
    "Variant",
    "Role",
    "MessageType",
    "WireMessage",
    "Hello",
    "CertMsg",
    "KeyShare",
    "DynClaim",
    "BeaconEcho",
    "Beacon",
    "PufChallengeMsg",
    "PufResponseMsg",
    "Finished",
    "ApplicationRecord",
    "decode_message",
    "decode_radio",
    "decode_optical",
    "describe_radio",
    "encode_flight",
    "Phase",
    "AbortReason",
    "CHECKS_BY_VARIANT",
    "Awaiting",
    "TimerName",
    "TimingBudget",
    "PeerBinding",
    "HandshakeContext",
    "HandshakeState",
    "Action",
    "SendRadio",
    "RequestCamera",
    "RequestLidar",
    "FireOptical",
    "EvaluatePuf",
    "SetTimer",
    "InputEvent",
    "MessageReceived",
    "CameraSighting",
    "CameraResult",
    "LidarResult",
    "OpticalReceived",
    "PufEvaluated",
    "TimerExpired",
    "MalformedMessageError",
    "HandshakeSetupError",
    "SessionError",
    "SessionStateError",
    "SessionDecryptError",
]
