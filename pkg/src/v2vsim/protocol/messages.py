"""Handshake wire format.

Each message is a one-byte type tag followed by the canonical encoding of
its fields in declaration order:

    0x01 Hello            role, nonce, variant
    0x02 CertMsg          certificate
    0x03 KeyShare         ephemeral public, signature (empty for V0)
    0x04 DynClaim         pose, claimed_at, signature
    0x05 BeaconEcho       mac
    0x06 PufChallengeMsg  challenge_id, challenge_bits   (optical)
    0x07 PufResponseMsg   response
    0x08 Finished         mac

Carriers that never enter the transcript:

    0x10 ApplicationRecord  seq, ciphertext            (radio)
    0x11 Beacon             nonce                      (optical)
    0x20 flight             list of handshake messages (radio)
"""

from enum import Enum, IntEnum
from typing import ClassVar

from pydantic import BaseModel, ConfigDict, ValidationError

from v2vsim.crypto.encoding import (
    EncodingError,
    decode_fields,
    decode_float,
    decode_int,
    encode_fields,
    encode_float,
    encode_int,
)
from v2vsim.identity import Certificate
from v2vsim.puf import Challenge
from v2vsim.world.pose import Pose


class MalformedMessageError(Exception):
    pass


class Variant(IntEnum):
    V0_BASELINE = 0
    V1_BASIC = 1
    V2_INTERMEDIATE = 2
    V3_SOPHISTICATED = 3

    @classmethod
    def parse(cls, text: str) -> "Variant":
        text = text.strip().upper()
        for member in cls:
            if text in (member.name, member.name.split("_")[0]):
                return member
        raise ValueError(f"unknown variant {text!r}")


class Role(str, Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"

    @property
    def code(self) -> int:
        return 1 if self is Role.INITIATOR else 2

    @classmethod
    def from_code(cls, code: int) -> "Role":
        if code == 1:
            return cls.INITIATOR
        if code == 2:
            return cls.RESPONDER
        raise ValueError(f"unknown role code {code}")


class MessageType(IntEnum):
    HELLO = 0x01
    CERT = 0x02
    KEY_SHARE = 0x03
    DYN_CLAIM = 0x04
    BEACON_ECHO = 0x05
    PUF_CHALLENGE = 0x06
    PUF_RESPONSE = 0x07
    FINISHED = 0x08
    APPLICATION_DATA = 0x10
    BEACON = 0x11
    FLIGHT = 0x20


class WireMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    TYPE: ClassVar[MessageType]

    def fields(self) -> list[bytes]:
        raise NotImplementedError

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "WireMessage":
        raise NotImplementedError

    def encode(self) -> bytes:
        return bytes([self.TYPE]) + encode_fields(self.fields())

    @property
    def label(self) -> str:
        return type(self).__name__


class Hello(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.HELLO

    role: Role
    nonce: bytes
    variant: Variant

    def fields(self) -> list[bytes]:
        return [bytes([self.role.code]), self.nonce, bytes([int(self.variant)])]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "Hello":
        role, nonce, variant = _expect(fields, 3)
        if len(role) != 1 or len(variant) != 1 or len(nonce) != 16:
            raise MalformedMessageError("bad Hello field sizes")
        return cls(role=Role.from_code(role[0]), nonce=nonce, variant=Variant(variant[0]))


class CertMsg(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.CERT

    certificate: Certificate

    def fields(self) -> list[bytes]:
        return [self.certificate.to_bytes()]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "CertMsg":
        (cert,) = _expect(fields, 1)
        return cls(certificate=Certificate.from_bytes(cert))


class KeyShare(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.KEY_SHARE

    ephemeral_public: bytes
    signature: bytes = b""

    def fields(self) -> list[bytes]:
        return [self.ephemeral_public, self.signature]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "KeyShare":
        public, signature = _expect(fields, 2)
        return cls(ephemeral_public=public, signature=signature)


class DynClaim(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.DYN_CLAIM

    pose: Pose
    claimed_at: float
    signature: bytes = b""

    def claim_bytes(self) -> bytes:
        return encode_fields([self.pose.to_bytes(), encode_float(self.claimed_at)])

    def fields(self) -> list[bytes]:
        return [self.pose.to_bytes(), encode_float(self.claimed_at), self.signature]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "DynClaim":
        pose, claimed_at, signature = _expect(fields, 3)
        return cls(
            pose=Pose.from_bytes(pose),
            claimed_at=decode_float(claimed_at),
            signature=signature,
        )


class BeaconEcho(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.BEACON_ECHO

    mac: bytes

    def fields(self) -> list[bytes]:
        return [self.mac]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "BeaconEcho":
        (mac,) = _expect(fields, 1)
        return cls(mac=mac)


class PufChallengeMsg(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.PUF_CHALLENGE

    challenge_id: int
    challenge_bits: bytes

    def fields(self) -> list[bytes]:
        return [encode_int(self.challenge_id, 4), self.challenge_bits]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "PufChallengeMsg":
        cid, bits = _expect(fields, 2)
        return cls(challenge_id=decode_int(cid, 4), challenge_bits=bits)

    def challenge(self) -> Challenge:
        return Challenge(challenge_id=self.challenge_id, challenge_bits=self.challenge_bits)


class PufResponseMsg(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.PUF_RESPONSE

    response: bytes

    def fields(self) -> list[bytes]:
        return [self.response]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "PufResponseMsg":
        (response,) = _expect(fields, 1)
        return cls(response=response)


class Finished(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.FINISHED

    mac: bytes

    def fields(self) -> list[bytes]:
        return [self.mac]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "Finished":
        (mac,) = _expect(fields, 1)
        return cls(mac=mac)


class ApplicationRecord(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.APPLICATION_DATA

    seq: int
    ciphertext: bytes

    def fields(self) -> list[bytes]:
        return [encode_int(self.seq), self.ciphertext]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "ApplicationRecord":
        seq, ciphertext = _expect(fields, 2)
        return cls(seq=decode_int(seq), ciphertext=ciphertext)


class Beacon(WireMessage):
    TYPE: ClassVar[MessageType] = MessageType.BEACON

    nonce: bytes

    def fields(self) -> list[bytes]:
        return [self.nonce]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "Beacon":
        (nonce,) = _expect(fields, 1)
        return cls(nonce=nonce)


HandshakeMessage = (
    Hello
    | CertMsg
    | KeyShare
    | DynClaim
    | BeaconEcho
    | PufChallengeMsg
    | PufResponseMsg
    | Finished
)

HANDSHAKE_TYPES: dict[int, type[WireMessage]] = {
    cls.TYPE: cls
    for cls in (
        Hello,
        CertMsg,
        KeyShare,
        DynClaim,
        BeaconEcho,
        PufChallengeMsg,
        PufResponseMsg,
        Finished,
    )
}


def _expect(fields: list[bytes], count: int) -> list[bytes]:
    if len(fields) != count:
        raise MalformedMessageError(f"expected {count} fields, got {len(fields)}")
    return fields


def _decode(data: bytes, types: dict[int, type[WireMessage]]) -> WireMessage:
    if not data:
        raise MalformedMessageError("empty message")
    cls = types.get(data[0])
    if cls is None:
        raise MalformedMessageError(f"unexpected message tag 0x{data[0]:02x}")
    try:
        return cls.from_fields(decode_fields(data[1:]))
    except (EncodingError, ValidationError, ValueError, KeyError, TypeError) as exc:
        raise MalformedMessageError(f"bad {cls.__name__}: {exc}") from exc


def decode_message(data: bytes) -> WireMessage:
    return _decode(data, HANDSHAKE_TYPES)


def encode_flight(messages: list[WireMessage]) -> bytes:
    return bytes([MessageType.FLIGHT]) + encode_fields([m.encode() for m in messages])


def decode_radio(payload: bytes) -> list[WireMessage] | ApplicationRecord:
    """A radio payload is either a handshake flight or an application record."""
    if not payload:
        raise MalformedMessageError("empty radio payload")
    if payload[0] == MessageType.APPLICATION_DATA:
        record = _decode(payload, {MessageType.APPLICATION_DATA: ApplicationRecord})
        assert isinstance(record, ApplicationRecord)
        return record
    if payload[0] != MessageType.FLIGHT:
        raise MalformedMessageError(f"unexpected radio tag 0x{payload[0]:02x}")
    try:
        parts = decode_fields(payload[1:])
    except EncodingError as exc:
        raise MalformedMessageError(f"bad flight: {exc}") from exc
    if not parts:
        raise MalformedMessageError("empty flight")
    return [decode_message(part) for part in parts]


def decode_optical(payload: bytes) -> Beacon | PufChallengeMsg:
    message = _decode(
        payload,
        {MessageType.BEACON: Beacon, MessageType.PUF_CHALLENGE: PufChallengeMsg},
    )
    assert isinstance(message, (Beacon, PufChallengeMsg))
    return message


def describe_radio(payload: bytes) -> str:
    """Short label for traces: message names joined by '+', or 'data'."""
    try:
        decoded = decode_radio(payload)
    except MalformedMessageError:
        return "garbled"
    if isinstance(decoded, ApplicationRecord):
        return "data"
    return "+".join(m.label for m in decoded)
