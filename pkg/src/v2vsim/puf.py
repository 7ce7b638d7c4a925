"""Functional model of an optical PUF.

A device is a keyed pseudorandom function whose key never leaves the
device object: there is no accessor, no serializer, and pickling fails.
Verifiers hold CA-certified response digests and consume each one once.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from v2vsim.crypto import CryptoProvider, default_provider
from v2vsim.crypto.encoding import decode_fields, decode_int, encode_fields, encode_int
from v2vsim.logger import get_logger

CHALLENGE_SIZE = 32
RESPONSE_SIZE = 32

logger = get_logger(__name__)


class PufError(Exception):
    pass


class Challenge(BaseModel):
    model_config = ConfigDict(frozen=True)

    challenge_id: int = Field(..., ge=0, lt=2**32)
    challenge_bits: bytes

    @field_validator("challenge_bits")
    @classmethod
    def check_size(cls, value: bytes) -> bytes:
        if len(value) != CHALLENGE_SIZE:
            raise ValueError(f"challenges are {CHALLENGE_SIZE} bytes")
        return value

    def to_bytes(self) -> bytes:
        return encode_fields([encode_int(self.challenge_id, 4), self.challenge_bits])

    @classmethod
    def from_bytes(cls, data: bytes) -> "Challenge":
        cid, bits = decode_fields(data, expected=2)
        return cls(challenge_id=decode_int(cid, 4), challenge_bits=bits)


class CrpRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    challenge: Challenge
    response_digest: bytes

    def to_bytes(self) -> bytes:
        return encode_fields([self.challenge.to_bytes(), self.response_digest])

    @classmethod
    def from_bytes(cls, data: bytes) -> "CrpRecord":
        challenge, digest = decode_fields(data, expected=2)
        return cls(challenge=Challenge.from_bytes(challenge), response_digest=digest)


class PufDevice:
    __slots__ = ("owner", "response_latency", "_secret", "_provider")

    def __init__(
        self,
        owner: str,
        secret: bytes,
        response_latency: float = 100e-6,
        provider: CryptoProvider | None = None,
    ):
        if len(secret) != 32:
            raise PufError("device secrets are 32 bytes")
        self.owner = owner
        self.response_latency = response_latency
        self._secret = secret
        self._provider = provider or default_provider()

    @classmethod
    def manufacture(
        cls,
        owner: str,
        rng: np.random.Generator,
        response_latency: float = 100e-6,
        provider: CryptoProvider | None = None,
    ) -> "PufDevice":
        return cls(owner, rng.bytes(32), response_latency, provider)

    def _evaluate(self, challenge_bits: bytes) -> bytes:
        return self._provider.mac(self._secret, challenge_bits)

    def __reduce__(self):
        raise PufError("PUF devices cannot be serialized")

    def __repr__(self) -> str:
        return f"PufDevice(owner={self.owner!r})"


def puf_respond(device: PufDevice, challenge: Challenge) -> bytes:
    """Device response; the caller schedules it response_latency later."""
    return device._evaluate(challenge.challenge_bits)


def enroll_crps(
    device: PufDevice,
    count: int,
    rng: np.random.Generator,
    provider: CryptoProvider | None = None,
) -> list[CrpRecord]:
    if count < 1:
        raise PufError(f"enrollment needs count >= 1, got {count}")
    provider = provider or default_provider()
    ids: set[int] = set()
    records = []
    while len(records) < count:
        cid = int(rng.integers(0, 2**32, dtype=np.uint64))
        if cid in ids:
            continue
        ids.add(cid)
        challenge = Challenge(challenge_id=cid, challenge_bits=rng.bytes(CHALLENGE_SIZE))
        digest = provider.hash(puf_respond(device, challenge))
        records.append(CrpRecord(challenge=challenge, response_digest=digest))
    logger.debug("enrolled %d CRPs for %s", count, device.owner)
    return records


class CrpVerifier(BaseModel):
    """One verifier's single-use ledger of consumed CRPs."""

    consumed: set[tuple[int, bytes]] = Field(default_factory=set)
    last_rejection: str | None = None
    provider: CryptoProvider = Field(default_factory=default_provider)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def is_consumed(self, crp: CrpRecord) -> bool:
        return (crp.challenge.challenge_id, crp.response_digest) in self.consumed

    def verify_response(self, crp: CrpRecord, response: bytes) -> bool:
        key = (crp.challenge.challenge_id, crp.response_digest)
        if key in self.consumed:
            self.last_rejection = "REUSED"
            logger.warning("CRP %d presented again", crp.challenge.challenge_id)
            return False
        self.consumed.add(key)
        if self.provider.hash(response) != crp.response_digest:
            self.last_rejection = "WRONG_RESPONSE"
            return False
        self.last_rejection = None
        return True


def verify_response(verifier: CrpVerifier, crp: CrpRecord, response: bytes) -> bool:
    return verifier.verify_response(crp, response)


def fractional_hamming_distance(a: bytes, b: bytes) -> float:
    if len(a) != len(b):
        raise ValueError("responses must have equal length")
    bits = np.unpackbits(
        np.frombuffer(a, dtype=np.uint8) ^ np.frombuffer(b, dtype=np.uint8)
    )
    return float(bits.mean())
