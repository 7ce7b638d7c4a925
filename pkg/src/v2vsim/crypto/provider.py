from abc import ABC, abstractmethod
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .encoding import decode_fields, decode_str, encode_fields, encode_str

KEY_SIZE = 32
NONCE_SIZE = 16
AEAD_NONCE_SIZE = 12

KdfLabel = Literal["v2v-initiator", "v2v-responder", "v2v-finished"]
KDF_LABELS: tuple[str, ...] = ("v2v-initiator", "v2v-responder", "v2v-finished")

Signature = bytes


class CryptoError(Exception):
    pass


class InvalidGroupElementError(CryptoError):
    pass


class KdfInputError(CryptoError):
    pass


class AeadError(CryptoError):
    pass


class AlgorithmId(str, Enum):
    ED25519 = "ed25519"
    X25519 = "x25519"


class KeyPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    secret_part: bytes = Field(..., repr=False, description="Private scalar")
    public_part: bytes = Field(..., description="Public group element")
    algorithm_id: AlgorithmId = Field(..., description="Algorithm of both parts")

    def serialize(self) -> bytes:
        return encode_fields(
            [encode_str(self.algorithm_id.value), self.secret_part, self.public_part]
        )

    @classmethod
    def deserialize(cls, data: bytes) -> "KeyPair":
        algorithm, secret, public = decode_fields(data, expected=3)
        return cls(
            secret_part=secret,
            public_part=public,
            algorithm_id=AlgorithmId(decode_str(algorithm)),
        )


class SessionKeys(BaseModel):
    model_config = ConfigDict(frozen=True)

    client_write_key: bytes = Field(..., repr=False)
    server_write_key: bytes = Field(..., repr=False)
    finished_key: bytes = Field(..., repr=False)

    @field_validator("client_write_key", "server_write_key", "finished_key")
    @classmethod
    def check_size(cls, value: bytes) -> bytes:
        if len(value) != KEY_SIZE:
            raise ValueError(f"session keys are {KEY_SIZE} bytes")
        return value

    def all_keys(self) -> tuple[bytes, bytes, bytes]:
        return (self.client_write_key, self.server_write_key, self.finished_key)


class Nonce(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: bytes
    origin: str

    @field_validator("value")
    @classmethod
    def check_size(cls, value: bytes) -> bytes:
        if len(value) != NONCE_SIZE:
            raise ValueError(f"nonces are {NONCE_SIZE} bytes")
        return value


class CryptoProvider(ABC, BaseModel):
    """Primitive suite used by every protocol layer.

    Implementations must be pure functions of their inputs: all randomness
    comes in through explicit seeds or a caller-owned generator.
    """

    @property
    @abstractmethod
    def name(self) -> str: ...

    @abstractmethod
    def gen_keypair(
        self, seed: bytes, algorithm: AlgorithmId = AlgorithmId.ED25519
    ) -> KeyPair:
        """
        Derive a key pair deterministically from a 32-byte seed.
        """
        ...

    @abstractmethod
    def sign(self, secret_part: bytes, message: bytes) -> Signature: ...

    @abstractmethod
    def verify(self, public_part: bytes, message: bytes, sig: Signature) -> bool:
        """
        Check a signature. Malformed keys or signatures return False.
        """
        ...

    @abstractmethod
    def dh_shared(self, my_secret: bytes, their_public: bytes) -> bytes:
        """
        Key agreement. Raises InvalidGroupElementError for unusable peer keys.
        """
        ...

    @abstractmethod
    def kdf(self, shared: bytes, transcript_hash: bytes, label: str) -> SessionKeys:
        ...

    @abstractmethod
    def mac(self, key: bytes, message: bytes) -> bytes: ...

    @abstractmethod
    def mac_verify(self, key: bytes, message: bytes, tag: bytes) -> bool: ...

    @abstractmethod
    def hash(self, message: bytes) -> bytes: ...

    @abstractmethod
    def aead_seal(
        self, key: bytes, nonce: bytes, plaintext: bytes, aad: bytes
    ) -> bytes: ...

    @abstractmethod
    def aead_open(
        self, key: bytes, nonce: bytes, ciphertext: bytes, aad: bytes
    ) -> bytes:
        """
        Decrypt and authenticate. Raises AeadError on any tamper.
        """
        ...

    def nonce(self, rng: np.random.Generator, origin: str) -> Nonce:
        return Nonce(value=rng.bytes(NONCE_SIZE), origin=origin)

    def random_seed(self, rng: np.random.Generator) -> bytes:
        return rng.bytes(KEY_SIZE)
