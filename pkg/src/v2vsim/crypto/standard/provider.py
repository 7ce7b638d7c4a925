from typing import Literal

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives import hmac as crypto_hmac
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat
from pydantic import BaseModel

from v2vsim.logger import get_logger

from ..provider import (
    AEAD_NONCE_SIZE,
    KDF_LABELS,
    KEY_SIZE,
    AeadError,
    AlgorithmId,
    CryptoError,
    CryptoProvider,
    InvalidGroupElementError,
    KdfInputError,
    KeyPair,
    SessionKeys,
    Signature,
)

logger = get_logger(__name__)


class StandardProviderConfig(BaseModel):
    PROVIDER_NAME: Literal["standard"] = "standard"


def _raw_public(key: Ed25519PublicKey | X25519PublicKey) -> bytes:
    return key.public_bytes(Encoding.Raw, PublicFormat.Raw)


class StandardProvider(CryptoProvider):
    """Ed25519 / X25519 / HKDF-SHA256 / HMAC-SHA256 / ChaCha20-Poly1305."""

    config: StandardProviderConfig = StandardProviderConfig()

    @property
    def name(self) -> str:
        return self.config.PROVIDER_NAME

    def gen_keypair(
        self, seed: bytes, algorithm: AlgorithmId = AlgorithmId.ED25519
    ) -> KeyPair:
        if len(seed) != KEY_SIZE:
            raise CryptoError(f"key seeds are {KEY_SIZE} bytes, got {len(seed)}")
        if algorithm is AlgorithmId.ED25519:
            public = _raw_public(Ed25519PrivateKey.from_private_bytes(seed).public_key())
        else:
            public = _raw_public(X25519PrivateKey.from_private_bytes(seed).public_key())
        return KeyPair(secret_part=seed, public_part=public, algorithm_id=algorithm)

    def sign(self, secret_part: bytes, message: bytes) -> Signature:
        if not message:
            raise CryptoError("refusing to sign an empty message")
        return Ed25519PrivateKey.from_private_bytes(secret_part).sign(message)

    def verify(self, public_part: bytes, message: bytes, sig: Signature) -> bool:
        if not message:
            return False
        try:
            Ed25519PublicKey.from_public_bytes(public_part).verify(sig, message)
        except (InvalidSignature, ValueError, TypeError):
            return False
        return True

    def dh_shared(self, my_secret: bytes, their_public: bytes) -> bytes:
        try:
            peer = X25519PublicKey.from_public_bytes(their_public)
            return X25519PrivateKey.from_private_bytes(my_secret).exchange(peer)
        except ValueError as exc:
            # wrong length, or a low-order point yielding an all-zero secret
            logger.debug("rejected peer key share: %s", exc)
            raise InvalidGroupElementError(str(exc)) from exc

    def kdf(self, shared: bytes, transcript_hash: bytes, label: str) -> SessionKeys:
        if not shared:
            raise KdfInputError("empty shared secret")
        if label not in KDF_LABELS:
            raise KdfInputError(f"unknown kdf label {label!r}")
        okm = HKDF(
            algorithm=hashes.SHA256(),
            length=3 * KEY_SIZE,
            salt=transcript_hash,
            info=label.encode("ascii"),
        ).derive(shared)
        return SessionKeys(
            client_write_key=okm[:KEY_SIZE],
            server_write_key=okm[KEY_SIZE : 2 * KEY_SIZE],
            finished_key=okm[2 * KEY_SIZE :],
        )

    def mac(self, key: bytes, message: bytes) -> bytes:
        h = crypto_hmac.HMAC(key, hashes.SHA256())
        h.update(message)
        return h.finalize()

    def mac_verify(self, key: bytes, message: bytes, tag: bytes) -> bool:
        h = crypto_hmac.HMAC(key, hashes.SHA256())
        h.update(message)
        try:
            h.verify(tag)
        except InvalidSignature:
            return False
        return True

    def hash(self, message: bytes) -> bytes:
        digest = hashes.Hash(hashes.SHA256())
        digest.update(message)
        return digest.finalize()

    def aead_seal(self, key: bytes, nonce: bytes, plaintext: bytes, aad: bytes) -> bytes:
        if len(nonce) != AEAD_NONCE_SIZE:
            raise CryptoError(f"aead nonces are {AEAD_NONCE_SIZE} bytes")
        return ChaCha20Poly1305(key).encrypt(nonce, plaintext, aad)

    def aead_open(
        self, key: bytes, nonce: bytes, ciphertext: bytes, aad: bytes
    ) -> bytes:
        if len(nonce) != AEAD_NONCE_SIZE:
            raise AeadError(f"aead nonces are {AEAD_NONCE_SIZE} bytes")
        try:
            return ChaCha20Poly1305(key).decrypt(nonce, ciphertext, aad)
        except (InvalidTag, ValueError) as exc:
            raise AeadError("ciphertext failed authentication") from exc
