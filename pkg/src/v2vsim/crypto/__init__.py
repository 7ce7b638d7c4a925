from .create_crypto_provider import (
    ProviderClient,
    ProviderConfig,
    create_crypto_provider,
    default_provider,
)
from .encoding import EncodingError, decode_fields, encode_fields
from .provider import (
    KDF_LABELS,
    AeadError,
    AlgorithmId,
    CryptoError,
    CryptoProvider,
    InvalidGroupElementError,
    KdfInputError,
    KeyPair,
    Nonce,
    SessionKeys,
    Signature,
)
from .standard.provider import StandardProvider, StandardProviderConfig

__all__ = [
    "create_crypto_provider",
    "default_provider",
    "ProviderClient",
    "ProviderConfig",
    "CryptoProvider",
    "StandardProvider",
    "StandardProviderConfig",
    "AlgorithmId",
    "KeyPair",
    "SessionKeys",
    "Nonce",
    "Signature",
    "KDF_LABELS",
    "CryptoError",
    "InvalidGroupElementError",
    "KdfInputError",
    "AeadError",
    "EncodingError",
    "encode_fields",
    "decode_fields",
]
