import pytest
from hypothesis import given
from hypothesis import strategies as st

from v2vsim.crypto import (
    AeadError,
    AlgorithmId,
    CryptoError,
    EncodingError,
    InvalidGroupElementError,
    KdfInputError,
    KeyPair,
    StandardProviderConfig,
    create_crypto_provider,
    decode_fields,
    encode_fields,
)

SEED_A = bytes(range(32))
SEED_B = bytes(range(32, 64))


def test_keypair_is_deterministic_in_its_seed(provider) -> None:
    assert provider.gen_keypair(SEED_A) == provider.gen_keypair(SEED_A)
    assert provider.gen_keypair(SEED_A).public_part != provider.gen_keypair(SEED_B).public_part


def test_keypair_rejects_short_seed(provider) -> None:
    with pytest.raises(CryptoError):
        provider.gen_keypair(b"short")


def test_keypair_serialization(provider) -> None:
    keys = provider.gen_keypair(SEED_A, AlgorithmId.X25519)
    assert KeyPair.deserialize(keys.serialize()) == keys
    assert "secret_part" not in repr(keys)


def test_sign_and_verify(provider) -> None:
    keys = provider.gen_keypair(SEED_A)
    sig = provider.sign(keys.secret_part, b"pose claim")
    assert provider.verify(keys.public_part, b"pose claim", sig)
    assert not provider.verify(keys.public_part, b"pose claim!", sig)
    other = provider.gen_keypair(SEED_B)
    assert not provider.verify(other.public_part, b"pose claim", sig)


def test_verify_never_raises_on_garbage(provider) -> None:
    keys = provider.gen_keypair(SEED_A)
    assert not provider.verify(b"\x01" * 5, b"message", b"sig")
    assert not provider.verify(keys.public_part, b"message", b"\x00" * 3)
    assert not provider.verify(keys.public_part, b"", b"\x00" * 64)


def test_signing_empty_message_is_refused(provider) -> None:
    keys = provider.gen_keypair(SEED_A)
    with pytest.raises(CryptoError):
        provider.sign(keys.secret_part, b"")


def test_key_agreement_is_symmetric(provider) -> None:
    a = provider.gen_keypair(SEED_A, AlgorithmId.X25519)
    b = provider.gen_keypair(SEED_B, AlgorithmId.X25519)
    assert provider.dh_shared(a.secret_part, b.public_part) == provider.dh_shared(
        b.secret_part, a.public_part
    )


@pytest.mark.parametrize("bad_public", [b"\x00" * 32, b"\x09" * 7])
def test_key_agreement_rejects_unusable_points(provider, bad_public) -> None:
    a = provider.gen_keypair(SEED_A, AlgorithmId.X25519)
    with pytest.raises(InvalidGroupElementError):
        provider.dh_shared(a.secret_part, bad_public)


def test_kdf_separates_labels_and_transcripts(provider) -> None:
    shared = b"\x42" * 32
    initiator = provider.kdf(shared, b"t1", "v2v-initiator")
    assert initiator == provider.kdf(shared, b"t1", "v2v-initiator")
    assert initiator != provider.kdf(shared, b"t1", "v2v-responder")
    assert initiator != provider.kdf(shared, b"t2", "v2v-initiator")
    assert len(set(initiator.all_keys())) == 3


def test_kdf_input_errors(provider) -> None:
    with pytest.raises(KdfInputError):
        provider.kdf(b"", b"t", "v2v-finished")
    with pytest.raises(KdfInputError):
        provider.kdf(b"\x01" * 32, b"t", "not-a-label")


def test_mac(provider) -> None:
    tag = provider.mac(b"k" * 32, b"beacon")
    assert provider.mac_verify(b"k" * 32, b"beacon", tag)
    assert not provider.mac_verify(b"k" * 32, b"beacon", tag[:-1] + bytes([tag[-1] ^ 1]))


def test_aead_detects_tampering(provider) -> None:
    key, nonce = b"\x07" * 32, b"\x00" * 12
    sealed = provider.aead_seal(key, nonce, b"brake warning", b"aad")
    assert provider.aead_open(key, nonce, sealed, b"aad") == b"brake warning"
    flipped = bytes([sealed[0] ^ 1]) + sealed[1:]
    with pytest.raises(AeadError):
        provider.aead_open(key, nonce, flipped, b"aad")
    with pytest.raises(AeadError):
        provider.aead_open(key, nonce, sealed, b"other aad")
    with pytest.raises(AeadError):
        provider.aead_open(key, b"\x00" * 8, sealed, b"aad")


def test_unknown_provider_is_not_implemented() -> None:
    config = StandardProviderConfig.model_construct(PROVIDER_NAME="quantum")
    with pytest.raises(NotImplementedError):
        create_crypto_provider(config)


def test_decoding_is_strict() -> None:
    encoded = encode_fields([b"abc", b"", b"de"])
    with pytest.raises(EncodingError):
        decode_fields(encoded[:-1])
    with pytest.raises(EncodingError):
        decode_fields(encoded, expected=2)
    with pytest.raises(EncodingError):
        decode_fields(b"\x00\x00")


@given(st.lists(st.binary(max_size=64), max_size=8))
def test_field_encoding_is_lossless(fields) -> None:
    assert decode_fields(encode_fields(fields)) == fields


def test_key_agreement_over_seeded_pairs(provider, rng) -> None:
    for _ in range(100):
        a = provider.gen_keypair(provider.random_seed(rng), AlgorithmId.X25519)
        b = provider.gen_keypair(provider.random_seed(rng), AlgorithmId.X25519)
        shared = provider.dh_shared(a.secret_part, b.public_part)
        assert shared == provider.dh_shared(b.secret_part, a.public_part)
        assert len(shared) == 32


def _flip(data: bytes, bit: int) -> bytes:
    flipped = bytearray(data)
    flipped[bit // 8] ^= 1 << (bit % 8)
    return bytes(flipped)


@pytest.mark.slow
def test_any_single_bit_flip_breaks_a_signature(provider, rng) -> None:
    keys = provider.gen_keypair(SEED_A)
    message = b"pose claim x=20.000 y=3.500 t=0.125"
    sig = provider.sign(keys.secret_part, message)
    for case in range(1000):
        if case % 2:
            bit = int(rng.integers(len(sig) * 8))
            assert not provider.verify(keys.public_part, message, _flip(sig, bit))
        else:
            bit = int(rng.integers(len(message) * 8))
            assert not provider.verify(keys.public_part, _flip(message, bit), sig)


def test_kdf_reacts_to_every_input_bit(provider, rng) -> None:
    shared = provider.random_seed(rng)
    transcript = provider.hash(b"hello|certificate|key share")
    base = provider.kdf(shared, transcript, "v2v-initiator").all_keys()
    for bit in rng.choice(len(shared) * 8, size=16, replace=False):
        changed = provider.kdf(_flip(shared, int(bit)), transcript, "v2v-initiator").all_keys()
        assert all(old != new for old, new in zip(base, changed))
    for bit in rng.choice(len(transcript) * 8, size=16, replace=False):
        changed = provider.kdf(shared, _flip(transcript, int(bit)), "v2v-initiator").all_keys()
        assert all(old != new for old, new in zip(base, changed))
