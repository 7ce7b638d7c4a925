from v2vsim.crypto import AeadError
from v2vsim.crypto.encoding import encode_int

from .messages import ApplicationRecord, MalformedMessageError, Role, decode_radio
from .state import HandshakeState, Phase

RECORD_AAD = b"v2vsim-record"


class SessionError(Exception):
    pass


class SessionStateError(SessionError):
    pass


class SessionDecryptError(SessionError):
    pass


def _record_nonce(seq: int) -> bytes:
    return encode_int(seq, 12)


def _record_aad(seq: int) -> bytes:
    return RECORD_AAD + encode_int(seq)


def _keys(state: HandshakeState) -> tuple[bytes, bytes]:
    """(write key, read key) for this side of the session."""
    if state.phase is not Phase.ESTABLISHED or state.session_keys is None:
        raise SessionStateError(
            f"{state.context.party_id} has no established session ({state.phase.name})"
        )
    keys = state.session_keys
    if state.role is Role.INITIATOR:
        return keys.client_write_key, keys.server_write_key
    return keys.server_write_key, keys.client_write_key


def session_send(state: HandshakeState, plaintext: bytes) -> bytes:
    write_key, _ = _keys(state)
    seq = state.send_seq
    ciphertext = state.context.provider.aead_seal(
        write_key, _record_nonce(seq), plaintext, _record_aad(seq)
    )
    state.send_seq += 1
    return ApplicationRecord(seq=seq, ciphertext=ciphertext).encode()


def session_recv(state: HandshakeState, payload: bytes) -> bytes:
    """Open one application record. Replayed, reordered or forged records raise."""
    _, read_key = _keys(state)
    try:
        record = decode_radio(payload)
    except MalformedMessageError as exc:
        raise SessionDecryptError(str(exc)) from exc
    if not isinstance(record, ApplicationRecord):
        raise SessionDecryptError("not an application record")
    if record.seq < state.recv_seq:
        raise SessionDecryptError(f"record {record.seq} replayed")
    try:
        plaintext = state.context.provider.aead_open(
            read_key, _record_nonce(record.seq), record.ciphertext, _record_aad(record.seq)
        )
    except AeadError as exc:
        raise SessionDecryptError(f"record {record.seq} failed authentication") from exc
    state.recv_seq = record.seq + 1
    return plaintext
