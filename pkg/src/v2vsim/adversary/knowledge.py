"""Dolev-Yao knowledge of the adversary.

Observed radio traffic is split along the public wire format; the closure
is then grown round by round, one constructor application per round, by
hashing, transcript hashing, key agreement, key derivation and decryption.
Round r only produces items of depth r, so the depth cap bounds the
saturation and a query that exhausts it is reported as bounded.

The closure is saturated once per generation of observations and then
answers every query by lookup. MAC goals are checked against an index of
the inputs the handshake actually authenticates: transcript digests, and
beacon nonces followed by a transcript digest.
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from v2vsim.crypto import KDF_LABELS, CryptoError, CryptoProvider, default_provider
from v2vsim.crypto.encoding import EncodingError, decode_fields, encode_int
from v2vsim.logger import get_logger
from v2vsim.protocol.messages import (
    ApplicationRecord,
    Beacon,
    BeaconEcho,
    CertMsg,
    DynClaim,
    Finished,
    Hello,
    KeyShare,
    MalformedMessageError,
    PufChallengeMsg,
    PufResponseMsg,
    Role,
    WireMessage,
    decode_optical,
    decode_radio,
)
from v2vsim.protocol.session import RECORD_AAD
from v2vsim.protocol.state import HandshakeState

logger = get_logger(__name__)

MAC_SIZE = 32


class Sort(str, Enum):
    PUBLIC = "PUBLIC"
    SECRET = "SECRET"
    SHARED = "SHARED"
    DIGEST = "DIGEST"
    KEY = "KEY"
    CIPHERTEXT = "CIPHERTEXT"
    DATA = "DATA"


class Derivability(str, Enum):
    DERIVABLE = "DERIVABLE"
    NOT_DERIVABLE = "NOT_DERIVABLE"
    NOT_DERIVABLE_WITHIN_BOUND = "NOT_DERIVABLE_WITHIN_BOUND"


class KnowledgeItem(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: bytes
    sort: Sort
    depth: int = Field(..., ge=0, description="Constructor applications needed")


class KnowledgeBase:
    """Grows only: observations and learned secrets are never forgotten."""

    def __init__(self, provider: CryptoProvider | None = None, depth_cap: int = 6):
        self.provider = provider or default_provider()
        self.depth_cap = depth_cap
        self._items: dict[bytes, KnowledgeItem] = {}
        self._handshake_logs: dict[tuple[str, ...], list[bytes]] = {}
        self._records: list[tuple[int, bytes]] = []
        self._transcript_digests: set[bytes] = set()
        self._beacon_nonces: set[bytes] = set()
        # derived closure, rebuilt lazily after new observations
        self._derived: dict[bytes, KnowledgeItem] = {}
        self._rounds_done = 0
        self._fixpoint_at: int | None = None
        self._mac_index: dict[bytes, int] | None = None
        self._stale = False

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, value: bytes) -> bool:
        return value in self._items

    def items(self) -> list[KnowledgeItem]:
        return sorted(self._items.values(), key=lambda i: (i.depth, i.sort.value, i.value))

    def add(self, value: bytes, sort: Sort, depth: int = 0) -> None:
        if not value:
            return
        known = self._items.get(value)
        if known is not None and known.depth <= depth:
            return
        self._items[value] = KnowledgeItem(value=value, sort=sort, depth=depth)
        self._stale = True

    def learn_secret(self, value: bytes) -> None:
        self.add(value, Sort.SECRET)

    def learn_handshake(self, state: HandshakeState) -> None:
        """Everything a puppet handshake knows is adversary knowledge."""
        if state.ephemeral is not None:
            self.add(state.ephemeral.secret_part, Sort.SECRET)
            self.add(state.ephemeral.public_part, Sort.PUBLIC)
        if state.shared is not None:
            self.add(state.shared, Sort.SHARED)
        for keys in (state.my_handshake_keys, state.peer_handshake_keys, state.session_keys):
            if keys is not None:
                for key in keys.all_keys():
                    self.add(key, Sort.KEY)
        if state.context.signing_keys is not None:
            self.add(state.context.signing_keys.secret_part, Sort.SECRET)

    def observe_radio(self, payload: bytes, between: tuple[str, str] = ("", "")) -> None:
        """Record a radio payload exchanged between two claimed parties."""
        self.add(payload, Sort.DATA)
        try:
            decoded = decode_radio(payload)
        except MalformedMessageError:
            return
        if isinstance(decoded, ApplicationRecord):
            self._records.append((decoded.seq, decoded.ciphertext))
            self.add(decoded.ciphertext, Sort.CIPHERTEXT)
            return
        for message in decoded:
            log = self._handshake_logs.setdefault(tuple(sorted(between)), [])
            log.append(message.encode())
            self._stale = True
            self._split(message)

    def observe_optical(self, payload: bytes) -> None:
        self.add(payload, Sort.DATA)
        try:
            message = decode_optical(payload)
        except MalformedMessageError:
            return
        self._split(message)

    def _split(self, message: WireMessage) -> None:
        self.add(message.encode(), Sort.DATA)
        if isinstance(message, Hello):
            self.add(message.nonce, Sort.DATA)
        elif isinstance(message, CertMsg):
            cert = message.certificate
            self.add(cert.subject_public_key, Sort.PUBLIC)
            self.add(cert.to_bytes(), Sort.DATA)
            self.add(cert.ca_signature, Sort.DATA)
            for crp in cert.puf_crp_commitments:
                self.add(crp.challenge.challenge_bits, Sort.DATA)
                self.add(crp.response_digest, Sort.DIGEST)
        elif isinstance(message, KeyShare):
            self.add(message.ephemeral_public, Sort.PUBLIC)
            self.add(message.signature, Sort.DATA)
        elif isinstance(message, DynClaim):
            self.add(message.claim_bytes(), Sort.DATA)
            self.add(message.signature, Sort.DATA)
        elif isinstance(message, (BeaconEcho, Finished)):
            self.add(message.mac, Sort.DATA)
        elif isinstance(message, Beacon):
            self.add(message.nonce, Sort.DATA)
            if message.nonce not in self._beacon_nonces:
                self._beacon_nonces.add(message.nonce)
                self._stale = True
        elif isinstance(message, PufChallengeMsg):
            self.add(message.challenge_bits, Sort.DATA)
        elif isinstance(message, PufResponseMsg):
            self.add(message.response, Sort.DATA)

    # closure

    def _known(self) -> dict[bytes, KnowledgeItem]:
        if self._stale:
            self._derived = dict(self._items)
            self._rounds_done = 0
            self._fixpoint_at = None
            self._mac_index = None
            self._stale = False
            self._transcript_digests = set()
        return self._derived

    def _of_sort(self, known: dict[bytes, KnowledgeItem], *sorts: Sort) -> list[KnowledgeItem]:
        return sorted(
            (item for item in known.values() if item.sort in sorts),
            key=lambda i: (i.depth, i.value),
        )

    def _transcript_windows(self) -> list[bytes]:
        """Contiguous runs of observed messages starting at an initiator Hello."""
        windows = []
        for log in self._handshake_logs.values():
            windows.extend(_windows(log))
        return windows

    def _round(self, known: dict[bytes, KnowledgeItem], depth: int) -> list[KnowledgeItem]:
        produced: dict[bytes, KnowledgeItem] = {}

        def emit(value: bytes, sort: Sort) -> None:
            if value and value not in known and value not in produced:
                produced[value] = KnowledgeItem(value=value, sort=sort, depth=depth)

        provider = self.provider
        if depth == 1:
            for window in self._transcript_windows():
                digest = provider.hash(window)
                self._transcript_digests.add(digest)
                emit(digest, Sort.DIGEST)
        for item in self._of_sort(known, *Sort):
            if item.depth == depth - 1:
                emit(provider.hash(item.value), Sort.DIGEST)

        secrets = self._of_sort(known, Sort.SECRET)
        publics = self._of_sort(known, Sort.PUBLIC)
        for secret in secrets:
            for public in publics:
                if max(secret.depth, public.depth) != depth - 1:
                    continue
                try:
                    emit(provider.dh_shared(secret.value, public.value), Sort.SHARED)
                except CryptoError:
                    continue

        shared = self._of_sort(known, Sort.SHARED)
        salts = [known[d] for d in sorted(self._transcript_digests) if d in known]
        for secret in shared:
            for salt in salts:
                if max(secret.depth, salt.depth) != depth - 1:
                    continue
                for label in KDF_LABELS:
                    for key in provider.kdf(secret.value, salt.value, label).all_keys():
                        emit(key, Sort.KEY)

        keys = self._of_sort(known, Sort.KEY)
        for key in keys:
            if key.depth != depth - 1:
                continue
            for seq, ciphertext in self._records:
                try:
                    plaintext = provider.aead_open(
                        key.value, encode_int(seq, 12), ciphertext, RECORD_AAD + encode_int(seq)
                    )
                except CryptoError:
                    continue
                emit(plaintext, Sort.DATA)
        return list(produced.values())

    def _saturate(self, cap: int) -> dict[bytes, KnowledgeItem]:
        known = self._known()
        while self._fixpoint_at is None and self._rounds_done < cap:
            depth = self._rounds_done + 1
            produced = self._round(known, depth)
            self._rounds_done = depth
            if not produced:
                self._fixpoint_at = depth
                break
            for item in produced:
                known[item.value] = item
            self._mac_index = None
        return known

    def _mac_inputs(self, known: dict[bytes, KnowledgeItem]) -> list[tuple[bytes, int]]:
        inputs = []
        for digest in sorted(self._transcript_digests):
            item = known.get(digest)
            if item is None:
                continue
            inputs.append((digest, item.depth))
            for nonce in sorted(self._beacon_nonces):
                inputs.append((nonce + digest, item.depth + 1))
        return inputs

    def _mac_depth(self, known: dict[bytes, KnowledgeItem], target: bytes) -> int | None:
        if len(target) != MAC_SIZE:
            return None
        if self._mac_index is None:
            index: dict[bytes, int] = {}
            inputs = self._mac_inputs(known)
            for key in self._of_sort(known, Sort.KEY, Sort.SHARED):
                for message, depth in inputs:
                    mac = self.provider.mac(key.value, message)
                    mac_depth = max(key.depth, depth) + 1
                    if mac_depth < index.get(mac, mac_depth + 1):
                        index[mac] = mac_depth
            self._mac_index = index
            logger.debug("indexed %d mac goals", len(index))
        return self._mac_index.get(target)

    def query(
        self, target: bytes, depth_cap: int | None = None, mac_goal: bool = True
    ) -> Derivability:
        """Decide whether `target` is derivable within `depth_cap` constructor steps.

        `mac_goal=False` skips the MAC index for targets that are never MAC
        outputs, such as plaintexts and session keys.
        """
        cap = self.depth_cap if depth_cap is None else depth_cap
        known = self._saturate(cap)
        item = known.get(target)
        if item is not None and item.depth <= cap:
            return Derivability.DERIVABLE
        if mac_goal:
            depth = self._mac_depth(known, target)
            if depth is not None and depth <= cap:
                return Derivability.DERIVABLE
        if self._fixpoint_at is not None and self._fixpoint_at <= cap:
            return Derivability.NOT_DERIVABLE
        logger.debug("knowledge closure hit depth cap %d", cap)
        return Derivability.NOT_DERIVABLE_WITHIN_BOUND


def _fields(encoded: bytes) -> list[bytes]:
    try:
        return decode_fields(encoded[1:])
    except EncodingError as exc:
        raise MalformedMessageError(str(exc)) from exc


def knowledge_oracle(knowledge: KnowledgeBase, target: bytes) -> Derivability:
    return knowledge.query(target)


def _windows(log: list[bytes]) -> list[bytes]:
    """Contiguous runs of one conversation starting at an initiator Hello."""
    windows = []
    for start, encoded in enumerate(log):
        if not encoded or encoded[0] != Hello.TYPE:
            continue
        try:
            hello = Hello.from_fields(_fields(encoded))
        except (MalformedMessageError, ValueError):
            continue
        if hello.role is not Role.INITIATOR:
            continue
        transcript = b""
        for encoded_next in log[start:]:
            transcript += encoded_next
            windows.append(transcript)
    return windows
