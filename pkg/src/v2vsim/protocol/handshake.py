"""Per-variant handshake state machine.

Both parties run every check the variant defines against each other. The
exchange is strictly sequential, so both transcripts grow identically:

    I -> R  Hello
    R -> I  Hello
    I -> R  [CertMsg] KeyShare [DynClaim]     R checks I
    R -> I  [CertMsg] KeyShare [DynClaim]     I checks R
    I => R  beacon / PUF challenge (optical), answered over radio
    I -> R  Finished
    R => I  beacon / PUF challenge (optical), answered over radio
    R -> I  Finished

`step` never raises for protocol failures: every failure ends in ABORTED
with one AbortReason.
"""

from v2vsim.crypto import AlgorithmId, CryptoError
from v2vsim.crypto.encoding import EncodingError
from v2vsim.identity import match_attributes, verify_certificate
from v2vsim.logger import get_logger
from v2vsim.world.pose import Pose, WorldState, extrapolate
from v2vsim.world.sensors import autocollimator_check

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
    PufChallengeMsg,
    PufResponseMsg,
    Role,
    Variant,
    WireMessage,
    decode_optical,
    decode_radio,
    encode_flight,
)
from .state import (
    CHECKS_BY_VARIANT,
    AbortReason,
    Action,
    Awaiting,
    CameraResult,
    EvaluatePuf,
    FireOptical,
    HandshakeContext,
    HandshakeSetupError,
    HandshakeState,
    InputEvent,
    LidarResult,
    MessageReceived,
    OpticalReceived,
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

logger = get_logger(__name__)

# failures a trusting engine still aborts on
_STRUCTURAL = frozenset(
    {AbortReason.MALFORMED, AbortReason.FINISHED_MISMATCH, AbortReason.HANDSHAKE_TIMEOUT}
)


class _Abort(Exception):
    def __init__(self, reason: AbortReason, detail: str = ""):
        super().__init__(reason.value)
        self.reason = reason
        self.detail = detail


def transcript_digest(state: HandshakeState) -> bytes:
    return state.context.provider.hash(state.transcript)


def _append(state: HandshakeState, message: WireMessage, sent: bool) -> None:
    state.transcript += message.encode()
    state.messages.append(("> " if sent else "< ") + message.label)


def _check(state: HandshakeState, ok: bool, reason: AbortReason, detail: str = "") -> None:
    if ok:
        return
    if state.context.trusting and reason not in _STRUCTURAL:
        state.note("check_ignored", reason=reason, detail=detail)
        return
    raise _Abort(reason, detail)


def _require_credentials(variant: Variant, context: HandshakeContext) -> None:
    if variant >= Variant.V1_BASIC and (
        context.certificate is None or context.signing_keys is None
    ):
        raise HandshakeSetupError(
            f"{context.party_id} needs a certificate and signing keys for {variant.name}"
        )


def _key_flight_layout(variant: Variant) -> list[type[WireMessage]]:
    layout: list[type[WireMessage]] = []
    if variant >= Variant.V1_BASIC:
        layout.append(CertMsg)
    layout.append(KeyShare)
    if variant >= Variant.V2_INTERMEDIATE:
        layout.append(DynClaim)
    return layout


def initiate(
    variant: Variant,
    context: HandshakeContext,
    peer_claimed_id: str,
    now: float = 0.0,
) -> tuple[HandshakeState, Hello]:
    _require_credentials(variant, context)
    state = HandshakeState(
        variant=variant,
        role=Role.INITIATOR,
        context=context,
        peer_claimed_id=peer_claimed_id,
        started_at=now,
    )
    nonce = context.provider.nonce(context.rng, context.party_id)
    hello = Hello(role=Role.INITIATOR, nonce=nonce.value, variant=variant)
    state.my_nonce = nonce.value
    _append(state, hello, sent=True)
    state.advance_phase(Phase.HELLO_SENT)
    state.awaiting = Awaiting.HELLO
    state.note("hello_sent", peer=peer_claimed_id, variant=variant)
    return state, hello


def opening_actions(state: HandshakeState, hello: Hello) -> list[Action]:
    """Radio send of the initiator's Hello plus the whole-handshake timer."""
    return [
        SendRadio(payload=encode_flight([hello]), label=hello.label),
        SetTimer(
            name=TimerName.HANDSHAKE,
            deadline=state.started_at + state.context.constants.handshake_timeout,
        ),
    ]


def accept(
    variant: Variant,
    context: HandshakeContext,
    peer_claimed_id: str,
    now: float = 0.0,
) -> tuple[HandshakeState, list[Action]]:
    """Responder state waiting for the initiator's Hello."""
    _require_credentials(variant, context)
    state = HandshakeState(
        variant=variant,
        role=Role.RESPONDER,
        context=context,
        peer_claimed_id=peer_claimed_id,
        started_at=now,
    )
    timer = SetTimer(
        name=TimerName.HANDSHAKE, deadline=now + context.constants.handshake_timeout
    )
    return state, [timer]


def step(state: HandshakeState, event: InputEvent) -> tuple[HandshakeState, list[Action]]:
    if state.terminal:
        if not isinstance(event, TimerExpired):
            state.note("ignored_after_end", input=type(event).__name__)
        return state, []
    actions: list[Action] = []
    try:
        if isinstance(event, TimerExpired):
            _on_timer(state, event, actions)
        elif isinstance(event, MessageReceived):
            _on_radio(state, event, actions)
        elif isinstance(event, OpticalReceived):
            _on_optical(state, event, actions)
        elif isinstance(event, CameraResult):
            _on_camera(state, event, actions)
        elif isinstance(event, LidarResult):
            _on_lidar(state, event, actions)
        elif isinstance(event, PufEvaluated):
            _on_puf_evaluated(state, event, actions)
        else:
            raise MalformedMessageError(f"unexpected input {type(event).__name__}")
    except _Abort as abort:
        _abort(state, abort.reason, abort.detail, event.at)
        return state, []
    except (MalformedMessageError, EncodingError, CryptoError) as exc:
        _abort(state, AbortReason.MALFORMED, str(exc), event.at)
        return state, []
    return state, actions


def _abort(state: HandshakeState, reason: AbortReason, detail: str, at: float) -> None:
    if reason not in CHECKS_BY_VARIANT[state.variant]:
        raise HandshakeSetupError(f"{state.variant.name} cannot abort with {reason.value}")
    state.abort_reason = reason
    state.abort_detail = detail
    state.advance_phase(Phase.ABORTED)
    state.awaiting = Awaiting.NOTHING
    state.note("aborted", reason=reason, detail=detail or "-")
    logger.debug("%s aborted %s: %s", state.context.party_id, reason.value, detail)


def _on_timer(state: HandshakeState, event: TimerExpired, actions: list[Action]) -> None:
    if event.name is TimerName.HANDSHAKE:
        raise _Abort(AbortReason.HANDSHAKE_TIMEOUT, f"stuck awaiting {state.awaiting.value}")
    if (
        event.name is TimerName.BEACON
        and state.awaiting is Awaiting.BEACON_ECHO
        and state.beacon_deadline is not None
        and event.at >= state.beacon_deadline
    ):
        _check(state, False, AbortReason.BEACON_TIMEOUT, "no echo within window")
        _after_beacon(state, event.at, actions)


def _on_radio(state: HandshakeState, event: MessageReceived, actions: list[Action]) -> None:
    decoded = decode_radio(event.payload)
    if isinstance(decoded, ApplicationRecord):
        raise MalformedMessageError("application data before the handshake finished")
    for message in decoded:
        if state.terminal:
            state.note("ignored_after_end", input=message.label)
            continue
        _on_message(state, message, event, actions)


def _on_message(
    state: HandshakeState,
    message: WireMessage,
    event: MessageReceived,
    actions: list[Action],
) -> None:
    awaiting = state.awaiting
    if awaiting is Awaiting.HELLO and isinstance(message, Hello):
        _on_hello(state, message, event.at, actions)
    elif awaiting is Awaiting.PEER_FLIGHT:
        _on_flight_message(state, message, event, actions)
    elif awaiting is Awaiting.BEACON_ECHO and isinstance(message, BeaconEcho):
        _on_beacon_echo(state, message, event.at, actions)
    elif awaiting is Awaiting.PUF_RESPONSE and isinstance(message, PufResponseMsg):
        _on_puf_response(state, message, event.at, actions)
    elif awaiting is Awaiting.FINISHED and isinstance(message, Finished):
        _on_finished(state, message, event.at, actions)
    else:
        raise MalformedMessageError(
            f"unexpected {message.label} while awaiting {awaiting.value}"
        )


def _on_hello(state: HandshakeState, hello: Hello, at: float, actions: list[Action]) -> None:
    expected_role = Role.RESPONDER if state.role is Role.INITIATOR else Role.INITIATOR
    if hello.role is not expected_role:
        raise MalformedMessageError(f"Hello from a {hello.role.value}, expected {expected_role.value}")
    if hello.variant is not state.variant:
        raise MalformedMessageError(
            f"peer speaks {hello.variant.name}, expected {state.variant.name}"
        )
    state.peer_nonce = hello.nonce
    _append(state, hello, sent=False)
    if state.role is Role.INITIATOR:
        _send_key_flight(state, at, actions)
    else:
        ctx = state.context
        nonce = ctx.provider.nonce(ctx.rng, ctx.party_id)
        reply = Hello(role=Role.RESPONDER, nonce=nonce.value, variant=state.variant)
        state.my_nonce = nonce.value
        _append(state, reply, sent=True)
        state.advance_phase(Phase.HELLO_SENT)
        actions.append(SendRadio(payload=encode_flight([reply]), label=reply.label))
        state.note("hello_sent", peer=state.peer_claimed_id, variant=state.variant)
    state.advance_phase(Phase.KEY_EXCHANGE)
    state.awaiting = Awaiting.PEER_FLIGHT
    state.flight_position = 0


def _send_key_flight(state: HandshakeState, at: float, actions: list[Action]) -> None:
    ctx = state.context
    provider = ctx.provider
    state.ephemeral = provider.gen_keypair(provider.random_seed(ctx.rng), AlgorithmId.X25519)
    flight: list[WireMessage] = []
    signing = state.variant >= Variant.V1_BASIC
    if signing:
        assert ctx.certificate is not None and ctx.signing_keys is not None
        cert_msg = CertMsg(certificate=ctx.certificate)
        _append(state, cert_msg, sent=True)
        flight.append(cert_msg)
    epk = state.ephemeral.public_part
    signature = b""
    if signing:
        signature = provider.sign(ctx.signing_keys.secret_part, transcript_digest(state) + epk)
    key_share = KeyShare(ephemeral_public=epk, signature=signature)
    _append(state, key_share, sent=True)
    flight.append(key_share)
    if state.variant >= Variant.V2_INTERMEDIATE:
        claim = DynClaim(pose=ctx.pose_at(at), claimed_at=at)
        claim = claim.model_copy(
            update={
                "signature": provider.sign(
                    ctx.signing_keys.secret_part,
                    transcript_digest(state) + claim.claim_bytes(),
                )
            }
        )
        _append(state, claim, sent=True)
        flight.append(claim)
    label = "+".join(m.label for m in flight)
    actions.append(SendRadio(payload=encode_flight(flight), label=label))
    state.note("key_flight_sent", messages=label)


def _on_flight_message(
    state: HandshakeState,
    message: WireMessage,
    event: MessageReceived,
    actions: list[Action],
) -> None:
    layout = _key_flight_layout(state.variant)
    expected = layout[state.flight_position]
    if not isinstance(message, expected):
        raise MalformedMessageError(
            f"expected {expected.__name__}, got {message.label} in key flight"
        )
    ctx = state.context
    provider = ctx.provider
    if isinstance(message, CertMsg):
        state.peer_certificate = message.certificate
        verdict = verify_certificate(ctx.ca_public, message.certificate, event.at, provider)
        _check(
            state,
            verdict.accepted,
            AbortReason.BAD_CERT,
            verdict.reason.value if verdict.reason else "",
        )
    elif isinstance(message, KeyShare):
        if state.variant >= Variant.V1_BASIC:
            _check(
                state,
                _signed_by_peer(state, transcript_digest(state) + message.ephemeral_public, message.signature),
                AbortReason.BAD_SIGNATURE,
                "key share",
            )
        state.peer_ephemeral = message.ephemeral_public
        state.peer_key_origin = event.origin
    elif isinstance(message, DynClaim):
        _check(
            state,
            _signed_by_peer(state, transcript_digest(state) + message.claim_bytes(), message.signature),
            AbortReason.BAD_SIGNATURE,
            "dynamic claim",
        )
        state.peer_claim = message
    _append(state, message, sent=False)
    state.flight_position += 1
    if state.flight_position == len(layout):
        state.note("key_flight_received", origin=event.origin)
        if state.role is Role.INITIATOR:
            _derive_handshake_keys(state)
        _begin_peer_check(state, event.at, actions)


def _signed_by_peer(state: HandshakeState, message: bytes, signature: bytes) -> bool:
    cert = state.peer_certificate
    if cert is None:
        return False
    return state.context.provider.verify(cert.subject_public_key, message, signature)


def _derive_handshake_keys(state: HandshakeState) -> None:
    ctx = state.context
    if state.ephemeral is None or state.peer_ephemeral is None:
        raise MalformedMessageError("key shares missing")
    state.shared = ctx.provider.dh_shared(state.ephemeral.secret_part, state.peer_ephemeral)
    th = transcript_digest(state)
    mine, theirs = (
        ("v2v-initiator", "v2v-responder")
        if state.role is Role.INITIATOR
        else ("v2v-responder", "v2v-initiator")
    )
    state.my_handshake_keys = ctx.provider.kdf(state.shared, th, mine)
    state.peer_handshake_keys = ctx.provider.kdf(state.shared, th, theirs)


def _predicted_claim(state: HandshakeState, at: float) -> Pose:
    claim = state.peer_claim
    if claim is None:
        raise MalformedMessageError("no dynamic claim to aim at")
    return extrapolate(claim.pose, at - claim.claimed_at)


def _predicted_target(state: HandshakeState, at: float) -> Pose | None:
    ctx = state.context
    if ctx.target_pose is None:
        return None
    return extrapolate(ctx.target_pose, at - ctx.target_seen_at)


def _begin_peer_check(state: HandshakeState, at: float, actions: list[Action]) -> None:
    state.advance_phase(Phase.PEER_CHECK)
    if state.context.trusting or state.variant is Variant.V0_BASELINE:
        _peer_check_done(state, at, actions)
        return
    if state.variant is Variant.V1_BASIC:
        target = _predicted_target(state, at) if state.role is Role.INITIATOR else None
        actions.append(RequestCamera(at=target))
        state.awaiting = Awaiting.CAMERA
        return
    claimed = _predicted_claim(state, at)
    if state.role is Role.INITIATOR:
        target = _predicted_target(state, at)
        gap = float("inf") if target is None else target.distance_to(claimed)
        _check(
            state,
            gap <= state.context.constants.coupling_tolerance,
            AbortReason.DYNAMIC_COUPLING_FAILED,
            f"claimed pose {gap:.3f} m from the intended vehicle",
        )
    actions.append(RequestLidar(at=claimed, purpose=Awaiting.LIDAR_CLAIM))
    state.awaiting = Awaiting.LIDAR_CLAIM


def _on_lidar(state: HandshakeState, event: LidarResult, actions: list[Action]) -> None:
    if state.awaiting is Awaiting.LIDAR_CLAIM:
        _check(
            state,
            event.measurement is not None,
            AbortReason.DYNAMIC_COUPLING_FAILED,
            "nothing at the claimed pose",
        )
        state.physical_subject = event.subject
        actions.append(RequestCamera(at=_predicted_claim(state, event.at)))
        state.awaiting = Awaiting.CAMERA
    elif state.awaiting is Awaiting.LIDAR_CHALLENGE:
        _check(
            state,
            event.measurement is not None,
            AbortReason.DYNAMIC_COUPLING_FAILED,
            "peer left the claimed pose",
        )
        if event.measurement is None:
            d_est = state.context.pose_at(event.at).distance_to(
                _predicted_claim(state, event.at)
            )
        else:
            d_est = event.measurement.range
        _fire_challenge(state, event.at, d_est, actions)
    else:
        raise MalformedMessageError(f"LIDAR result while awaiting {state.awaiting.value}")


def _on_camera(state: HandshakeState, event: CameraResult, actions: list[Action]) -> None:
    if state.awaiting is not Awaiting.CAMERA:
        raise MalformedMessageError(f"camera result while awaiting {state.awaiting.value}")
    cert = state.peer_certificate
    matched = None
    if cert is not None:
        for sighting in event.sightings:
            if match_attributes(sighting.observation, cert.subject_attributes):
                matched = sighting
                break
    _check(
        state,
        matched is not None,
        AbortReason.CERT_ATTR_MISMATCH,
        "no visible vehicle matches the certificate",
    )
    if matched is not None and state.physical_subject is None:
        state.physical_subject = matched.subject
    _peer_check_done(state, event.at, actions)


def _peer_check_done(state: HandshakeState, at: float, actions: list[Action]) -> None:
    state.note("peer_checked", subject=state.physical_subject or "-")
    optical = state.variant >= Variant.V2_INTERMEDIATE
    if state.role is Role.RESPONDER:
        _send_key_flight(state, at, actions)
        _derive_handshake_keys(state)
        state.advance_phase(Phase.OPTICAL_EXCHANGE if optical else Phase.FINISHING)
        state.awaiting = Awaiting.PEER_BEACON if optical else Awaiting.FINISHED
    elif optical:
        _begin_beacon(state, at, actions)
    else:
        _verification_done(state, at, actions)


def _begin_beacon(state: HandshakeState, at: float, actions: list[Action]) -> None:
    ctx = state.context
    state.advance_phase(Phase.OPTICAL_EXCHANGE)
    aim = _predicted_claim(state, at)
    state.beacon_nonce = ctx.rng.bytes(16)
    state.beacon_sent_at = at
    state.beacon_deadline = at + ctx.constants.beacon_window
    beacon = Beacon(nonce=state.beacon_nonce)
    actions.append(FireOptical(at=aim, payload=beacon.encode(), label=beacon.label))
    actions.append(SetTimer(name=TimerName.BEACON, deadline=state.beacon_deadline))
    state.awaiting = Awaiting.BEACON_ECHO
    state.note("beacon_fired", sent_at=at, deadline=state.beacon_deadline)


def _beacon_mac_input(state: HandshakeState, nonce: bytes) -> bytes:
    return nonce + transcript_digest(state)


def _on_beacon_echo(
    state: HandshakeState, echo: BeaconEcho, at: float, actions: list[Action]
) -> None:
    assert state.peer_handshake_keys is not None and state.beacon_nonce is not None
    deadline = state.beacon_deadline or at
    _check(state, at <= deadline, AbortReason.BEACON_TIMEOUT, "echo arrived late")
    genuine = state.context.provider.mac_verify(
        state.peer_handshake_keys.finished_key,
        _beacon_mac_input(state, state.beacon_nonce),
        echo.mac,
    )
    _check(state, genuine, AbortReason.DYNAMIC_COUPLING_FAILED, "beacon echo mac mismatch")
    _append(state, echo, sent=False)
    state.note(
        "beacon_echo_ok",
        sent_at=state.beacon_sent_at or at,
        arrived_at=at,
        deadline=deadline,
    )
    _after_beacon(state, at, actions)


def _after_beacon(state: HandshakeState, at: float, actions: list[Action]) -> None:
    if state.variant is not Variant.V3_SOPHISTICATED:
        _verification_done(state, at, actions)
        return
    aim = _predicted_claim(state, at)
    if state.context.trusting:
        _fire_challenge(state, at, state.context.pose_at(at).distance_to(aim), actions)
        return
    actions.append(RequestLidar(at=aim, purpose=Awaiting.LIDAR_CHALLENGE))
    state.awaiting = Awaiting.LIDAR_CHALLENGE


def _fire_challenge(
    state: HandshakeState, at: float, d_est: float, actions: list[Action]
) -> None:
    ctx = state.context
    cert = state.peer_certificate
    crp = None
    if cert is not None:
        crp = next(
            (c for c in cert.puf_crp_commitments if not ctx.crp_verifier.is_consumed(c)),
            None,
        )
    _check(state, crp is not None, AbortReason.PUF_VERIFY_FAILED, "no unused CRP")
    if crp is None:
        _verification_done(state, at, actions)
        return
    budget = TimingBudget.from_estimate(d_est, ctx.constants)
    challenge = PufChallengeMsg(
        challenge_id=crp.challenge.challenge_id,
        challenge_bits=crp.challenge.challenge_bits,
    )
    _append(state, challenge, sent=True)
    state.puf_crp = crp
    state.puf_emitted_at = at
    state.puf_budget = budget
    actions.append(
        FireOptical(
            at=_predicted_claim(state, at), payload=challenge.encode(), label=challenge.label
        )
    )
    state.awaiting = Awaiting.PUF_RESPONSE
    state.note(
        "puf_challenge_fired",
        challenge_id=crp.challenge.challenge_id,
        d_est=d_est,
        tau_puf=budget.tau_puf,
        emitted_at=at,
    )


def _on_puf_response(
    state: HandshakeState, response: PufResponseMsg, at: float, actions: list[Action]
) -> None:
    ctx = state.context
    assert state.puf_crp is not None and state.puf_budget is not None
    assert state.puf_emitted_at is not None
    _append(state, response, sent=False)
    elapsed = at - state.puf_emitted_at - ctx.constants.radio_latency
    state.note(
        "puf_response",
        emitted_at=state.puf_emitted_at,
        arrived_at=at,
        elapsed=elapsed,
        tau_puf=state.puf_budget.tau_puf,
    )
    _check(
        state,
        elapsed <= state.puf_budget.tau_puf,
        AbortReason.TIMING_VIOLATION,
        f"elapsed {elapsed:.9f} s exceeds tau_puf {state.puf_budget.tau_puf:.9f} s",
    )
    _check(
        state,
        ctx.crp_verifier.verify_response(state.puf_crp, response.response),
        AbortReason.PUF_VERIFY_FAILED,
        ctx.crp_verifier.last_rejection or "",
    )
    _verification_done(state, at, actions)


def _verification_done(state: HandshakeState, at: float, actions: list[Action]) -> None:
    state.verified_peer = True
    optical = state.variant >= Variant.V2_INTERMEDIATE
    _send_finished(state, actions)
    if state.role is Role.INITIATOR:
        state.advance_phase(Phase.FINISHING)
        state.awaiting = Awaiting.PEER_BEACON if optical else Awaiting.FINISHED
    else:
        _establish(state, at)


def _on_optical(state: HandshakeState, event: OpticalReceived, actions: list[Action]) -> None:
    if state.awaiting not in (Awaiting.PEER_BEACON, Awaiting.PEER_CHALLENGE):
        state.note("optical_ignored", awaiting=state.awaiting)
        return
    message = decode_optical(event.payload)
    ctx = state.context
    # the receiver only knows its own pose
    own = WorldState(poses={ctx.party_id: ctx.pose_at(event.at)}, clock=event.at)
    alignment = autocollimator_check(
        own,
        ctx.party_id,
        event.arrival_bearing,
        _predicted_claim(state, event.at),
        ctx.constants,
    )
    state.note("alignment", delta=alignment.delta, aligned=alignment.aligned)
    _check(
        state,
        alignment.aligned,
        AbortReason.ALIGNMENT_FAILED,
        f"pulse {alignment.delta:.6f} rad off the claimed bearing",
    )
    if state.awaiting is Awaiting.PEER_BEACON and isinstance(message, Beacon):
        assert state.my_handshake_keys is not None
        mac = ctx.provider.mac(
            state.my_handshake_keys.finished_key, _beacon_mac_input(state, message.nonce)
        )
        echo = BeaconEcho(mac=mac)
        _append(state, echo, sent=True)
        actions.append(SendRadio(payload=encode_flight([echo]), label=echo.label))
        if state.variant is Variant.V3_SOPHISTICATED:
            state.awaiting = Awaiting.PEER_CHALLENGE
        else:
            _answer_done(state)
    elif state.awaiting is Awaiting.PEER_CHALLENGE and isinstance(message, PufChallengeMsg):
        _append(state, message, sent=False)
        state.pending_challenge = message.challenge()
        actions.append(EvaluatePuf(challenge=state.pending_challenge))
        state.awaiting = Awaiting.PUF_EVALUATION
    else:
        raise MalformedMessageError(
            f"unexpected optical {message.label} while awaiting {state.awaiting.value}"
        )


def _on_puf_evaluated(
    state: HandshakeState, event: PufEvaluated, actions: list[Action]
) -> None:
    if state.awaiting is not Awaiting.PUF_EVALUATION:
        raise MalformedMessageError("PUF result without a pending challenge")
    response = PufResponseMsg(response=event.response)
    _append(state, response, sent=True)
    actions.append(SendRadio(payload=encode_flight([response]), label=response.label))
    state.pending_challenge = None
    _answer_done(state)


def _answer_done(state: HandshakeState) -> None:
    state.answered_peer = True
    state.awaiting = Awaiting.FINISHED


def _send_finished(state: HandshakeState, actions: list[Action]) -> None:
    assert state.my_handshake_keys is not None
    mac = state.context.provider.mac(
        state.my_handshake_keys.finished_key, transcript_digest(state)
    )
    finished = Finished(mac=mac)
    _append(state, finished, sent=True)
    actions.append(SendRadio(payload=encode_flight([finished]), label=finished.label))


def _on_finished(
    state: HandshakeState, finished: Finished, at: float, actions: list[Action]
) -> None:
    assert state.peer_handshake_keys is not None
    genuine = state.context.provider.mac_verify(
        state.peer_handshake_keys.finished_key, transcript_digest(state), finished.mac
    )
    _check(state, genuine, AbortReason.FINISHED_MISMATCH, "transcripts diverged")
    _append(state, finished, sent=False)
    if state.role is Role.INITIATOR:
        _establish(state, at)
    elif state.variant >= Variant.V2_INTERMEDIATE:
        _begin_beacon(state, at, actions)
    else:
        _verification_done(state, at, actions)


def _establish(state: HandshakeState, at: float) -> None:
    assert state.shared is not None
    state.session_keys = state.context.provider.kdf(
        state.shared, transcript_digest(state), "v2v-finished"
    )
    state.advance_phase(Phase.ESTABLISHED)
    state.awaiting = Awaiting.NOTHING
    state.established_at = at
    state.note("established", transcript=transcript_digest(state)[:8])
