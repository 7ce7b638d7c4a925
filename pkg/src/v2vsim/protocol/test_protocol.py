import numpy as np
import pytest

from v2vsim.adversary.power import BitFlipPolicy, RadioControl
from v2vsim.config import DEFAULT_CONSTANTS
from v2vsim.protocol import (
    CHECKS_BY_VARIANT,
    AbortReason,
    Beacon,
    Finished,
    HandshakeContext,
    HandshakeSetupError,
    Hello,
    MalformedMessageError,
    MessageReceived,
    Phase,
    Role,
    SendRadio,
    SessionDecryptError,
    SessionStateError,
    SetTimer,
    TimerExpired,
    TimerName,
    TimingBudget,
    Variant,
    accept,
    decode_message,
    decode_optical,
    decode_radio,
    describe_radio,
    encode_flight,
    initiate,
    opening_actions,
    session_recv,
    session_send,
    step,
)
from v2vsim.results import Outcome
from v2vsim.sim.engine import Simulation
from v2vsim.sim.scenario import shipped_scenario
from v2vsim.sim.trace import TraceCategory
from v2vsim.world.pose import Pose

NONCE = bytes(16)


def _context(provider, rng, party: str = "v1") -> HandshakeContext:
    return HandshakeContext(
        party_id=party,
        provider=provider,
        rng=rng,
        ca_public=b"",
        pose_at=lambda t: Pose(x=0, y=0),
    )


def _established(variant: str):
    simulation = Simulation(shipped_scenario(f"honest-{variant}"))
    trace, verdict = simulation.execute()
    initiator = simulation.endpoints[("v1", "v1")].sessions["v2"]
    responder = simulation.endpoints[("v2", "v2")].sessions["v1"]
    return simulation, trace, verdict, initiator, responder


# wire format


def test_flight_decoding() -> None:
    hello = Hello(role=Role.INITIATOR, nonce=NONCE, variant=Variant.V2_INTERMEDIATE)
    finished = Finished(mac=b"\x01" * 32)
    payload = encode_flight([hello, finished])
    assert decode_radio(payload) == [hello, finished]
    assert describe_radio(payload) == "Hello+Finished"
    assert decode_message(hello.encode()) == hello


def test_malformed_payloads() -> None:
    with pytest.raises(MalformedMessageError):
        decode_radio(b"")
    with pytest.raises(MalformedMessageError):
        decode_radio(bytes([0x20]))
    with pytest.raises(MalformedMessageError):
        decode_message(Hello(role=Role.RESPONDER, nonce=NONCE, variant=Variant.V0_BASELINE).encode()[:-1])
    with pytest.raises(MalformedMessageError):
        decode_optical(Hello(role=Role.RESPONDER, nonce=NONCE, variant=Variant.V0_BASELINE).encode())
    assert describe_radio(b"\x7f") == "garbled"
    assert isinstance(decode_optical(Beacon(nonce=NONCE).encode()), Beacon)


@pytest.mark.parametrize(
    "text, variant",
    [("V0", Variant.V0_BASELINE), ("v2", Variant.V2_INTERMEDIATE), ("V3_SOPHISTICATED", Variant.V3_SOPHISTICATED)],
)
def test_variant_names(text, variant) -> None:
    assert Variant.parse(text) is variant


def test_unknown_variant() -> None:
    with pytest.raises(ValueError):
        Variant.parse("V4")


def test_checks_grow_with_the_variant() -> None:
    ordered = [CHECKS_BY_VARIANT[v] for v in Variant]
    for weaker, stronger in zip(ordered, ordered[1:]):
        assert weaker < stronger
    assert AbortReason.TIMING_VIOLATION in CHECKS_BY_VARIANT[Variant.V3_SOPHISTICATED]
    assert AbortReason.TIMING_VIOLATION not in CHECKS_BY_VARIANT[Variant.V2_INTERMEDIATE]


def test_puf_deadline_budget() -> None:
    budget = TimingBudget.from_estimate(30.0, DEFAULT_CONSTANTS)
    assert budget.tau_puf == pytest.approx(2 * 30.0 / 3.0e8 + 100e-6 + 50e-6)
    assert budget.beacon_window == DEFAULT_CONSTANTS.beacon_window


# state machine


def test_certified_variants_need_credentials(provider, rng) -> None:
    with pytest.raises(HandshakeSetupError):
        initiate(Variant.V1_BASIC, _context(provider, rng), "v2")
    with pytest.raises(HandshakeSetupError):
        accept(Variant.V3_SOPHISTICATED, _context(provider, rng), "v2")


def test_initiator_opens_and_times_out(provider, rng) -> None:
    state, hello = initiate(Variant.V0_BASELINE, _context(provider, rng), "v2", now=0.5)
    assert state.phase is Phase.HELLO_SENT
    assert hello.role is Role.INITIATOR
    send, timer = opening_actions(state, hello)
    assert isinstance(send, SendRadio) and decode_radio(send.payload) == [hello]
    assert isinstance(timer, SetTimer) and timer.deadline == pytest.approx(2.5)

    state, actions = step(state, TimerExpired(name=TimerName.HANDSHAKE, at=2.5))
    assert actions == []
    assert state.phase is Phase.ABORTED
    assert state.abort_reason is AbortReason.HANDSHAKE_TIMEOUT

    state.log.clear()
    state, actions = step(state, TimerExpired(name=TimerName.HANDSHAKE, at=3.0))
    assert actions == [] and state.abort_reason is AbortReason.HANDSHAKE_TIMEOUT


@pytest.mark.parametrize(
    "hello",
    [
        Hello(role=Role.RESPONDER, nonce=NONCE, variant=Variant.V0_BASELINE),
        Hello(role=Role.INITIATOR, nonce=NONCE, variant=Variant.V1_BASIC),
    ],
)
def test_responder_rejects_a_wrong_hello(provider, rng, hello) -> None:
    state, _ = accept(Variant.V0_BASELINE, _context(provider, rng, "v2"), "v1")
    event = MessageReceived(payload=encode_flight([hello]), at=0.1, origin="v1")
    state, actions = step(state, event)
    assert actions == []
    assert state.abort_reason is AbortReason.MALFORMED


def test_responder_answers_hello(provider, rng) -> None:
    state, _ = accept(Variant.V0_BASELINE, _context(provider, rng, "v2"), "v1")
    hello = Hello(role=Role.INITIATOR, nonce=NONCE, variant=Variant.V0_BASELINE)
    state, actions = step(state, MessageReceived(payload=encode_flight([hello]), at=0.1, origin="v1"))
    assert state.phase is Phase.KEY_EXCHANGE
    (reply,) = decode_radio(actions[0].payload)
    assert reply.role is Role.RESPONDER and reply.nonce == state.my_nonce


# honest runs


@pytest.mark.parametrize("variant", ["v0", "v1", "v2", "v3"])
def test_honest_handshake_establishes(variant) -> None:
    simulation, trace, verdict, initiator, responder = _established(variant)
    assert verdict.outcome is Outcome.SECURE_RUN
    assert initiator.phase is Phase.ESTABLISHED and responder.phase is Phase.ESTABLISHED
    assert initiator.transcript == responder.transcript
    assert initiator.session_keys == responder.session_keys
    assert all(s.binding.consistent for s in verdict.sessions)
    assert simulation.endpoints[("v2", "v2")].texts["v1"] == [b"hazard ahead"]
    assert trace.find(TraceCategory.PROTO, actor="v2", event="delivered")


def test_honest_puf_round_trip_meets_deadline() -> None:
    _, trace, _, _, _ = _established("v3")
    checks = trace.find(TraceCategory.PROTO, event="puf_response")
    assert {r.actor for r in checks} == {"v1", "v2"}
    for record in checks:
        margin = float(record.get("tau_puf")) - float(record.get("elapsed"))
        assert margin > 0.5 * DEFAULT_CONSTANTS.puf_slack


def test_records_are_ordered_and_authenticated() -> None:
    _, _, _, initiator, responder = _established("v1")
    first = session_send(initiator, b"slow down")
    second = session_send(initiator, b"stopping")
    assert session_recv(responder, first) == b"slow down"
    assert session_recv(responder, second) == b"stopping"
    with pytest.raises(SessionDecryptError):
        session_recv(responder, first)
    third = session_send(initiator, b"clear")
    with pytest.raises(SessionDecryptError):
        session_recv(responder, third[:-1] + bytes([third[-1] ^ 1]))
    reply = session_send(responder, b"ack")
    assert session_recv(initiator, reply) == b"ack"


def test_no_records_before_establishment(provider, rng) -> None:
    state, _ = initiate(Variant.V0_BASELINE, _context(provider, rng), "v2")
    with pytest.raises(SessionStateError):
        session_send(state, b"too early")


@pytest.mark.slow
@pytest.mark.parametrize("variant", ["V1", "V2"])
@pytest.mark.parametrize("index", range(6))
@pytest.mark.parametrize("bit", [5, 61, 300])
def test_flipped_bits_abort_the_handshake(two_cars, variant, index, bit) -> None:
    scenario = two_cars(variant=variant, radio="active")
    trace, verdict = Simulation(scenario, BitFlipPolicy(index=index, bit=bit)).execute()
    assert verdict.outcome is Outcome.HANDSHAKE_ABORTED, trace.text()
    assert trace.find(TraceCategory.ADV, event="modify")


def _sessions_agree(simulation: Simulation) -> bool:
    initiator = simulation.endpoints[("v1", "v1")].sessions.get("v2")
    responder = simulation.endpoints[("v2", "v2")].sessions.get("v1")
    if initiator is None or responder is None:
        return True
    if not (initiator.phase is Phase.ESTABLISHED and responder.phase is Phase.ESTABLISHED):
        return True
    return (
        initiator.transcript == responder.transcript
        and initiator.session_keys == responder.session_keys
    )


@pytest.mark.slow
def test_no_bit_flip_yields_divergent_established_sessions() -> None:
    honest = shipped_scenario("honest-v3")
    active = honest.adversary.model_copy(update={"radio_control": RadioControl.ACTIVE})
    scenario = honest.model_copy(update={"adversary": active})
    recorded = Simulation(scenario)
    recorded.execute()
    frames = len(recorded.controller.branch_points)
    assert frames >= 4
    rng = np.random.default_rng(1024)
    bits = list(range(1024)) + [int(b) for b in rng.integers(1024, 1 << 16, size=1024)]
    for index in range(frames):
        for bit in bits:
            simulation = Simulation(scenario, BitFlipPolicy(index=index, bit=bit))
            _, verdict = simulation.execute()
            assert verdict.outcome is not Outcome.ERROR, verdict.diagnostic
            assert _sessions_agree(simulation), f"frame {index} bit {bit}"
