import pytest
from pydantic import ValidationError

from v2vsim.adversary import (
    AdversaryPower,
    Derivability,
    FrameView,
    IndexedPolicy,
    KnowledgeBase,
    RadioControl,
    Sort,
    StrategyName,
    StrategyPolicy,
    knowledge_oracle,
    opens_handshake,
)
from v2vsim.adversary.search import (
    SearchBudgetExceeded,
    SearchConfigError,
    bounded_search,
    evaluate_node,
)
from v2vsim.adversary.strategies import (
    StrategyConfigError,
    replay_attack,
    run_strategy,
    strategy_mitm_relay,
    strategy_optical_relay,
    strategy_twin,
    timeline,
)
from v2vsim.crypto import AlgorithmId, StandardProvider
from v2vsim.protocol import Beacon, Hello, Role, Variant, encode_flight
from v2vsim.results import (
    AdversaryAction,
    AttackTrace,
    Deviation,
    NoAttackFound,
    Outcome,
    SecurityProperty,
    StrategyFailed,
)
from v2vsim.sim.engine import Simulation
from v2vsim.sim.scenario import CertificateKind, shipped_scenario
from v2vsim.sim.trace import TraceCategory


def _view(index: int = 0, opens: bool = True, origin: str = "v1", addressee: str = "v2") -> FrameView:
    return FrameView(
        index=index,
        origin=origin,
        claimed_sender=origin,
        addressee=addressee,
        label="Hello",
        opens_handshake=opens,
    )


# knowledge


def test_empty_knowledge_derives_nothing(provider) -> None:
    kb = KnowledgeBase(provider)
    assert knowledge_oracle(kb, b"anything") is Derivability.NOT_DERIVABLE


def test_hashes_of_known_values(provider) -> None:
    kb = KnowledgeBase(provider)
    kb.add(b"plate V2-2002", Sort.DATA)
    once = provider.hash(b"plate V2-2002")
    assert kb.query(once) is Derivability.DERIVABLE
    assert kb.query(b"plate V2-2002") is Derivability.DERIVABLE


def test_depth_cap_bounds_the_closure(provider) -> None:
    thrice = provider.hash(provider.hash(provider.hash(b"seed")))
    shallow = KnowledgeBase(provider, depth_cap=2)
    shallow.add(b"seed", Sort.DATA)
    assert shallow.query(thrice) is Derivability.NOT_DERIVABLE_WITHIN_BOUND
    deep = KnowledgeBase(provider, depth_cap=6)
    deep.add(b"seed", Sort.DATA)
    assert deep.query(thrice) is Derivability.DERIVABLE


def test_key_agreement_needs_a_secret(provider) -> None:
    alice = provider.gen_keypair(b"\x01" * 32, AlgorithmId.X25519)
    bob = provider.gen_keypair(b"\x02" * 32, AlgorithmId.X25519)
    shared = provider.dh_shared(alice.secret_part, bob.public_part)

    eavesdropper = KnowledgeBase(provider)
    eavesdropper.add(alice.public_part, Sort.PUBLIC)
    eavesdropper.add(bob.public_part, Sort.PUBLIC)
    assert eavesdropper.query(shared) is not Derivability.DERIVABLE

    insider = KnowledgeBase(provider)
    insider.add(bob.public_part, Sort.PUBLIC)
    insider.learn_secret(alice.secret_part)
    assert insider.query(shared) is Derivability.DERIVABLE


def test_knowledge_only_grows(provider) -> None:
    kb = KnowledgeBase(provider)
    kb.add(b"first", Sort.DATA)
    digest = provider.hash(b"first")
    assert kb.query(digest) is Derivability.DERIVABLE
    before = len(kb)
    kb.add(b"second", Sort.DATA)
    kb.add(b"first", Sort.DATA, depth=3)
    assert len(kb) == before + 1
    assert kb.query(digest) is Derivability.DERIVABLE


def test_observed_hello_nonce_is_public(provider) -> None:
    kb = KnowledgeBase(provider)
    nonce = bytes(range(16))
    hello = Hello(role=Role.INITIATOR, nonce=nonce, variant=Variant.V0_BASELINE)
    payload = encode_flight([hello])
    kb.observe_radio(payload, ("v1", "v2"))
    assert nonce in kb
    assert opens_handshake(payload)
    reply = Hello(role=Role.RESPONDER, nonce=nonce, variant=Variant.V0_BASELINE)
    assert not opens_handshake(encode_flight([reply]))
    assert not opens_handshake(b"\x00garbage")


def _observed_hello(kb: KnowledgeBase) -> bytes:
    hello = Hello(role=Role.INITIATOR, nonce=bytes(range(16)), variant=Variant.V2_INTERMEDIATE)
    kb.observe_radio(encode_flight([hello]), ("v1", "v2"))
    return hello.encode()


def test_finished_and_echo_macs_are_derivable_from_a_known_key(provider) -> None:
    kb = KnowledgeBase(provider)
    transcript = _observed_hello(kb)
    beacon = Beacon(nonce=b"\x07" * 16)
    kb.observe_optical(beacon.encode())
    key = b"\x42" * 32
    kb.add(key, Sort.KEY)
    digest = provider.hash(transcript)
    assert kb.query(provider.mac(key, digest)) is Derivability.DERIVABLE
    assert kb.query(provider.mac(key, beacon.nonce + digest)) is Derivability.DERIVABLE
    assert kb.query(provider.mac(key, beacon.nonce + digest), depth_cap=2) is not (
        Derivability.DERIVABLE
    )
    assert kb.query(provider.mac(b"\x43" * 32, digest)) is not Derivability.DERIVABLE


def test_mac_goals_can_be_skipped(provider) -> None:
    kb = KnowledgeBase(provider)
    transcript = _observed_hello(kb)
    key = b"\x42" * 32
    kb.add(key, Sort.KEY)
    tag = provider.mac(key, provider.hash(transcript))
    assert kb.query(tag) is Derivability.DERIVABLE
    assert kb.query(tag, mac_goal=False) is not Derivability.DERIVABLE


def test_repeated_queries_reuse_the_closure(provider, monkeypatch) -> None:
    kb = KnowledgeBase(provider)
    _observed_hello(kb)
    kb.add(b"\x42" * 32, Sort.KEY)
    calls = []
    real_mac = StandardProvider.mac

    def counting_mac(self: StandardProvider, key: bytes, message: bytes) -> bytes:
        calls.append(key)
        return real_mac(self, key, message)

    monkeypatch.setattr(StandardProvider, "mac", counting_mac)
    kb.query(b"\x00" * 32)
    first = len(calls)
    assert first > 0
    for value in range(50):
        kb.query(bytes([value]) * 32)
    assert len(calls) == first

    # a new observation starts a new generation
    kb.observe_optical(Beacon(nonce=b"\x09" * 16).encode())
    kb.query(b"\x00" * 32)
    assert len(calls) > first


def test_replayed_flight_extends_the_transcripts(provider) -> None:
    kb = KnowledgeBase(provider)
    transcript = _observed_hello(kb)
    reply = Hello(role=Role.RESPONDER, nonce=b"\x01" * 16, variant=Variant.V2_INTERMEDIATE)
    assert kb.query(provider.hash(transcript + reply.encode())) is not Derivability.DERIVABLE
    kb.observe_radio(encode_flight([reply]), ("v2", "v1"))
    assert kb.query(provider.hash(transcript + reply.encode())) is Derivability.DERIVABLE


# power and policies


def test_certificates_must_belong_to_owned_vehicles() -> None:
    with pytest.raises(ValidationError):
        AdversaryPower(owns_vehicles=("v3",), certificates=("v2",))
    with pytest.raises(ValidationError):
        AdversaryPower(owns_vehicles=("v3",), grant_signing_keys=("v3",))
    power = AdversaryPower(radio_control=RadioControl.ACTIVE, owns_vehicles=("v3",))
    assert power.active and power.owns("v3") and not power.owns("v1")


def test_indexed_policy_applies_deviations_in_order() -> None:
    policy = IndexedPolicy(
        deviations=(
            Deviation(index=2, action=AdversaryAction.REPLAY),
            Deviation(index=2, action=AdversaryAction.DROP),
            Deviation(index=4, action=AdversaryAction.SWAP),
        )
    )
    assert policy.decide(_view(index=2)) == [AdversaryAction.DROP, AdversaryAction.REPLAY]
    assert policy.decide(_view(index=3)) == []


def test_strategy_policy_fires_once_on_the_victims_hello() -> None:
    policy = StrategyPolicy(strategy=StrategyName.MITM_RELAY, victim="v1", peer="v2")
    assert policy.decide(_view(opens=False)) == []
    assert policy.decide(_view(origin="v2", addressee="v1")) == []
    assert policy.decide(_view(index=3)) == [
        AdversaryAction.INJECT_ANSWER,
        AdversaryAction.INJECT_OPEN,
    ]
    assert policy.fired_at == 3
    assert policy.decide(_view(index=7)) == []


def test_passive_adversary_cannot_deviate(two_cars) -> None:
    scenario = two_cars(variant="V1", radio="passive")
    policy = IndexedPolicy(deviations=(Deviation(index=0, action=AdversaryAction.DROP),))
    trace, verdict = Simulation(scenario, policy).execute()
    assert verdict.outcome is Outcome.SECURE_RUN
    assert trace.find(TraceCategory.ADV, event="capability_denied")


# scripted strategies


def test_mitm_breaks_plain_key_exchange() -> None:
    scenario = shipped_scenario("ps-baseline")
    attack = strategy_mitm_relay(scenario)
    assert isinstance(attack, AttackTrace)
    assert attack.violated is SecurityProperty.SECRECY
    assert attack.party == "v1"
    assert attack.witness == "brake warning"
    assert [d.action for d in attack.deviations] == [
        AdversaryAction.INJECT_ANSWER,
        AdversaryAction.INJECT_OPEN,
    ]
    assert any("decrypted" in line for line in timeline(attack))


def test_replayed_attack_reproduces_the_run() -> None:
    scenario = shipped_scenario("ps-baseline")
    attack = strategy_mitm_relay(scenario)
    trace, verdict = replay_attack(scenario, attack)
    assert verdict.outcome is Outcome.ATTACK_FOUND
    assert verdict.violation.witness == attack.witness
    assert trace.lines() == attack.trace_lines


def test_certificates_stop_the_mitm() -> None:
    result = strategy_mitm_relay(shipped_scenario("basic-defense"))
    assert isinstance(result, StrategyFailed)
    assert result.abort_reasons["v1"] in ("CERT_ATTR_MISMATCH", "BAD_SIGNATURE")


def test_twin_fools_static_attributes() -> None:
    attack = strategy_twin(shipped_scenario("twin-attack"))
    assert isinstance(attack, AttackTrace)
    assert attack.violated is SecurityProperty.AUTHENTICATION
    assert "identity=t" in attack.witness


def test_laser_coupling_stops_the_twin() -> None:
    result = strategy_twin(shipped_scenario("laser-defense"))
    assert isinstance(result, StrategyFailed)
    assert result.abort_reasons["v1"] in ("DYNAMIC_COUPLING_FAILED", "BEACON_TIMEOUT")


def test_optical_relay_fools_beacons() -> None:
    attack = strategy_optical_relay(shipped_scenario("relay-attack"))
    assert isinstance(attack, AttackTrace)
    assert attack.violated is SecurityProperty.AUTHENTICATION
    assert "identity=r" in attack.witness and "physical=x" in attack.witness


def test_puf_deadline_stops_the_relay() -> None:
    result = strategy_optical_relay(shipped_scenario("puf-defense"))
    assert isinstance(result, StrategyFailed)
    assert result.abort_reasons["v1"] == "TIMING_VIOLATION"
    assert any("relay_puf" in line for line in result.trace_lines)


def test_strategies_need_roles() -> None:
    with pytest.raises(StrategyConfigError):
        strategy_mitm_relay(shipped_scenario("honest-v0"))
    with pytest.raises(StrategyConfigError):
        run_strategy(shipped_scenario("ps-baseline"), StrategyName.SEARCH)


# bounded search


def test_search_without_actions_is_one_run() -> None:
    result = bounded_search(shipped_scenario("search-v0"), 0)
    assert isinstance(result, NoAttackFound)
    assert result.explored == 1
    assert result.statistics.peak_rss_bytes > 0


def test_search_finds_the_plain_exchange_attack() -> None:
    result = bounded_search(shipped_scenario("search-v0"), 1)
    assert isinstance(result, AttackTrace)
    assert result.violated is SecurityProperty.SECRECY
    assert result.strategy == "search"
    assert len(result.deviations) == 1
    trace, verdict = replay_attack(shipped_scenario("search-v0"), result)
    assert verdict.outcome is Outcome.ATTACK_FOUND


def test_search_argument_checks() -> None:
    scenario = shipped_scenario("search-v0")
    with pytest.raises(SearchConfigError):
        bounded_search(scenario, 9)
    with pytest.raises(SearchConfigError):
        bounded_search(scenario, -1)
    with pytest.raises(SearchConfigError):
        bounded_search(scenario, 1, workers=0)


def test_search_budget_is_enforced() -> None:
    with pytest.raises(SearchBudgetExceeded) as caught:
        bounded_search(shipped_scenario("search-v1"), 2, node_budget=2)
    assert caught.value.statistics.explored == 1
    assert caught.value.statistics.frontier > 1


def test_children_extend_in_increasing_order() -> None:
    scenario = shipped_scenario("search-v1")
    root = evaluate_node(scenario, ())
    assert root.outcome is Outcome.SECURE_RUN
    children = root.children()
    assert children
    first = evaluate_node(scenario, children[0])
    for grandchild in first.children():
        keys = [d.sort_key() for d in grandchild]
        assert keys == sorted(set(keys))


@pytest.mark.slow
def test_parallel_search_matches_serial() -> None:
    scenario = shipped_scenario("search-v0")
    serial = bounded_search(scenario, 1)
    parallel = bounded_search(scenario, 1, workers=2)
    assert isinstance(parallel, AttackTrace)
    assert [d.label() for d in parallel.deviations] == [d.label() for d in serial.deviations]


def test_pruning_is_reported_and_can_be_switched_off() -> None:
    scenario = shipped_scenario("search-v1")
    pruned = bounded_search(scenario, 1)
    exhaustive = bounded_search(scenario, 1, prune=False)
    assert isinstance(pruned, NoAttackFound) and isinstance(exhaustive, NoAttackFound)
    assert not pruned.exhaustive and exhaustive.exhaustive
    assert pruned.explored == exhaustive.explored
    assert exhaustive.statistics.pruned == 0
    assert pruned.summary() == (
        f"NO_ATTACK_FOUND(explored={pruned.explored}, pruned={pruned.statistics.pruned})"
    )
    assert exhaustive.summary() == f"NO_ATTACK_FOUND(explored={exhaustive.explored}, exhaustive)"


@pytest.mark.slow
def test_unpruned_search_explores_at_least_as_much() -> None:
    scenario = shipped_scenario("search-v1")
    pruned = bounded_search(scenario, 2)
    exhaustive = bounded_search(scenario, 2, prune=False)
    assert isinstance(pruned, NoAttackFound) and isinstance(exhaustive, NoAttackFound)
    assert exhaustive.explored >= pruned.explored


@pytest.mark.slow
def test_search_at_six_actions_finds_the_plain_exchange_attack() -> None:
    scenario = shipped_scenario("search-v0")
    result = bounded_search(scenario, 6)
    assert isinstance(result, AttackTrace)
    assert result.violated is SecurityProperty.SECRECY
    trace, verdict = replay_attack(scenario, result)
    assert verdict.outcome is Outcome.ATTACK_FOUND
    assert verdict.violation.property is result.violated
    assert verdict.violation.party == result.party
    assert verdict.violation.witness == result.witness


@pytest.mark.slow
@pytest.mark.parametrize("name", ["search-v1", "search-v2", "search-v3"])
def test_search_at_six_actions_finds_nothing_against_defended_variants(name: str) -> None:
    result = bounded_search(shipped_scenario(name), 6)
    assert isinstance(result, NoAttackFound), result.summary()
    assert result.explored <= 10**6
    assert result.statistics.elapsed_seconds < 60.0


# adversary variations on the scripted attacks


def _with_power(scenario, **update):
    return scenario.model_copy(update={"adversary": scenario.adversary.model_copy(update=update)})


def _with_certificate(scenario, vehicle_id: str, kind: CertificateKind):
    vehicles = tuple(
        v.model_copy(update={"certificate": kind}) if v.id == vehicle_id else v
        for v in scenario.vehicles
    )
    return scenario.model_copy(update={"vehicles": vehicles})


def test_relay_answering_with_its_own_puf_fails_verification() -> None:
    scenario = _with_power(shipped_scenario("puf-defense"), relay_answers_locally=True)
    result = strategy_optical_relay(scenario)
    assert isinstance(result, StrategyFailed)
    assert result.abort_reasons["v1"] == "PUF_VERIFY_FAILED"
    assert not any("relay_puf" in line for line in result.trace_lines)


def test_mitm_can_rewrite_the_bridged_text() -> None:
    scenario = _with_power(shipped_scenario("ps-baseline"), tamper="turn right now")
    attack = strategy_mitm_relay(scenario)
    assert isinstance(attack, AttackTrace)
    assert attack.witness == "brake warning"
    trace, _ = replay_attack(scenario, attack)
    delivered = [r.get("text") for r in trace.find(TraceCategory.PROTO, actor="v2", event="delivered")]
    assert delivered == ["turn right now"]
    assert any("tampered" in line for line in timeline(attack))


@pytest.mark.parametrize(
    "kind", [CertificateKind.FORGED, CertificateKind.EXPIRED, CertificateKind.NONE]
)
def test_twin_without_a_valid_certificate_is_rejected(kind) -> None:
    scenario = _with_certificate(shipped_scenario("twin-attack"), "t", kind)
    result = strategy_twin(scenario)
    assert isinstance(result, StrategyFailed)
    assert result.abort_reasons["v1"] == "BAD_CERT"
