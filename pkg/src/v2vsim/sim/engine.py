"""Deterministic discrete-event engine.

Events sit in a min-heap keyed by (time, insertion sequence). Every random
draw comes from the scenario's single generator, consumed in a fixed order,
so one scenario and seed always give the same trace text.
"""

import heapq
from typing import NamedTuple

import numpy as np

from v2vsim.adversary.controller import (
    ADVERSARY_ACTOR,
    AdversaryController,
    Puppet,
    opens_handshake,
)
from v2vsim.adversary.knowledge import Derivability, KnowledgeBase
from v2vsim.adversary.power import AdversaryPolicy, PassivePolicy, StrategyName, StrategyPolicy
from v2vsim.channel import OpticalChannel, OpticalDelivery, RadioChannel, RadioDelivery, RadioFrame
from v2vsim.crypto import CryptoProvider, KeyPair, default_provider
from v2vsim.identity import (
    Certificate,
    CertificateAuthority,
    StaticAttributes,
    ValidityWindow,
)
from v2vsim.logger import get_logger
from v2vsim.protocol import (
    AbortReason,
    ApplicationRecord,
    CameraResult,
    CameraSighting,
    EvaluatePuf,
    FireOptical,
    HandshakeContext,
    HandshakeSetupError,
    HandshakeState,
    InputEvent,
    LidarResult,
    MessageReceived,
    OpticalReceived,
    PeerBinding,
    Phase,
    PufEvaluated,
    RequestCamera,
    RequestLidar,
    SendRadio,
    SessionDecryptError,
    SetTimer,
    TimerExpired,
    Variant,
    accept,
    describe_radio,
    initiate,
    opening_actions,
    session_recv,
    session_send,
    step,
)
from v2vsim.protocol.state import Action, Awaiting
from v2vsim.puf import CrpRecord, CrpVerifier, PufDevice, enroll_crps, puf_respond
from v2vsim.results import (
    Outcome,
    RunStatistics,
    SecurityProperty,
    SessionOutcome,
    Verdict,
    Violation,
)
from v2vsim.world.pose import Pose, WorldState, advance, extrapolate
from v2vsim.world.sensors import camera_observe, lidar_measure

from .scenario import CertificateKind, DirectiveKind, Scenario, VehicleSpec
from .trace import SimulationInvariantError, Trace, TraceCategory

logger = get_logger(__name__)

SIM_ACTOR = "sim"
UNFINISHED = "UNFINISHED"
UNKNOWN_PARTY = "unknown"


class _Initiate(NamedTuple):
    vehicle: str
    peer: str


class _SessionSend(NamedTuple):
    vehicle: str
    text: str


class _RadioArrival(NamedTuple):
    delivery: RadioDelivery


class _OpticalArrival(NamedTuple):
    delivery: OpticalDelivery


class _Input(NamedTuple):
    endpoint: tuple[str, str]
    peer: str
    event: InputEvent


class _PuppetOpen(NamedTuple):
    puppet: Puppet
    peer: str


class VehicleRuntime:
    """Long-term material of one vehicle: keys, certificate and PUF."""

    def __init__(
        self,
        vehicle_id: str,
        attributes: StaticAttributes,
        signing_keys: KeyPair,
        device: PufDevice,
        crps: list[CrpRecord],
        certificate: Certificate | None,
    ):
        self.vehicle_id = vehicle_id
        self.attributes = attributes
        self.signing_keys = signing_keys
        self.device = device
        self.crps = crps
        self.certificate = certificate


class Endpoint:
    """A handshake speaker: an honest vehicle, or a puppet on an owned one."""

    def __init__(self, vehicle: str, claimed_id: str, puppet: Puppet | None = None):
        self.vehicle = vehicle
        self.claimed_id = claimed_id
        self.puppet = puppet
        self.sessions: dict[str, HandshakeState] = {}
        self.texts: dict[str, list[bytes]] = {}
        self.latest_peer: str | None = None
        self.verifier = CrpVerifier()

    @property
    def key(self) -> tuple[str, str]:
        return (self.vehicle, self.claimed_id)

    @property
    def actor(self) -> str:
        return self.puppet.actor if self.puppet is not None else self.vehicle

    @property
    def honest(self) -> bool:
        return self.puppet is None


def policy_for(scenario: Scenario) -> AdversaryPolicy:
    """The policy a plain run uses: the scripted strategy, if one is named."""
    power = scenario.adversary
    if (
        power.strategy is not None
        and power.strategy is not StrategyName.SEARCH
        and power.victim is not None
        and power.peer is not None
    ):
        return StrategyPolicy(strategy=power.strategy, victim=power.victim, peer=power.peer)
    return PassivePolicy()


class Simulation:
    def __init__(
        self,
        scenario: Scenario,
        policy: AdversaryPolicy | None = None,
        provider: CryptoProvider | None = None,
    ):
        self.scenario = scenario
        self.constants = scenario.constants
        self.variant: Variant = scenario.variant
        self.provider = provider or default_provider()
        self.rng = np.random.default_rng(scenario.seed)
        self.trace = Trace()
        self.statistics = RunStatistics()
        self.world = WorldState(poses={v.id: v.pose for v in scenario.vehicles}, clock=0.0)
        self.knowledge = KnowledgeBase(self.provider, self.constants.knowledge_depth)
        self.policy = policy if policy is not None else policy_for(scenario)
        self.controller = AdversaryController(scenario.adversary, self.policy, self.knowledge)
        self.radio = RadioChannel(self.controller, self.constants)
        self.optical = OpticalChannel(self.constants)
        self._queue: list[tuple[float, int, object]] = []
        self._seq = 0

        self.ca = CertificateAuthority(
            keys=self.provider.gen_keypair(self.provider.random_seed(self.rng)),
            provider=self.provider,
        )
        self._rogue_ca: CertificateAuthority | None = None
        self.vehicles: dict[str, VehicleRuntime] = {}
        self.cert_owner: dict[bytes, str] = {}
        for spec in scenario.vehicles:
            self._provision(spec)

        self.endpoints: dict[tuple[str, str], Endpoint] = {}
        for spec in scenario.vehicles:
            if not scenario.adversary.owns(spec.id):
                self.endpoints[(spec.id, spec.id)] = Endpoint(spec.id, spec.id)
        self.controller.attach(self)

    # setup

    def _provision(self, spec: VehicleSpec) -> None:
        keys = self.provider.gen_keypair(self.provider.random_seed(self.rng))
        device = PufDevice.manufacture(
            spec.id, self.rng, self.constants.puf_response_latency, self.provider
        )
        crps = enroll_crps(device, spec.puf_crps, self.rng, self.provider) if spec.puf_crps else []
        window = ValidityWindow(
            valid_from=self.constants.cert_valid_from, valid_to=self.constants.cert_valid_to
        )
        certificate = None
        if spec.certificate is CertificateKind.VALID:
            certificate = self.ca.issue(spec.attributes, keys.public_part, crps, window)
        elif spec.certificate is CertificateKind.EXPIRED:
            closed = ValidityWindow(
                valid_from=self.constants.cert_valid_from - 2.0,
                valid_to=self.constants.cert_valid_from - 1.0,
            )
            certificate = self.ca.issue(spec.attributes, keys.public_part, crps, closed)
        elif spec.certificate is CertificateKind.FORGED:
            certificate = self._rogue().issue(spec.attributes, keys.public_part, crps, window)
        if certificate is not None:
            self.cert_owner[certificate.to_bytes()] = spec.id
        self.vehicles[spec.id] = VehicleRuntime(
            spec.id, spec.attributes, keys, device, crps, certificate
        )

    def _rogue(self) -> CertificateAuthority:
        if self._rogue_ca is None:
            self._rogue_ca = CertificateAuthority(
                keys=self.provider.gen_keypair(self.provider.random_seed(self.rng)),
                provider=self.provider,
            )
        return self._rogue_ca

    def _self_issued(self, vehicle_id: str) -> tuple[Certificate, KeyPair]:
        """Credentials an adversary without a CA certificate shows for its own car."""
        runtime = self.vehicles[vehicle_id]
        window = ValidityWindow(
            valid_from=self.constants.cert_valid_from, valid_to=self.constants.cert_valid_to
        )
        certificate = self._rogue().issue(
            runtime.attributes, runtime.signing_keys.public_part, runtime.crps, window
        )
        return certificate, runtime.signing_keys

    # SimulationHost

    @property
    def now(self) -> float:
        return self.world.clock

    def appearance(self, vehicle_id: str) -> StaticAttributes:
        return self.vehicles[vehicle_id].attributes

    def credentials(self, vehicle_id: str) -> tuple[Certificate | None, KeyPair]:
        runtime = self.vehicles[vehicle_id]
        return runtime.certificate, runtime.signing_keys

    def current_pose(self, vehicle_id: str) -> Pose:
        return self.world.pose(vehicle_id)

    def has_vehicle(self, vehicle_id: str) -> bool:
        return vehicle_id in self.vehicles

    def register_puppet(self, puppet: Puppet) -> None:
        key = (puppet.vehicle, puppet.impersonates)
        if key not in self.endpoints:
            self.endpoints[key] = Endpoint(puppet.vehicle, puppet.impersonates, puppet)

    def schedule_open(self, puppet: Puppet, peer: str) -> None:
        self._schedule(self.now, _PuppetOpen(puppet, peer))

    def trace_adversary(self, action: str, **detail: object) -> None:
        self.trace.emit(self.now, TraceCategory.ADV, ADVERSARY_ACTOR, event=action, **detail)

    # event queue

    def _schedule(self, at: float, item: object) -> None:
        if at < self.now:
            raise SimulationInvariantError(f"event scheduled in the past: {at:.9f} < {self.now:.9f}")
        heapq.heappush(self._queue, (at, self._seq, item))
        self._seq += 1

    def _advance_to(self, at: float) -> None:
        if at < self.now:
            raise SimulationInvariantError(f"clock would run backwards to {at:.9f}")
        if at > self.now:
            self.world = advance(self.world, at - self.now).model_copy(update={"clock": at})

    def execute(self) -> tuple[Trace, Verdict]:
        logger.info(
            "running %s (%s, seed %d, policy %s)",
            self.scenario.name,
            self.variant.name,
            self.scenario.seed,
            self.policy.name,
        )
        try:
            for directive in self.scenario.script:
                if directive.kind is DirectiveKind.INITIATE:
                    self._schedule(directive.at, _Initiate(directive.actor, directive.peer))
                else:
                    self._schedule(directive.at, _SessionSend(directive.actor, directive.text or ""))
            while self._queue:
                at, _, item = heapq.heappop(self._queue)
                if at > self.scenario.duration:
                    break
                self._advance_to(at)
                self.statistics.events_processed += 1
                self._dispatch(item)
            verdict = self._verdict()
        except Exception as exc:  # noqa: BLE001
            logger.error("run %s failed: %s", self.scenario.name, exc)
            verdict = Verdict(
                outcome=Outcome.ERROR,
                statistics=self.statistics,
                diagnostic=f"{type(exc).__name__}: {exc}",
            )
        self._emit_verdict(verdict)
        logger.info("%s finished: %s", self.scenario.name, verdict.outcome.value)
        return self.trace, verdict

    def _dispatch(self, item: object) -> None:
        if isinstance(item, _RadioArrival):
            self._on_radio(item.delivery)
        elif isinstance(item, _Input):
            endpoint = self.endpoints[item.endpoint]
            state = endpoint.sessions[item.peer]
            self._step(endpoint, state, item.event)
        elif isinstance(item, _OpticalArrival):
            self._on_optical(item.delivery)
        elif isinstance(item, _Initiate):
            self._open(self.endpoints[(item.vehicle, item.vehicle)], item.peer)
        elif isinstance(item, _PuppetOpen):
            self._open(self.endpoints[(item.puppet.vehicle, item.puppet.impersonates)], item.peer)
        elif isinstance(item, _SessionSend):
            self._session_send(item.vehicle, item.text)
        else:
            raise SimulationInvariantError(f"unknown queue item {item!r}")

    # endpoints

    def _pose_fn(self, vehicle_id: str):
        def pose_at(t: float) -> Pose:
            return extrapolate(self.world.pose(vehicle_id), t - self.world.clock)

        return pose_at

    def _context(self, endpoint: Endpoint, target: str | None = None) -> HandshakeContext:
        puppet = endpoint.puppet
        if puppet is None:
            runtime = self.vehicles[endpoint.vehicle]
            certificate, keys = runtime.certificate, runtime.signing_keys
            pose_at = self._pose_fn(endpoint.vehicle)
        else:
            certificate, keys = None, None
            if puppet.identity_vehicle is not None:
                certificate, keys = self.credentials(puppet.identity_vehicle)
            elif self.variant >= Variant.V1_BASIC:
                certificate, keys = self._self_issued(puppet.vehicle)
            looks_like = puppet.impersonates if self.has_vehicle(puppet.impersonates) else puppet.vehicle
            pose_at = self._pose_fn(looks_like)
        return HandshakeContext(
            party_id=endpoint.actor,
            provider=self.provider,
            rng=self.rng,
            ca_public=self.ca.public_key,
            signing_keys=keys,
            certificate=certificate,
            pose_at=pose_at,
            target_pose=self.world.pose(target) if target is not None else None,
            target_seen_at=self.now,
            crp_verifier=endpoint.verifier,
            constants=self.constants,
            trusting=puppet is not None,
        )

    def _open(self, endpoint: Endpoint, peer: str) -> None:
        existing = endpoint.sessions.get(peer)
        if existing is not None and not existing.terminal:
            self._proto(endpoint, "initiate_skipped", peer=peer, reason="session in progress")
            return
        try:
            state, hello = initiate(self.variant, self._context(endpoint, peer), peer, self.now)
        except HandshakeSetupError as exc:
            self._proto(endpoint, "cannot_start", peer=peer, reason=str(exc))
            return
        endpoint.sessions[peer] = state
        endpoint.texts.setdefault(peer, [])
        endpoint.latest_peer = peer
        self._proto(endpoint, "initiate", peer=peer, variant=self.variant.name)
        self._after_step(endpoint, state, opening_actions(state, hello))

    def _responder(self, endpoint: Endpoint, peer: str) -> HandshakeState | None:
        try:
            state, actions = accept(self.variant, self._context(endpoint), peer, self.now)
        except HandshakeSetupError as exc:
            self._proto(endpoint, "cannot_start", peer=peer, reason=str(exc))
            return None
        endpoint.sessions[peer] = state
        endpoint.texts.setdefault(peer, [])
        endpoint.latest_peer = peer
        self._proto(endpoint, "accept", peer=peer, variant=self.variant.name)
        self._after_step(endpoint, state, actions)
        return state

    def _step(self, endpoint: Endpoint, state: HandshakeState, event: InputEvent) -> None:
        state, actions = step(state, event)
        self._after_step(endpoint, state, actions)

    def _after_step(self, endpoint: Endpoint, state: HandshakeState, actions: list[Action]) -> None:
        for event, detail in state.log:
            self._proto(endpoint, event, **{"peer": state.peer_claimed_id, **detail})
        state.log.clear()
        if endpoint.puppet is not None:
            self.controller.learn(state)
        for action in actions:
            self._perform(endpoint, state, action)

    def _proto(self, endpoint: Endpoint, event: str, **detail: object) -> None:
        self.trace.emit(self.now, TraceCategory.PROTO, endpoint.actor, event=event, **detail)

    # actions

    def _perform(self, endpoint: Endpoint, state: HandshakeState, action: Action) -> None:
        peer = state.peer_claimed_id
        if isinstance(action, SendRadio):
            self._send_radio(endpoint, peer, action.payload)
        elif isinstance(action, RequestCamera):
            result = CameraResult(sightings=self._camera(endpoint.vehicle, action.at), at=self.now)
            self._schedule(self.now, _Input(endpoint.key, peer, result))
        elif isinstance(action, RequestLidar):
            measurement = lidar_measure(
                self.world, endpoint.vehicle, action.at, self.rng, self.constants
            )
            subject = None
            if measurement is not None:
                subject = self.world.vehicle_near(
                    action.at, self.constants.capture_radius, exclude=endpoint.vehicle
                )
            self.trace.emit(
                self.now,
                TraceCategory.SENSE,
                endpoint.actor,
                sensor="lidar",
                purpose=action.purpose,
                subject=subject or "-",
                range=measurement.range if measurement is not None else -1.0,
            )
            result = LidarResult(measurement=measurement, subject=subject, at=self.now)
            self._schedule(self.now, _Input(endpoint.key, peer, result))
        elif isinstance(action, FireOptical):
            self._fire(endpoint, action)
        elif isinstance(action, EvaluatePuf):
            self._evaluate_puf(endpoint, peer, action)
        elif isinstance(action, SetTimer):
            self._schedule(
                max(action.deadline, self.now),
                _Input(endpoint.key, peer, TimerExpired(name=action.name, at=action.deadline)),
            )
        else:
            raise SimulationInvariantError(f"unknown action {action!r}")

    def _camera(self, observer: str, at: Pose | None) -> tuple[CameraSighting, ...]:
        if at is None:
            subjects = [v for v in sorted(self.vehicles) if v != observer]
        else:
            near = self.world.vehicle_near(at, self.constants.capture_radius, exclude=observer)
            subjects = [near] if near is not None else []
        sightings = []
        for subject in subjects:
            observation = camera_observe(
                self.world,
                observer,
                subject,
                self.vehicles[subject].attributes,
                self.rng,
                self.constants,
            )
            if not observation.is_empty():
                sightings.append(CameraSighting(subject=subject, observation=observation))
        self.trace.emit(
            self.now,
            TraceCategory.SENSE,
            observer,
            sensor="camera",
            mode="scan" if at is None else "aimed",
            seen=",".join(s.subject for s in sightings) or "-",
        )
        return tuple(sightings)

    def _send_radio(self, endpoint: Endpoint, addressee: str, payload: bytes) -> None:
        frame = RadioFrame(
            claimed_sender=endpoint.claimed_id,
            addressee=addressee,
            payload=payload,
            sent_at=self.now,
        )
        self.statistics.radio_frames += 1
        self.trace.emit(
            self.now,
            TraceCategory.RADIO,
            endpoint.actor,
            event="send",
            to=addressee,
            frame=describe_radio(payload),
            h=payload,
            size=len(payload),
        )
        for delivery in self.radio.send(self.world, endpoint.vehicle, frame):
            self._schedule(delivery.arrive_at, _RadioArrival(delivery))

    def _fire(self, endpoint: Endpoint, action: FireOptical) -> None:
        status, delivery = self.optical.send(
            self.world, endpoint.vehicle, action.at, action.payload, self.now
        )
        self.trace.emit(
            self.now,
            TraceCategory.OPTICAL,
            endpoint.actor,
            event="fire",
            pulse=action.label,
            status=status,
            to=delivery.receiver if delivery is not None else "-",
        )
        if delivery is not None:
            self.statistics.optical_pulses += 1
            self._schedule(delivery.receipt.arrived_at, _OpticalArrival(delivery))

    def _evaluate_puf(self, endpoint: Endpoint, peer: str, action: EvaluatePuf) -> None:
        device_vehicle, extra = endpoint.vehicle, 0.0
        if endpoint.puppet is not None:
            device_vehicle, extra = self.controller.puf_source(endpoint.puppet)
            if device_vehicle != endpoint.vehicle:
                self.trace_adversary(
                    "relay_puf", puppet=endpoint.actor, device=device_vehicle, delay=extra
                )
        device = self.vehicles[device_vehicle].device
        response = puf_respond(device, action.challenge)
        ready_at = self.now + device.response_latency + extra
        self.trace.emit(
            self.now,
            TraceCategory.SENSE,
            endpoint.actor,
            sensor="puf",
            device=device_vehicle,
            ready_at=ready_at,
        )
        self._schedule(
            ready_at, _Input(endpoint.key, peer, PufEvaluated(response=response, at=ready_at))
        )

    # arrivals

    def _on_radio(self, delivery: RadioDelivery) -> None:
        frame = delivery.frame
        endpoint = self.endpoints.get((delivery.receiver, frame.addressee))
        self.trace.emit(
            self.now,
            TraceCategory.RADIO,
            delivery.receiver,
            event="recv",
            frm=frame.claimed_sender,
            origin=delivery.origin,
            to=frame.addressee,
            frame=describe_radio(frame.payload),
            h=frame.payload,
            injected=delivery.injected,
        )
        if endpoint is None:
            logger.warning(
                "frame for %s reached %s with no endpoint", frame.addressee, delivery.receiver
            )
            return
        peer = frame.claimed_sender
        state = endpoint.sessions.get(peer)
        if frame.payload and frame.payload[0] == ApplicationRecord.TYPE:
            self._on_record(endpoint, peer, state, frame.payload)
            return
        if state is None:
            if not opens_handshake(frame.payload):
                logger.warning(
                    "%s got %s from %s outside any session",
                    endpoint.actor,
                    describe_radio(frame.payload),
                    peer,
                )
                self._proto(endpoint, "no_session", peer=peer, frame=describe_radio(frame.payload))
                return
            state = self._responder(endpoint, peer)
            if state is None:
                return
        self._step(
            endpoint,
            state,
            MessageReceived(payload=frame.payload, at=self.now, origin=delivery.origin),
        )

    def _on_record(
        self, endpoint: Endpoint, peer: str, state: HandshakeState | None, payload: bytes
    ) -> None:
        if state is None or state.phase is not Phase.ESTABLISHED:
            self._proto(endpoint, "data_rejected", peer=peer, reason="no established session")
            return
        try:
            plaintext = session_recv(state, payload)
        except SessionDecryptError as exc:
            self._proto(endpoint, "data_rejected", peer=peer, reason=str(exc))
            return
        self._proto(endpoint, "data_received", peer=peer, h=plaintext)
        if endpoint.honest:
            endpoint.texts.setdefault(peer, []).append(plaintext)
            self._proto(
                endpoint,
                "delivered",
                peer=peer,
                text=plaintext.decode("utf-8", errors="replace"),
            )
            return
        bridge = self.controller.on_plaintext(endpoint.puppet, peer, plaintext)
        if bridge is None:
            return
        other, other_peer, forwarded = bridge
        other_endpoint = self.endpoints.get((other.vehicle, other.impersonates))
        other_state = other_endpoint.sessions.get(other_peer) if other_endpoint else None
        if other_state is None or other_state.phase is not Phase.ESTABLISHED:
            self.trace_adversary("bridge_down", puppet=other.actor, peer=other_peer)
            return
        self._send_radio(other_endpoint, other_peer, session_send(other_state, forwarded))

    def _on_optical(self, delivery: OpticalDelivery) -> None:
        receipt = delivery.receipt
        self.trace.emit(
            self.now,
            TraceCategory.OPTICAL,
            delivery.receiver,
            event="recv",
            frm=delivery.pulse.emitter,
            bearing=receipt.arrival_bearing,
            h=receipt.payload,
        )
        if self.scenario.adversary.owns(delivery.receiver):
            self.controller.observe_optical(receipt.payload)
        event = OpticalReceived(
            payload=receipt.payload, arrival_bearing=receipt.arrival_bearing, at=self.now
        )
        listeners = [
            (endpoint, state)
            for key, endpoint in sorted(self.endpoints.items())
            if key[0] == delivery.receiver
            for _, state in sorted(endpoint.sessions.items())
            if not state.terminal and state.awaiting in (Awaiting.PEER_BEACON, Awaiting.PEER_CHALLENGE)
        ]
        if not listeners:
            logger.debug("pulse at %s found no listening session", delivery.receiver)
            return
        for endpoint, state in listeners:
            self._step(endpoint, state, event)

    def _session_send(self, vehicle: str, text: str) -> None:
        endpoint = self.endpoints[(vehicle, vehicle)]
        peer = endpoint.latest_peer
        state = endpoint.sessions.get(peer) if peer is not None else None
        if state is None or state.phase is not Phase.ESTABLISHED:
            self._proto(endpoint, "send_skipped", peer=peer or "-", reason="no established session")
            return
        plaintext = text.encode("utf-8")
        endpoint.texts.setdefault(peer, []).append(plaintext)
        self._proto(endpoint, "session_send", peer=peer, text=text)
        self._send_radio(endpoint, peer, session_send(state, plaintext))

    # verdict

    def binding(self, state: HandshakeState) -> PeerBinding:
        peer = state.peer_claimed_id
        if self.variant is Variant.V0_BASELINE:
            identity = peer
            physical = peer
        else:
            identity = UNKNOWN_PARTY
            if state.peer_certificate is not None:
                identity = self.cert_owner.get(state.peer_certificate.to_bytes(), UNKNOWN_PARTY)
            physical = state.physical_subject or UNKNOWN_PARTY
        return PeerBinding(
            identity_party=identity,
            physical_party=physical,
            radio_party=state.peer_key_origin or UNKNOWN_PARTY,
        )

    def honest_sessions(self) -> list[tuple[Endpoint, HandshakeState]]:
        return [
            (endpoint, state)
            for _, endpoint in sorted(self.endpoints.items())
            if endpoint.honest
            for _, state in sorted(endpoint.sessions.items())
        ]

    def secrecy_witness(self, endpoint: Endpoint, state: HandshakeState) -> str | None:
        for text in endpoint.texts.get(state.peer_claimed_id, []):
            if self.knowledge.query(text, mac_goal=False) is Derivability.DERIVABLE:
                return text.decode("utf-8", errors="replace")
        if state.session_keys is not None:
            key = state.session_keys.client_write_key
            if self.knowledge.query(key, mac_goal=False) is Derivability.DERIVABLE:
                return f"session key {key.hex()[:16]}"
        return None

    def _verdict(self) -> Verdict:
        sessions: list[SessionOutcome] = []
        abort_reasons: dict[str, str] = {}
        secrecy: list[Violation] = []
        authentication: list[Violation] = []
        owned = self.scenario.adversary.owns
        for endpoint, state in self.honest_sessions():
            party, peer = endpoint.vehicle, state.peer_claimed_id
            binding = None
            reason = None
            if state.phase is Phase.ESTABLISHED:
                binding = self.binding(state)
                if binding.identity_party != UNKNOWN_PARTY and not owned(binding.identity_party):
                    witness = self.secrecy_witness(endpoint, state)
                    if witness is not None:
                        secrecy.append(
                            Violation(property=SecurityProperty.SECRECY, party=party, witness=witness)
                        )
                if not binding.consistent:
                    authentication.append(
                        Violation(
                            property=SecurityProperty.AUTHENTICATION,
                            party=party,
                            witness=(
                                f"identity={binding.identity_party},"
                                f"physical={binding.physical_party},"
                                f"radio={binding.radio_party}"
                            ),
                        )
                    )
            elif state.phase is Phase.ABORTED:
                reason = state.abort_reason.value if state.abort_reason else AbortReason.MALFORMED.value
                abort_reasons.setdefault(party, reason)
            else:
                reason = UNFINISHED
                abort_reasons.setdefault(party, reason)
            sessions.append(
                SessionOutcome(
                    party=party,
                    peer=peer,
                    phase=state.phase.name,
                    abort_reason=reason,
                    binding=binding,
                )
            )
        violations = secrecy + authentication
        if violations:
            outcome = Outcome.ATTACK_FOUND
        elif abort_reasons:
            outcome = Outcome.HANDSHAKE_ABORTED
        else:
            outcome = Outcome.SECURE_RUN
        return Verdict(
            outcome=outcome,
            violation=violations[0] if violations else None,
            abort_reasons=abort_reasons,
            sessions=sessions,
            statistics=self.statistics,
        )

    def _emit_verdict(self, verdict: Verdict) -> None:
        detail: dict[str, object] = {
            "outcome": verdict.outcome,
            "events": verdict.statistics.events_processed,
        }
        if verdict.violation is not None:
            detail["property"] = verdict.violation.property
            detail["party"] = verdict.violation.party
            detail["witness"] = verdict.violation.witness
        if verdict.abort_reasons:
            detail["aborts"] = ",".join(
                f"{p}:{r}" for p, r in sorted(verdict.abort_reasons.items())
            )
        if verdict.diagnostic:
            detail["diagnostic"] = verdict.diagnostic
        self.trace.emit(self.now, TraceCategory.VERDICT, SIM_ACTOR, **detail)


def run(scenario: Scenario, policy: AdversaryPolicy | None = None) -> tuple[Trace, Verdict]:
    """Execute one scenario; the adversary follows `policy` or the scenario's strategy."""
    return Simulation(scenario, policy).execute()
