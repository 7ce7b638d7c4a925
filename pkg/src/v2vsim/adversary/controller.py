"""Dolev-Yao radio controller.

Every radio frame passes through `AdversaryController.mediate` before it is
delivered. Honest handshake frames are numbered in send order; the policy
may deviate on any of them. Injected traffic comes from puppets: handshake
engines the adversary runs on an owned vehicle with the keys of a
certificate it holds.
"""

from enum import Enum
from typing import Protocol

from pydantic import BaseModel, ConfigDict, Field

from v2vsim.channel import RadioChannel, RadioDelivery, RadioFrame
from v2vsim.config import SimConstants
from v2vsim.crypto import KeyPair
from v2vsim.identity import Certificate, StaticAttributes
from v2vsim.logger import get_logger
from v2vsim.protocol.messages import (
    Hello,
    MalformedMessageError,
    MessageType,
    Role,
    decode_radio,
    describe_radio,
)
from v2vsim.protocol.state import HandshakeState
from v2vsim.results import AdversaryAction, TimedAction
from v2vsim.world.pose import Pose, WorldState

from .knowledge import KnowledgeBase, Sort
from .power import (
    AdversaryCapabilityError,
    AdversaryPolicy,
    AdversaryPower,
    FrameView,
    PassivePolicy,
)

logger = get_logger(__name__)

ADVERSARY_ACTOR = "adversary"


class PuppetMode(str, Enum):
    ANSWER = "answer"
    OPEN = "open"
    RELAY = "relay"


class Puppet(BaseModel):
    model_config = ConfigDict(frozen=True)

    vehicle: str = Field(..., description="Owned vehicle the puppet transmits from")
    impersonates: str = Field(..., description="Party the puppet claims to be")
    identity_vehicle: str | None = Field(
        default=None, description="Owner of the certificate the puppet presents"
    )
    mode: PuppetMode

    @property
    def actor(self) -> str:
        return f"{self.vehicle}@{self.impersonates}"


class BranchPoint(BaseModel):
    """An honest handshake frame and the deviations possible on it."""

    model_config = ConfigDict(frozen=True)

    view: FrameView
    actions: tuple[AdversaryAction, ...]


class SimulationHost(Protocol):
    """What the controller needs from the running simulation."""

    constants: SimConstants

    @property
    def now(self) -> float: ...

    def appearance(self, vehicle_id: str) -> StaticAttributes: ...

    def credentials(self, vehicle_id: str) -> tuple[Certificate | None, KeyPair]: ...

    def current_pose(self, vehicle_id: str) -> Pose: ...

    def has_vehicle(self, vehicle_id: str) -> bool: ...

    def register_puppet(self, puppet: Puppet) -> None: ...

    def schedule_open(self, puppet: Puppet, peer: str) -> None: ...

    def trace_adversary(self, action: str, **detail: object) -> None: ...


class AdversaryController:
    def __init__(
        self,
        power: AdversaryPower,
        policy: AdversaryPolicy | None,
        knowledge: KnowledgeBase,
    ):
        self.power = power
        self.policy = policy or PassivePolicy()
        self.knowledge = knowledge
        self.host: SimulationHost | None = None
        self.hijacks: dict[tuple[str, str], Puppet] = {}
        self.puppets: dict[tuple[str, str], Puppet] = {}
        self.branch_points: list[BranchPoint] = []
        self.actions: list[TimedAction] = []
        self.recovered: list[bytes] = []
        self._next_index = 0

    def attach(self, host: SimulationHost) -> None:
        self.host = host
        for vehicle_id in self.power.owns_vehicles:
            if host.has_vehicle(vehicle_id):
                _, keys = host.credentials(vehicle_id)
                self.knowledge.add(keys.secret_part, Sort.SECRET)
        for vehicle_id in self.power.grant_signing_keys:
            if host.has_vehicle(vehicle_id):
                _, keys = host.credentials(vehicle_id)
                self.knowledge.add(keys.secret_part, Sort.SECRET)
                self._record("grant_signing_key", vehicle=vehicle_id)

    @property
    def _host(self) -> SimulationHost:
        if self.host is None:
            raise AdversaryCapabilityError("controller is not attached to a simulation")
        return self.host

    def _record(self, action: str, **detail: object) -> None:
        host = self._host
        text = ";".join(f"{k}={detail[k]}" for k in sorted(detail))
        self.actions.append(
            TimedAction(time=host.now, actor=ADVERSARY_ACTOR, action=action, detail=text)
        )
        host.trace_adversary(action, **detail)

    # credentials and sites

    def held_certificates(self) -> list[tuple[str, Certificate]]:
        held = []
        for vehicle_id in self.power.certificates:
            if not self._host.has_vehicle(vehicle_id):
                continue
            cert, _ = self._host.credentials(vehicle_id)
            if cert is not None:
                held.append((vehicle_id, cert))
        return held

    def identity_for(self, impersonated: str) -> str | None:
        """Held certificate that looks like the impersonated vehicle, else the first."""
        held = self.held_certificates()
        if not held:
            return None
        if self._host.has_vehicle(impersonated):
            looks = self._host.appearance(impersonated).appearance()
            for vehicle_id, cert in held:
                if cert.subject_attributes.appearance() == looks:
                    return vehicle_id
        return held[0][0]

    def _owned_present(self) -> list[str]:
        return [v for v in self.power.owns_vehicles if self._host.has_vehicle(v)]

    def _home_site(self, identity: str | None) -> str | None:
        if identity is not None:
            return identity
        owned = self._owned_present()
        return owned[0] if owned else None

    def _relay_site(self, addressee: str) -> str | None:
        owned = self._owned_present()
        if not owned or not self._host.has_vehicle(addressee):
            return None
        target = self._host.current_pose(addressee)
        return min(owned, key=lambda v: (self._host.current_pose(v).distance_to(target), v))

    def _puppet(self, mode: PuppetMode, impersonates: str) -> Puppet | None:
        identity = self.identity_for(impersonates)
        if mode is PuppetMode.RELAY:
            site = self._relay_site(impersonates)
            if site is None or identity is None or site == identity:
                return None
        else:
            site = self._home_site(identity)
            if site is None:
                return None
        key = (site, impersonates)
        existing = self.puppets.get(key)
        if existing is not None:
            return existing
        puppet = Puppet(vehicle=site, impersonates=impersonates, identity_vehicle=identity, mode=mode)
        self.puppets[key] = puppet
        self._host.register_puppet(puppet)
        return puppet

    def possible_actions(self, view: FrameView) -> tuple[AdversaryAction, ...]:
        if not self.power.active:
            return ()
        actions = [
            AdversaryAction.DROP,
            AdversaryAction.DELAY,
            AdversaryAction.REPLAY,
            AdversaryAction.SWAP,
        ]
        if view.opens_handshake:
            identity = self.identity_for(view.addressee)
            if self._home_site(identity) is not None:
                actions.append(AdversaryAction.INJECT_ANSWER)
            if (
                self._host.has_vehicle(view.addressee)
                and not self.power.owns(view.addressee)
                and self._home_site(self.identity_for(view.claimed_sender)) is not None
            ):
                actions.append(AdversaryAction.INJECT_OPEN)
            site = self._relay_site(view.addressee)
            if identity is not None and site is not None and site != identity:
                actions.append(AdversaryAction.RELAY_OPTICAL)
        return tuple(actions)

    # radio mediation

    def mediate(
        self, channel: RadioChannel, world: WorldState, origin: str, frame: RadioFrame
    ) -> list[RadioDelivery]:
        self.knowledge.observe_radio(frame.payload, (frame.claimed_sender, frame.addressee))
        if self.power.owns(origin):
            return self._deliver(channel, world, origin, frame, frame.addressee)
        hijacked = self.hijacks.get((origin, frame.addressee))
        default_receiver = hijacked.vehicle if hijacked else frame.addressee
        if not frame.payload or frame.payload[0] != MessageType.FLIGHT:
            return self._deliver(channel, world, origin, frame, default_receiver)

        view = FrameView(
            index=self._next_index,
            origin=origin,
            claimed_sender=frame.claimed_sender,
            addressee=frame.addressee,
            label=describe_radio(frame.payload),
            opens_handshake=opens_handshake(frame.payload),
        )
        self._next_index += 1
        self.branch_points.append(BranchPoint(view=view, actions=self.possible_actions(view)))
        chosen = self.policy.decide(view)
        if chosen and not self.power.active:
            self._record("capability_denied", index=view.index, wanted=chosen[0].value)
            chosen = []

        deliveries: list[RadioDelivery] = []
        consumed = False
        delay = self._host.constants.adversary_delay
        for action in chosen:
            detail = {"index": view.index, "frame": view.label}
            if action is AdversaryAction.DROP:
                consumed = True
            elif action is AdversaryAction.DELAY:
                consumed = True
                deliveries += self._deliver(channel, world, origin, frame, default_receiver, delay)
            elif action is AdversaryAction.REPLAY:
                deliveries += self._deliver(
                    channel, world, origin, frame, default_receiver, delay, injected=True
                )
            elif action is AdversaryAction.SWAP:
                consumed = True
                swapped = frame.model_copy(
                    update={"claimed_sender": frame.addressee, "addressee": frame.claimed_sender}
                )
                deliveries += self._deliver(channel, world, origin, swapped, origin, injected=True)
            elif action is AdversaryAction.MODIFY:
                consumed = True
                modified = frame.model_copy(
                    update={"payload": self.policy.modify(view, frame.payload)}
                )
                deliveries += self._deliver(
                    channel, world, origin, modified, default_receiver, injected=True
                )
            elif action in (AdversaryAction.INJECT_ANSWER, AdversaryAction.RELAY_OPTICAL):
                mode = (
                    PuppetMode.ANSWER
                    if action is AdversaryAction.INJECT_ANSWER
                    else PuppetMode.RELAY
                )
                puppet = self._puppet(mode, frame.addressee)
                if puppet is None:
                    self._record("no_site", action=action.value, **detail)
                    continue
                consumed = True
                self.hijacks[(origin, frame.addressee)] = puppet
                detail["puppet"] = puppet.actor
                deliveries += self._deliver(channel, world, origin, frame, puppet.vehicle)
            elif action is AdversaryAction.INJECT_OPEN:
                puppet = self._puppet(PuppetMode.OPEN, frame.claimed_sender)
                if puppet is None or not self._host.has_vehicle(frame.addressee):
                    self._record("no_site", action=action.value, **detail)
                    continue
                consumed = True
                self.hijacks[(frame.addressee, frame.claimed_sender)] = puppet
                self._host.schedule_open(puppet, frame.addressee)
                detail["puppet"] = puppet.actor
            self._record(action.value.lower(), **detail)
        if not consumed:
            deliveries += self._deliver(channel, world, origin, frame, default_receiver)
        return deliveries

    def _deliver(
        self,
        channel: RadioChannel,
        world: WorldState,
        origin: str,
        frame: RadioFrame,
        receiver: str,
        extra_delay: float = 0.0,
        injected: bool = False,
    ) -> list[RadioDelivery]:
        if receiver not in world.poses or receiver == origin and not injected:
            return []
        if receiver != origin and not channel.in_range(world, origin, receiver):
            self._host.trace_adversary(
                "out_of_range", frm=origin, to=receiver, frame=describe_radio(frame.payload)
            )
            return []
        arrive_at = channel.arrival_time(world, origin, receiver, frame.sent_at) + extra_delay
        return [
            RadioDelivery(
                receiver=receiver,
                frame=frame,
                arrive_at=arrive_at,
                origin=origin,
                injected=injected,
            )
        ]

    # puppet hooks

    def learn(self, state: HandshakeState) -> None:
        self.knowledge.learn_handshake(state)

    def observe_optical(self, payload: bytes) -> None:
        self.knowledge.observe_optical(payload)

    def puf_source(self, puppet: Puppet) -> tuple[str, float]:
        """Vehicle whose PUF answers for the puppet and the forwarding delay."""
        if (
            puppet.mode is PuppetMode.RELAY
            and puppet.identity_vehicle is not None
            and not self.power.relay_answers_locally
        ):
            host = self._host
            constants = host.constants
            hop = host.current_pose(puppet.vehicle).distance_to(
                host.current_pose(puppet.identity_vehicle)
            )
            one_way = constants.relay_processing_delay + constants.radio_latency + hop / constants.c_sim
            return puppet.identity_vehicle, 2.0 * one_way
        return puppet.vehicle, 0.0

    def on_plaintext(self, puppet: Puppet, peer: str, plaintext: bytes) -> tuple[Puppet, str, bytes] | None:
        """Record recovered data; return the bridge leg that should carry it on."""
        self.recovered.append(plaintext)
        self.knowledge.add(plaintext, Sort.DATA)
        self._record(
            "decrypted",
            puppet=puppet.actor,
            frm=peer,
            text=plaintext.decode("utf-8", errors="replace"),
        )
        for other in self.puppets.values():
            if other.impersonates == peer and other is not puppet:
                forwarded = plaintext
                if self.power.tamper is not None:
                    forwarded = self.power.tamper.encode("utf-8")
                    self._record(
                        "tampered",
                        puppet=other.actor,
                        text=self.power.tamper,
                    )
                return other, puppet.impersonates, forwarded
        return None


def opens_handshake(payload: bytes) -> bool:
    try:
        decoded = decode_radio(payload)
    except MalformedMessageError:
        return False
    if not isinstance(decoded, list) or not decoded:
        return False
    first = decoded[0]
    return isinstance(first, Hello) and first.role is Role.INITIATOR
