from abc import ABC, abstractmethod
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from v2vsim.results import AdversaryAction, Deviation


class AdversaryCapabilityError(Exception):
    pass


class RadioControl(str, Enum):
    PASSIVE = "passive"
    ACTIVE = "active"


class StrategyName(str, Enum):
    MITM_RELAY = "mitm_relay"
    TWIN = "twin"
    OPTICAL_RELAY = "optical_relay"
    SEARCH = "search"


class AdversaryPower(BaseModel):
    """What the adversary can physically and cryptographically do."""

    model_config = ConfigDict(frozen=True)

    radio_control: RadioControl = Field(default=RadioControl.PASSIVE)
    owns_vehicles: tuple[str, ...] = Field(
        default=(), description="Vehicles physically under adversary control"
    )
    certificates: tuple[str, ...] = Field(
        default=(),
        description="Owned vehicles whose certificate and signing key the adversary holds",
    )
    can_clone_static_attributes: bool = Field(
        default=False, description="Owned vehicles may copy another vehicle's looks"
    )
    strategy: StrategyName | None = None
    victim: str | None = Field(default=None, description="Honest initiator under attack")
    peer: str | None = Field(default=None, description="Vehicle the victim wants to reach")
    max_actions: int = Field(default=6, ge=0, le=8, description="Search depth")
    relay_answers_locally: bool = Field(
        default=False, description="Relay evaluates its own PUF instead of forwarding"
    )
    tamper: str | None = Field(
        default=None, description="Replacement text for bridged application data"
    )
    grant_signing_keys: tuple[str, ...] = Field(
        default=(), description="Honest vehicles whose signing keys leaked"
    )

    @model_validator(mode="after")
    def check_holdings(self):
        stray = [v for v in self.certificates if v not in self.owns_vehicles]
        if stray:
            raise ValueError(f"certificates of unowned vehicles: {', '.join(stray)}")
        overlap = [v for v in self.grant_signing_keys if v in self.owns_vehicles]
        if overlap:
            raise ValueError(f"granted keys belong to owned vehicles: {', '.join(overlap)}")
        return self

    @property
    def active(self) -> bool:
        return self.radio_control is RadioControl.ACTIVE

    def owns(self, vehicle_id: str) -> bool:
        return vehicle_id in self.owns_vehicles


class FrameView(BaseModel):
    """What a policy sees of an honest handshake frame before deciding."""

    model_config = ConfigDict(frozen=True)

    index: int
    origin: str
    claimed_sender: str
    addressee: str
    label: str
    opens_handshake: bool = Field(
        default=False, description="Frame carries an initiator Hello"
    )


class AdversaryPolicy(ABC, BaseModel):
    """Chooses the deviations applied to honest handshake frames."""

    @property
    @abstractmethod
    def name(self) -> str: ...

    @abstractmethod
    def decide(self, view: FrameView) -> list[AdversaryAction]: ...

    def modify(self, view: FrameView, payload: bytes) -> bytes:
        raise AdversaryCapabilityError(f"{self.name} policy does not rewrite frames")


class PassivePolicy(AdversaryPolicy):
    @property
    def name(self) -> str:
        return "passive"

    def decide(self, view: FrameView) -> list[AdversaryAction]:
        return []


class IndexedPolicy(AdversaryPolicy):
    """Replays a fixed set of deviations; used by the search and by replays."""

    deviations: tuple[Deviation, ...] = ()
    label: str = "search"

    @property
    def name(self) -> str:
        return self.label

    def decide(self, view: FrameView) -> list[AdversaryAction]:
        chosen = [d for d in self.deviations if d.index == view.index]
        return [d.action for d in sorted(chosen, key=Deviation.sort_key)]


STRATEGY_ACTIONS: dict[StrategyName, tuple[AdversaryAction, ...]] = {
    StrategyName.MITM_RELAY: (AdversaryAction.INJECT_ANSWER, AdversaryAction.INJECT_OPEN),
    StrategyName.TWIN: (AdversaryAction.INJECT_ANSWER,),
    StrategyName.OPTICAL_RELAY: (AdversaryAction.RELAY_OPTICAL,),
}


class StrategyPolicy(AdversaryPolicy):
    """Fires a scripted attack on the victim's first Hello to its peer."""

    strategy: StrategyName
    victim: str
    peer: str
    _fired_at: int | None = PrivateAttr(default=None)

    @property
    def name(self) -> str:
        return self.strategy.value

    @property
    def fired_at(self) -> int | None:
        return self._fired_at

    def decide(self, view: FrameView) -> list[AdversaryAction]:
        if (
            self._fired_at is not None
            or not view.opens_handshake
            or view.origin != self.victim
            or view.addressee != self.peer
        ):
            return []
        self._fired_at = view.index
        return list(STRATEGY_ACTIONS[self.strategy])


class BitFlipPolicy(AdversaryPolicy):
    """Flips one bit of one frame in flight."""

    index: int = Field(..., ge=0)
    bit: int = Field(..., ge=0)

    @property
    def name(self) -> str:
        return "bitflip"

    def decide(self, view: FrameView) -> list[AdversaryAction]:
        return [AdversaryAction.MODIFY] if view.index == self.index else []

    def modify(self, view: FrameView, payload: bytes) -> bytes:
        position = self.bit % (8 * len(payload))
        flipped = bytearray(payload)
        flipped[position // 8] ^= 0x80 >> (position % 8)
        return bytes(flipped)
