from enum import Enum

from pydantic import BaseModel, Field

from v2vsim.protocol.state import PeerBinding


class Outcome(str, Enum):
    SECURE_RUN = "SECURE_RUN"
    ATTACK_FOUND = "ATTACK_FOUND"
    HANDSHAKE_ABORTED = "HANDSHAKE_ABORTED"
    ERROR = "ERROR"

    @property
    def exit_code(self) -> int:
        return _EXIT_CODES[self]


_EXIT_CODES = {
    Outcome.SECURE_RUN: 0,
    Outcome.ATTACK_FOUND: 2,
    Outcome.HANDSHAKE_ABORTED: 3,
    Outcome.ERROR: 1,
}


class SecurityProperty(str, Enum):
    SECRECY = "SECRECY"
    AUTHENTICATION = "AUTHENTICATION"


class RunStatistics(BaseModel):
    events_processed: int = Field(default=0, description="Events popped from the queue")
    radio_frames: int = Field(default=0, description="Frames handed to the channel")
    optical_pulses: int = Field(default=0, description="Pulses that reached a receiver")
    search_nodes: int = Field(default=0, description="Nodes explored by a search")


class SessionOutcome(BaseModel):
    """Where one party's handshake ended up."""

    party: str = Field(..., description="Vehicle running the handshake")
    peer: str = Field(..., description="Peer the party believes it talks to")
    phase: str = Field(..., description="Final phase name")
    abort_reason: str | None = Field(default=None, description="Abort reason if aborted")
    binding: PeerBinding | None = Field(
        default=None, description="Peer binding recorded at ESTABLISHED"
    )

    def signature(self) -> tuple[str, str, str, str | None]:
        return (self.party, self.peer, self.phase, self.abort_reason)


class Violation(BaseModel):
    property: SecurityProperty
    party: str = Field(..., description="Honest party whose session is compromised")
    witness: str = Field(..., description="Recovered secret or mismatched binding")


class Verdict(BaseModel):
    outcome: Outcome
    violation: Violation | None = None
    abort_reasons: dict[str, str] = Field(
        default_factory=dict, description="Abort reason per aborted party"
    )
    sessions: list[SessionOutcome] = Field(default_factory=list)
    statistics: RunStatistics = Field(default_factory=RunStatistics)
    diagnostic: str | None = Field(default=None, description="Set for ERROR verdicts")

    @property
    def exit_code(self) -> int:
        return self.outcome.exit_code

    def outcome_signature(self) -> tuple[tuple[str, str, str, str | None], ...]:
        return tuple(sorted(s.signature() for s in self.sessions))


class AdversaryAction(str, Enum):
    DROP = "DROP"
    DELAY = "DELAY"
    REPLAY = "REPLAY"
    SWAP = "SWAP"
    INJECT_ANSWER = "INJECT_ANSWER"
    INJECT_OPEN = "INJECT_OPEN"
    RELAY_OPTICAL = "RELAY_OPTICAL"
    MODIFY = "MODIFY"

    @property
    def code(self) -> int:
        return _ACTION_CODES[self]


_ACTION_CODES = {action: code for code, action in enumerate(AdversaryAction, start=1)}

# actions the bounded search enumerates, in exploration order
SEARCH_ACTIONS: tuple[AdversaryAction, ...] = tuple(
    a for a in AdversaryAction if a is not AdversaryAction.MODIFY
)


class Deviation(BaseModel):
    """Adversary action applied to the index-th honest radio send."""

    index: int = Field(..., ge=0, description="Position among honest radio sends")
    action: AdversaryAction

    def sort_key(self) -> tuple[int, int]:
        return (self.index, self.action.code)

    def label(self) -> str:
        return f"{self.index}:{self.action.value}"


class TimedAction(BaseModel):
    time: float
    actor: str
    action: str
    detail: str = ""


class AttackTrace(BaseModel):
    deviations: list[Deviation] = Field(
        default_factory=list, description="Replayable adversary choices"
    )
    actions: list[TimedAction] = Field(
        default_factory=list, description="Adversary actions as they happened"
    )
    violated: SecurityProperty
    witness: str
    party: str
    strategy: str = Field(..., description="Strategy or 'search'")
    trace_lines: list[str] = Field(default_factory=list, repr=False)

    def summary(self) -> str:
        steps = ", ".join(d.label() for d in self.deviations) or "scripted"
        return f"{self.violated.value} at {self.party} via {self.strategy} [{steps}]"


class StrategyFailed(BaseModel):
    strategy: str
    abort_reasons: dict[str, str] = Field(default_factory=dict)
    outcome: Outcome
    trace_lines: list[str] = Field(default_factory=list, repr=False)

    def summary(self) -> str:
        reasons = ", ".join(f"{p}={r}" for p, r in sorted(self.abort_reasons.items()))
        return f"FAILED({reasons or self.outcome.value})"


class SearchStatistics(BaseModel):
    explored: int = Field(default=0, description="Simulator runs performed")
    depth: int = Field(default=0, description="Deepest completed BFS level")
    frontier: int = Field(default=0, description="Nodes waiting at abort time")
    pruned: int = Field(default=0, description="Inert deviations not expanded")
    peak_rss_bytes: int = Field(default=0, description="Peak resident set size")
    elapsed_seconds: float = 0.0


class NoAttackFound(BaseModel):
    explored: int
    statistics: SearchStatistics
    exhaustive: bool = Field(
        default=False, description="False when outcome-preserving children were pruned"
    )

    def summary(self) -> str:
        if self.exhaustive:
            return f"NO_ATTACK_FOUND(explored={self.explored}, exhaustive)"
        return f"NO_ATTACK_FOUND(explored={self.explored}, pruned={self.statistics.pruned})"
