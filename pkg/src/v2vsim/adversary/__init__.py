# strategies and search drive the simulator; import them from their modules
# so the sim package can depend on this one.
from .controller import (
    ADVERSARY_ACTOR,
    AdversaryController,
    BranchPoint,
    Puppet,
    PuppetMode,
    SimulationHost,
    opens_handshake,
)
from .knowledge import (
    Derivability,
    KnowledgeBase,
    KnowledgeItem,
    Sort,
    knowledge_oracle,
)
from .power import (
    STRATEGY_ACTIONS,
    AdversaryCapabilityError,
    AdversaryPolicy,
    AdversaryPower,
    BitFlipPolicy,
    FrameView,
    IndexedPolicy,
    PassivePolicy,
    RadioControl,
    StrategyName,
    StrategyPolicy,
)

__all__ = [
    "ADVERSARY_ACTOR",
    "AdversaryController",
    "BranchPoint",
    "Puppet",
    "PuppetMode",
    "SimulationHost",
    "opens_handshake",
    "Derivability",
    "KnowledgeBase",
    "KnowledgeItem",
    "Sort",
    "knowledge_oracle",
    "STRATEGY_ACTIONS",
    "AdversaryCapabilityError",
    "AdversaryPolicy",
    "AdversaryPower",
    "BitFlipPolicy",
    "FrameView",
    "IndexedPolicy",
    "PassivePolicy",
    "RadioControl",
    "StrategyName",
    "StrategyPolicy",
]
