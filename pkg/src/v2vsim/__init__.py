from .adversary.search import SearchBudgetExceeded, SearchConfigError, bounded_search
from .adversary.strategies import (
    StrategyConfigError,
    replay_attack,
    strategy_mitm_relay,
    strategy_optical_relay,
    strategy_twin,
)
from .config import DEFAULT_CONSTANTS, SimConstants
from .logger import get_logger
from .results import (
    AttackTrace,
    NoAttackFound,
    Outcome,
    SecurityProperty,
    StrategyFailed,
    Verdict,
)
from .sim import Scenario, Trace, load_scenario, load_scenario_file, run, shipped_scenario

__all__ = [
    "run",
    "load_scenario",
    "load_scenario_file",
    "shipped_scenario",
    "Scenario",
    "Trace",
    "bounded_search",
    "strategy_mitm_relay",
    "strategy_twin",
    "strategy_optical_relay",
    "replay_attack",
    "SimConstants",
    "DEFAULT_CONSTANTS",
    "get_logger",
    "Outcome",
    "SecurityProperty",
    "Verdict",
    "AttackTrace",
    "StrategyFailed",
    "NoAttackFound",
    "StrategyConfigError",
    "SearchConfigError",
    "SearchBudgetExceeded",
]
