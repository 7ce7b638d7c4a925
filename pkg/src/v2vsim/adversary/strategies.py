"""Scripted attacks.

Each strategy fires on the victim's first Hello to its peer and then lets
its puppets run the handshake. The result is either an AttackTrace that
replays to the same violation, or the abort reasons that stopped it.
"""

from v2vsim.logger import get_logger
from v2vsim.results import (
    AttackTrace,
    Deviation,
    Outcome,
    StrategyFailed,
    TimedAction,
    Verdict,
)
from v2vsim.sim.engine import Simulation
from v2vsim.sim.scenario import Scenario
from v2vsim.sim.trace import Trace

from .power import STRATEGY_ACTIONS, IndexedPolicy, StrategyName, StrategyPolicy

logger = get_logger(__name__)


class StrategyConfigError(Exception):
    pass


def _roles(scenario: Scenario, strategy: StrategyName) -> tuple[str, str]:
    power = scenario.adversary
    ids = scenario.vehicle_ids
    if power.victim is None or power.peer is None:
        raise StrategyConfigError(f"{strategy.value} needs adversary victim and peer")
    for role, vehicle_id in (("victim", power.victim), ("peer", power.peer)):
        if vehicle_id not in ids:
            raise StrategyConfigError(f"{role} {vehicle_id!r} is not in the scenario")
    if power.owns(power.victim):
        raise StrategyConfigError(f"victim {power.victim!r} is adversary-owned")
    if not power.owns_vehicles:
        raise StrategyConfigError(f"{strategy.value} needs at least one owned vehicle")
    return power.victim, power.peer


def attack_from_run(
    strategy: str,
    deviations: list[Deviation],
    simulation: Simulation,
    trace: Trace,
    verdict: Verdict,
) -> AttackTrace | StrategyFailed:
    lines = trace.lines()
    if verdict.outcome is Outcome.ATTACK_FOUND and verdict.violation is not None:
        return AttackTrace(
            deviations=deviations,
            actions=list(simulation.controller.actions),
            violated=verdict.violation.property,
            witness=verdict.violation.witness,
            party=verdict.violation.party,
            strategy=strategy,
            trace_lines=lines,
        )
    return StrategyFailed(
        strategy=strategy,
        abort_reasons=dict(verdict.abort_reasons),
        outcome=verdict.outcome,
        trace_lines=lines,
    )


def run_strategy(scenario: Scenario, strategy: StrategyName) -> AttackTrace | StrategyFailed:
    if strategy not in STRATEGY_ACTIONS:
        raise StrategyConfigError(f"{strategy.value} is not a scripted strategy")
    victim, peer = _roles(scenario, strategy)
    policy = StrategyPolicy(strategy=strategy, victim=victim, peer=peer)
    simulation = Simulation(scenario, policy)
    trace, verdict = simulation.execute()
    deviations = []
    if policy.fired_at is not None:
        deviations = [
            Deviation(index=policy.fired_at, action=action)
            for action in STRATEGY_ACTIONS[strategy]
        ]
    result = attack_from_run(strategy.value, deviations, simulation, trace, verdict)
    logger.info("%s on %s: %s", strategy.value, scenario.name, result.summary())
    return result


def strategy_mitm_relay(scenario: Scenario) -> AttackTrace | StrategyFailed:
    """Answer the victim as its peer and open toward the peer as the victim."""
    return run_strategy(scenario, StrategyName.MITM_RELAY)


def strategy_twin(scenario: Scenario) -> AttackTrace | StrategyFailed:
    """Answer the victim from an owned vehicle that looks like the peer."""
    return run_strategy(scenario, StrategyName.TWIN)


def strategy_optical_relay(scenario: Scenario) -> AttackTrace | StrategyFailed:
    """Answer from a relay at the claimed pose, forwarding PUF work to the certified vehicle."""
    return run_strategy(scenario, StrategyName.OPTICAL_RELAY)


def replay_attack(scenario: Scenario, attack: AttackTrace) -> tuple[Trace, Verdict]:
    policy = IndexedPolicy(deviations=tuple(attack.deviations), label=f"replay-{attack.strategy}")
    return Simulation(scenario, policy).execute()


def timeline(attack: AttackTrace) -> list[str]:
    """Human-readable adversary timeline."""
    return [_describe(action) for action in attack.actions]


def _describe(action: TimedAction) -> str:
    return f"t={action.time:.6f}s {action.action} {action.detail}".rstrip()
