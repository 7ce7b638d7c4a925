"""Bounded breadth-first attack search.

A node is a tuple of deviations `(index, action)` in strictly increasing
lexicographic order. Its children extend it with a deviation taken from the
branch points of its own run, so every child shares its parent's run up to
the new deviation. With pruning on, a child whose every session ends where
its parent's did is counted but not extended; with it off the enumeration
is exhaustive up to the action bound.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import psutil
from pydantic import BaseModel, ConfigDict

from v2vsim.logger import get_logger
from v2vsim.results import (
    AttackTrace,
    Deviation,
    NoAttackFound,
    Outcome,
    SearchStatistics,
)
from v2vsim.sim.engine import Simulation
from v2vsim.sim.scenario import Scenario

from .controller import BranchPoint
from .power import IndexedPolicy
from .strategies import attack_from_run

logger = get_logger(__name__)

MAX_SEARCH_ACTIONS = 8
SEARCH_LABEL = "search"


class SearchConfigError(Exception):
    pass


class SearchBudgetExceeded(Exception):
    def __init__(self, statistics: SearchStatistics):
        self.statistics = statistics
        super().__init__(
            f"node budget exhausted after {statistics.explored} runs "
            f"(depth {statistics.depth}, frontier {statistics.frontier})"
        )


class NodeResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    deviations: tuple[Deviation, ...]
    outcome: Outcome
    signature: tuple[tuple[str, str, str, str | None], ...]
    branch_points: tuple[BranchPoint, ...]
    attack: AttackTrace | None = None

    def children(self) -> list[tuple[Deviation, ...]]:
        last = self.deviations[-1].sort_key() if self.deviations else None
        extended = []
        for point in self.branch_points:
            for action in sorted(point.actions, key=lambda a: a.code):
                deviation = Deviation(index=point.view.index, action=action)
                if last is None or deviation.sort_key() > last:
                    extended.append(self.deviations + (deviation,))
        return extended


def evaluate_node(scenario: Scenario, deviations: tuple[Deviation, ...]) -> NodeResult:
    """Run the scenario under one deviation tuple."""
    policy = IndexedPolicy(deviations=deviations, label=SEARCH_LABEL)
    simulation = Simulation(scenario, policy)
    trace, verdict = simulation.execute()
    attack = None
    if verdict.outcome is Outcome.ATTACK_FOUND:
        found = attack_from_run(SEARCH_LABEL, list(deviations), simulation, trace, verdict)
        attack = found if isinstance(found, AttackTrace) else None
    return NodeResult(
        deviations=deviations,
        outcome=verdict.outcome,
        signature=verdict.outcome_signature(),
        branch_points=tuple(simulation.controller.branch_points),
        attack=attack,
    )


def _rss() -> int:
    return psutil.Process().memory_info().rss


def bounded_search(
    scenario: Scenario,
    max_actions: int,
    workers: int = 1,
    node_budget: int | None = None,
    prune: bool = True,
) -> AttackTrace | NoAttackFound:
    if not 0 <= max_actions <= MAX_SEARCH_ACTIONS:
        raise SearchConfigError(f"max_actions must be in 0..{MAX_SEARCH_ACTIONS}, got {max_actions}")
    if workers < 1:
        raise SearchConfigError(f"workers must be positive, got {workers}")
    budget = node_budget if node_budget is not None else scenario.constants.search_node_budget
    started = time.perf_counter()
    stats = SearchStatistics(peak_rss_bytes=_rss())

    def finish() -> SearchStatistics:
        stats.elapsed_seconds = time.perf_counter() - started
        stats.peak_rss_bytes = max(stats.peak_rss_bytes, _rss())
        return stats

    root = evaluate_node(scenario, ())
    stats.explored = 1
    if root.attack is not None:
        logger.info("honest run of %s already violates a property", scenario.name)
        return root.attack
    frontier = [root]
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for depth in range(1, max_actions + 1):
            batch: list[tuple[NodeResult, tuple[Deviation, ...]]] = [
                (parent, child) for parent in frontier for child in parent.children()
            ]
            if not batch:
                break
            if stats.explored + len(batch) > budget:
                stats.frontier = len(batch)
                raise SearchBudgetExceeded(finish())
            run = partial(evaluate_node, scenario)
            candidates = [child for _, child in batch]
            if executor is not None:
                results = list(executor.map(run, candidates, chunksize=max(1, len(batch) // (4 * workers))))
            else:
                results = [run(child) for child in candidates]
            next_frontier = []
            for (parent, _), result in zip(batch, results):
                stats.explored += 1
                if result.attack is not None:
                    stats.depth = depth
                    finish()
                    logger.info(
                        "search found %s after %d runs", result.attack.summary(), stats.explored
                    )
                    return result.attack
                if prune and result.signature == parent.signature:
                    stats.pruned += 1
                else:
                    next_frontier.append(result)
            stats.depth = depth
            stats.peak_rss_bytes = max(stats.peak_rss_bytes, _rss())
            logger.info(
                "depth %d: %d runs, %d kept, %d pruned so far",
                depth,
                len(batch),
                len(next_frontier),
                stats.pruned,
            )
            frontier = next_frontier
            if not frontier:
                break
    finally:
        if executor is not None:
            executor.shutdown()
    stats.frontier = 0
    finish()
    return NoAttackFound(explored=stats.explored, statistics=stats, exhaustive=not prune)
