import argparse
import os
import sys

from v2vsim.adversary.search import SearchBudgetExceeded, SearchConfigError, bounded_search
from v2vsim.adversary.strategies import timeline
from v2vsim.logger import get_logger
from v2vsim.results import AttackTrace, Verdict

from .demos import list_demos, run_demo
from .engine import Simulation
from .scenario import MAX_SEED, Scenario, ScenarioError, load_scenario_file
from .trace import Trace

logger = get_logger(__name__)

SEED_ENV = "V2VSIM_SEED"
USAGE_ERROR = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="v2vsim", description="V2V authentication simulator")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    run_cmd = commands.add_parser("run", help="run one scenario file")
    run_cmd.add_argument("scenario", help="path to a .scn file")
    run_cmd.add_argument("--trace", help="write the trace to this path")
    run_cmd.add_argument("--seed", type=int, help="override the scenario seed")

    search_cmd = commands.add_parser("search", help="bounded attack search")
    search_cmd.add_argument("scenario", help="path to a .scn file")
    search_cmd.add_argument("--max-actions", type=int, help="deviation budget (0..8)")
    search_cmd.add_argument("--workers", type=int, default=1, help="worker processes")
    search_cmd.add_argument("--node-budget", type=int, help="override search_node_budget")
    search_cmd.add_argument(
        "--no-prune",
        action="store_true",
        help="expand children whose outcome matches their parent's",
    )
    search_cmd.add_argument("--seed", type=int, help="override the scenario seed")

    demo_cmd = commands.add_parser("demo", help="run a built-in demo")
    demo_cmd.add_argument("name", help="demo name, see list-demos")
    demo_cmd.add_argument("--trace", help="write the trace to this path")
    demo_cmd.add_argument("--seed", type=int, help="override the demo seed")

    commands.add_parser("list-demos", help="list built-in demos")
    return parser


def resolve_seed(flag: int | None) -> int | None:
    """--seed wins over V2VSIM_SEED; neither means the file's seed."""
    if flag is not None:
        seed = flag
    elif os.getenv(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    else:
        return None
    if not 0 <= seed <= MAX_SEED:
        raise UsageError(f"seed {seed} is not a 64-bit unsigned integer")
    return seed


def _load(path: str, seed: int | None) -> Scenario:
    scenario = load_scenario_file(path)
    return scenario.with_seed(seed) if seed is not None else scenario


def _print_verdict(verdict: Verdict) -> None:
    print(f"outcome: {verdict.outcome.value}")
    if verdict.violation is not None:
        v = verdict.violation
        print(f"violation: {v.property.value} at {v.party} ({v.witness})")
    for party, reason in sorted(verdict.abort_reasons.items()):
        print(f"aborted: {party} {reason}")
    for session in verdict.sessions:
        print(f"session: {session.party} -> {session.peer} {session.phase}")
    if verdict.diagnostic:
        print(f"diagnostic: {verdict.diagnostic}")


def _write_trace(trace: Trace, path: str | None) -> None:
    if path:
        trace.write(path)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario, resolve_seed(args.seed))
    trace, verdict = Simulation(scenario).execute()
    _write_trace(trace, args.trace)
    _print_verdict(verdict)
    return verdict.exit_code


def cmd_search(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario, resolve_seed(args.seed))
    max_actions = args.max_actions
    if max_actions is None:
        max_actions = scenario.adversary.max_actions
    try:
        result = bounded_search(
            scenario,
            max_actions,
            workers=args.workers,
            node_budget=args.node_budget,
            prune=not args.no_prune,
        )
    except SearchConfigError as exc:
        raise UsageError(str(exc)) from None
    except SearchBudgetExceeded as exc:
        stats = exc.statistics
        print(f"search aborted: {exc}", file=sys.stderr)
        print(f"peak rss: {stats.peak_rss_bytes} bytes", file=sys.stderr)
        return USAGE_ERROR
    print(result.summary())
    if isinstance(result, AttackTrace):
        for line in timeline(result):
            print(f"  {line}")
        print(f"witness: {result.witness}")
        return 2
    print(
        f"depth {result.statistics.depth}, pruned {result.statistics.pruned}, "
        f"{result.statistics.elapsed_seconds:.2f}s"
    )
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    result, trace = run_demo(args.name, resolve_seed(args.seed))
    _write_trace(trace, args.trace)
    print(f"demo {result.spec.name}: {result.spec.description}")
    for line in result.narrative:
        print(f"  {line}")
    print(f"expected {result.spec.expected.value}: {'met' if result.met else 'NOT met'}")
    return result.exit_code


def cmd_list_demos(args: argparse.Namespace) -> int:
    for spec in list_demos():
        print(f"{spec.name:<14} {spec.expected.value:<18} {spec.description}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "search": cmd_search,
    "demo": cmd_demo,
    "list-demos": cmd_list_demos,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return USAGE_ERROR
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(f"cannot read or write: {exc}", file=sys.stderr)
        return USAGE_ERROR
