"""Built-in demos: each attack paired with the scheme level that stops it."""

from pydantic import BaseModel, Field

from v2vsim.logger import get_logger
from v2vsim.results import Outcome, SecurityProperty, Verdict

from .engine import Simulation
from .scenario import ScenarioError, shipped_scenario
from .trace import Trace, TraceCategory

logger = get_logger(__name__)


class DemoSpec(BaseModel):
    name: str
    description: str
    expected: Outcome
    expected_property: SecurityProperty | None = None
    expected_reasons: tuple[str, ...] = Field(
        default=(), description="Any of these at the victim meets the expectation"
    )
    victim: str = "v1"


DEMOS: dict[str, DemoSpec] = {
    spec.name: spec
    for spec in (
        DemoSpec(
            name="ps-baseline",
            description="v3 answers v1 as v2 and bridges both sessions over plain key exchange",
            expected=Outcome.ATTACK_FOUND,
            expected_property=SecurityProperty.SECRECY,
        ),
        DemoSpec(
            name="basic-defense",
            description="the same man in the middle against attribute-bound certificates",
            expected=Outcome.HANDSHAKE_ABORTED,
            expected_reasons=("CERT_ATTR_MISMATCH", "BAD_SIGNATURE"),
        ),
        DemoSpec(
            name="twin-attack",
            description="a twin with cloned plate, brand and color and its own certificate",
            expected=Outcome.ATTACK_FOUND,
            expected_property=SecurityProperty.AUTHENTICATION,
        ),
        DemoSpec(
            name="laser-defense",
            description="the twin against laser-coupled dynamic attributes",
            expected=Outcome.HANDSHAKE_ABORTED,
            expected_reasons=("DYNAMIC_COUPLING_FAILED", "BEACON_TIMEOUT"),
        ),
        DemoSpec(
            name="relay-attack",
            description="a look-alike relay echoes the beacon for a certified vehicle 600 m away",
            expected=Outcome.ATTACK_FOUND,
            expected_property=SecurityProperty.AUTHENTICATION,
        ),
        DemoSpec(
            name="puf-defense",
            description="the relay against the optical PUF round-trip deadline",
            expected=Outcome.HANDSHAKE_ABORTED,
            expected_reasons=("TIMING_VIOLATION",),
        ),
    )
}


class DemoResult(BaseModel):
    spec: DemoSpec
    verdict: Verdict
    trace_lines: list[str] = Field(default_factory=list, repr=False)
    narrative: list[str] = Field(default_factory=list)

    @property
    def met(self) -> bool:
        spec, verdict = self.spec, self.verdict
        if verdict.outcome is not spec.expected:
            return False
        if spec.expected_property is not None:
            return (
                verdict.violation is not None
                and verdict.violation.property is spec.expected_property
            )
        if spec.expected_reasons:
            return verdict.abort_reasons.get(spec.victim) in spec.expected_reasons
        return True

    @property
    def exit_code(self) -> int:
        if self.verdict.outcome is Outcome.HANDSHAKE_ABORTED and self.met:
            return 0
        return self.verdict.exit_code


def list_demos() -> list[DemoSpec]:
    return list(DEMOS.values())


def narrate(trace: Trace, verdict: Verdict) -> list[str]:
    story = []
    for record in trace:
        event = record.get("event")
        at = f"t={record.time:.6f}s"
        if record.category is TraceCategory.ADV and event not in ("out_of_range",):
            details = ", ".join(
                f"{k}={v}" for k, v in sorted(record.detail.items()) if k != "event"
            )
            story.append(f"{at} adversary {event} {details}".rstrip())
        elif record.category is TraceCategory.PROTO and event in (
            "established",
            "aborted",
            "session_send",
            "delivered",
        ):
            extra = record.get("reason") or record.get("text") or ""
            peer = record.get("peer", "-")
            story.append(f"{at} {record.actor} {event} with {peer} {extra}".rstrip())
    if verdict.violation is not None:
        story.append(
            f"verdict: {verdict.outcome.value} {verdict.violation.property.value} "
            f"at {verdict.violation.party} ({verdict.violation.witness})"
        )
    else:
        reasons = ", ".join(f"{p}={r}" for p, r in sorted(verdict.abort_reasons.items()))
        story.append(f"verdict: {verdict.outcome.value} {reasons}".rstrip())
    return story


def run_demo(name: str, seed: int | None = None) -> tuple[DemoResult, Trace]:
    spec = DEMOS.get(name)
    if spec is None:
        raise ScenarioError(f"unknown demo {name!r}; try list-demos")
    scenario = shipped_scenario(name)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    trace, verdict = Simulation(scenario).execute()
    result = DemoResult(
        spec=spec,
        verdict=verdict,
        trace_lines=trace.lines(),
        narrative=narrate(trace, verdict),
    )
    logger.info("demo %s: %s (expected met: %s)", name, verdict.outcome.value, result.met)
    return result, trace
