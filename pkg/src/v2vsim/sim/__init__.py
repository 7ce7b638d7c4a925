from .engine import Simulation, policy_for, run
from .scenario import (
    CertificateKind,
    ConstantRangeError,
    DirectiveKind,
    Scenario,
    ScenarioError,
    ScenarioSyntaxError,
    ScenarioValidationError,
    ScriptDirective,
    UnknownReferenceError,
    VehicleSpec,
    load_scenario,
    load_scenario_file,
    shipped_scenario,
    shipped_scenarios,
)
from .trace import (
    SimulationInvariantError,
    Trace,
    TraceCategory,
    TraceRecord,
    parse_line,
)

__all__ = [
    "Simulation",
    "policy_for",
    "run",
    "CertificateKind",
    "ConstantRangeError",
    "DirectiveKind",
    "Scenario",
    "ScenarioError",
    "ScenarioSyntaxError",
    "ScenarioValidationError",
    "ScriptDirective",
    "UnknownReferenceError",
    "VehicleSpec",
    "load_scenario",
    "load_scenario_file",
    "shipped_scenario",
    "shipped_scenarios",
    "SimulationInvariantError",
    "Trace",
    "TraceCategory",
    "TraceRecord",
    "parse_line",
]
