"""Scenario files.

    # comments run to the end of a line
    name = ps-baseline
    seed = 7
    variant = V0
    duration = 3.0

    [constants]
    radio_range = 300

    [vehicles]
    v1.pose = 0,0,0,0
    v1.vin = 1HGCM82633A004352
    v1.plate = V1-1000
    v1.brand = toyota
    v1.color = white

    [adversary]
    radio = active
    owns = v3

    [script]
    at t=0.0 v1 initiate handshake with v2
    at t=2.0 v1 session_send 'brake warning'
"""

import re
from enum import Enum
from importlib import resources
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from v2vsim.adversary.power import AdversaryPower, RadioControl, StrategyName
from v2vsim.config import DEFAULT_CONSTANTS, SimConstants
from v2vsim.identity import Brand, Color, StaticAttributes
from v2vsim.logger import get_logger
from v2vsim.protocol.messages import Variant
from v2vsim.world.pose import Pose

logger = get_logger(__name__)

SECTIONS = ("constants", "vehicles", "adversary", "script")
HEADER_KEYS = ("name", "seed", "variant", "duration")
VEHICLE_FIELDS = ("pose", "vin", "plate", "brand", "color", "certificate", "puf_crps")
ADVERSARY_KEYS = (
    "radio",
    "owns",
    "certificates",
    "clone_attributes",
    "strategy",
    "victim",
    "peer",
    "max_actions",
    "relay_answers_locally",
    "tamper",
    "grant_signing_keys",
)
MAX_SEED = 2**64 - 1
SCENARIO_SUFFIX = ".scn"

_SECTION_RE = re.compile(r"^\[(?P<name>[^\]]*)\]$")
_ID_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")
_SCRIPT_RE = re.compile(
    r"^at\s+t=(?P<time>[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)\s+(?P<actor>\S+)\s+"
    r"(?:initiate\s+handshake\s+with\s+(?P<peer>\S+)|session_send\s+'(?P<text>[^']*)')$"
)


class ScenarioError(Exception):
    code = "E_SCENARIO"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" at line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{self.code}{where}: {message}")


class ScenarioSyntaxError(ScenarioError):
    code = "E_SYNTAX"


class UnknownReferenceError(ScenarioError):
    code = "E_UNKNOWN_ID"


class ConstantRangeError(ScenarioError):
    code = "E_RANGE"


class ScenarioValidationError(ScenarioError):
    code = "E_VALIDATION"


class CertificateKind(str, Enum):
    VALID = "valid"
    EXPIRED = "expired"
    FORGED = "forged"
    NONE = "none"


class DirectiveKind(str, Enum):
    INITIATE = "initiate"
    SESSION_SEND = "session_send"


class VehicleSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    pose: Pose
    attributes: StaticAttributes
    certificate: CertificateKind = CertificateKind.VALID
    puf_crps: int = Field(default=0, ge=0, le=64, description="CRPs enrolled at issuance")


class ScriptDirective(BaseModel):
    model_config = ConfigDict(frozen=True)

    at: float = Field(..., ge=0)
    actor: str
    kind: DirectiveKind
    peer: str | None = None
    text: str | None = None
    line: int = 0


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "scenario"
    seed: int = Field(..., ge=0, le=MAX_SEED)
    variant: Variant
    duration: float = Field(default=5.0, gt=0, description="Simulated seconds")
    constants: SimConstants = DEFAULT_CONSTANTS
    vehicles: tuple[VehicleSpec, ...]
    adversary: AdversaryPower = Field(default_factory=AdversaryPower)
    script: tuple[ScriptDirective, ...] = ()

    def vehicle(self, vehicle_id: str) -> VehicleSpec:
        for spec in self.vehicles:
            if spec.id == vehicle_id:
                return spec
        raise KeyError(f"unknown vehicle {vehicle_id!r}")

    @property
    def vehicle_ids(self) -> list[str]:
        return [v.id for v in self.vehicles]

    def with_seed(self, seed: int) -> "Scenario":
        return self.model_copy(update={"seed": seed})

    def with_variant(self, variant: Variant) -> "Scenario":
        return self.model_copy(update={"variant": variant})


class _Entry(BaseModel):
    key: str
    value: str
    line: int
    column: int


def _strip_comment(raw: str) -> str:
    quoted = False
    for i, ch in enumerate(raw):
        if ch == "'":
            quoted = not quoted
        elif ch == "#" and not quoted:
            return raw[:i]
    return raw


def _split_pair(raw: str, number: int) -> _Entry:
    if "=" not in raw:
        column = len(raw) - len(raw.lstrip()) + 1
        raise ScenarioSyntaxError("expected 'key = value'", number, column)
    key, _, value = raw.partition("=")
    if not key.strip():
        raise ScenarioSyntaxError("missing key", number, 1)
    value_column = len(key) + 2 + (len(value) - len(value.lstrip()))
    return _Entry(key=key.strip(), value=value.strip(), line=number, column=value_column)


def _parse_float(entry: _Entry) -> float:
    try:
        return float(entry.value)
    except ValueError:
        raise ScenarioSyntaxError(
            f"{entry.key}: expected a number, got {entry.value!r}", entry.line, entry.column
        ) from None


def _parse_int(entry: _Entry) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise ScenarioSyntaxError(
            f"{entry.key}: expected an integer, got {entry.value!r}", entry.line, entry.column
        ) from None


def _parse_bool(entry: _Entry) -> bool:
    value = entry.value.lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ScenarioSyntaxError(
        f"{entry.key}: expected true or false, got {entry.value!r}", entry.line, entry.column
    )


def _parse_list(entry: _Entry) -> tuple[str, ...]:
    items = tuple(item.strip() for item in entry.value.split(",") if item.strip())
    for item in items:
        if not _ID_RE.match(item):
            raise ScenarioSyntaxError(f"bad vehicle id {item!r}", entry.line, entry.column)
    return items


def _parse_pose(entry: _Entry) -> Pose:
    parts = [p.strip() for p in entry.value.split(",")]
    if not 2 <= len(parts) <= 4:
        raise ScenarioSyntaxError(
            "pose is x,y[,heading[,speed]]", entry.line, entry.column
        )
    try:
        numbers = [float(p) for p in parts] + [0.0] * (4 - len(parts))
    except ValueError:
        raise ScenarioSyntaxError(
            f"pose components must be numbers: {entry.value!r}", entry.line, entry.column
        ) from None
    x, y, heading, speed = numbers
    return Pose(x=x, y=y, heading=heading, speed=speed)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.header: dict[str, _Entry] = {}
        self.constants: dict[str, _Entry] = {}
        self.vehicles: dict[str, dict[str, _Entry]] = {}
        self.vehicle_lines: dict[str, int] = {}
        self.adversary: dict[str, _Entry] = {}
        self.script: list[ScriptDirective] = []

    def parse(self) -> Scenario:
        section: str | None = None
        seen_content = False
        for number, raw_line in enumerate(self.text.splitlines(), start=1):
            raw = _strip_comment(raw_line).rstrip()
            if not raw.strip():
                continue
            seen_content = True
            stripped = raw.strip()
            header = _SECTION_RE.match(stripped)
            if header:
                name = header.group("name").strip()
                if name not in SECTIONS:
                    raise ScenarioSyntaxError(
                        f"unknown section [{name}]", number, raw.index("[") + 1
                    )
                section = name
                continue
            if section == "script":
                self._script_line(stripped, number, raw.index(stripped[0]) + 1)
                continue
            entry = _split_pair(raw, number)
            if section is None:
                self._store(self.header, entry, HEADER_KEYS, "header")
            elif section == "constants":
                self._store(self.constants, entry, None, "constants")
            elif section == "vehicles":
                self._vehicle_entry(entry)
            else:
                self._store(self.adversary, entry, ADVERSARY_KEYS, "adversary")
        if not seen_content:
            raise ScenarioSyntaxError("empty scenario", 1, 1)
        return self._build()

    def _store(
        self,
        target: dict[str, _Entry],
        entry: _Entry,
        allowed: tuple[str, ...] | None,
        where: str,
    ) -> None:
        if allowed is not None and entry.key not in allowed:
            raise ScenarioSyntaxError(f"unknown {where} key {entry.key!r}", entry.line, 1)
        if entry.key in target:
            raise ScenarioValidationError(f"duplicate {where} key {entry.key!r}", entry.line, 1)
        target[entry.key] = entry

    def _vehicle_entry(self, entry: _Entry) -> None:
        vehicle_id, dot, field = entry.key.partition(".")
        if not dot or not _ID_RE.match(vehicle_id):
            raise ScenarioSyntaxError(
                f"vehicle keys are <id>.<field>, got {entry.key!r}", entry.line, 1
            )
        if field not in VEHICLE_FIELDS:
            raise ScenarioSyntaxError(f"unknown vehicle field {field!r}", entry.line, 1)
        fields = self.vehicles.setdefault(vehicle_id, {})
        self.vehicle_lines.setdefault(vehicle_id, entry.line)
        if field in fields:
            raise ScenarioValidationError(
                f"duplicate vehicle id {vehicle_id!r} ({field} given twice)", entry.line, 1
            )
        fields[field] = entry

    def _script_line(self, line: str, number: int, column: int) -> None:
        match = _SCRIPT_RE.match(line)
        if match is None:
            raise ScenarioSyntaxError(f"unrecognised script line {line!r}", number, column)
        peer = match.group("peer")
        self.script.append(
            ScriptDirective(
                at=float(match.group("time")),
                actor=match.group("actor"),
                kind=DirectiveKind.INITIATE if peer is not None else DirectiveKind.SESSION_SEND,
                peer=peer,
                text=match.group("text"),
                line=number,
            )
        )

    # validation

    def _build(self) -> Scenario:
        for key in ("seed", "variant"):
            if key not in self.header:
                raise ScenarioValidationError(f"missing header key {key!r}", 1, 1)
        seed_entry = self.header["seed"]
        seed = _parse_int(seed_entry)
        if not 0 <= seed <= MAX_SEED:
            raise ConstantRangeError("seed must be a 64-bit unsigned integer", seed_entry.line, seed_entry.column)
        variant_entry = self.header["variant"]
        try:
            variant = Variant.parse(variant_entry.value)
        except ValueError as exc:
            raise ScenarioValidationError(str(exc), variant_entry.line, variant_entry.column) from None
        duration = 5.0
        if "duration" in self.header:
            duration_entry = self.header["duration"]
            duration = _parse_float(duration_entry)
            if not duration > 0:
                raise ConstantRangeError("duration must be positive", duration_entry.line, duration_entry.column)
        name = self.header["name"].value if "name" in self.header else "scenario"

        constants = self._constants()
        vehicles = self._vehicles()
        ids = [v.id for v in vehicles]
        adversary = self._adversary(ids)
        self._check_clones(vehicles, adversary)
        script = self._check_script(ids, adversary, duration)
        return Scenario(
            name=name,
            seed=seed,
            variant=variant,
            duration=duration,
            constants=constants,
            vehicles=tuple(vehicles),
            adversary=adversary,
            script=tuple(sorted(script, key=lambda d: d.at)),
        )

    def _constants(self) -> SimConstants:
        known = SimConstants.model_fields
        overrides: dict[str, float | int] = {}
        for key, entry in self.constants.items():
            if key not in known:
                raise ScenarioValidationError(f"unknown constant {key!r}", entry.line, 1)
            if known[key].annotation is int:
                overrides[key] = _parse_int(entry)
            else:
                overrides[key] = _parse_float(entry)
        try:
            return DEFAULT_CONSTANTS.with_overrides(overrides)
        except ValidationError as exc:
            error = exc.errors()[0]
            key = str(error["loc"][0]) if error["loc"] else ""
            entry = self.constants.get(key)
            line = entry.line if entry else None
            column = entry.column if entry else None
            raise ConstantRangeError(f"{key or 'constants'}: {error['msg']}", line, column) from None

    def _vehicles(self) -> list[VehicleSpec]:
        specs = []
        for vehicle_id, fields in self.vehicles.items():
            line = self.vehicle_lines[vehicle_id]
            for required in ("pose", "vin", "plate", "brand", "color"):
                if required not in fields:
                    raise ScenarioValidationError(
                        f"vehicle {vehicle_id!r} has no {required}", line, 1
                    )
            pose = _parse_pose(fields["pose"])
            try:
                brand = Brand(fields["brand"].value.lower())
                color = Color(fields["color"].value.lower())
                attributes = StaticAttributes(
                    vin=fields["vin"].value,
                    license_plate=fields["plate"].value,
                    brand=brand,
                    color=color,
                )
            except (ValueError, ValidationError) as exc:
                raise ScenarioValidationError(
                    f"vehicle {vehicle_id!r}: {_first_message(exc)}", line, 1
                ) from None
            certificate = CertificateKind.VALID
            if "certificate" in fields:
                entry = fields["certificate"]
                try:
                    certificate = CertificateKind(entry.value.lower())
                except ValueError:
                    raise ScenarioValidationError(
                        f"vehicle {vehicle_id!r}: unknown certificate kind {entry.value!r}",
                        entry.line,
                        entry.column,
                    ) from None
            crps = 0
            if "puf_crps" in fields:
                entry = fields["puf_crps"]
                crps = _parse_int(entry)
                if not 0 <= crps <= 64:
                    raise ConstantRangeError(
                        f"vehicle {vehicle_id!r}: puf_crps must be in 0..64", entry.line, entry.column
                    )
            specs.append(
                VehicleSpec(
                    id=vehicle_id,
                    pose=pose,
                    attributes=attributes,
                    certificate=certificate,
                    puf_crps=crps,
                )
            )
        if not specs:
            raise ScenarioValidationError("scenario has no vehicles")
        return specs

    def _reference(self, entry: _Entry, vehicle_id: str, ids: list[str]) -> str:
        if vehicle_id not in ids:
            raise UnknownReferenceError(
                f"{entry.key} names unknown vehicle {vehicle_id!r}", entry.line, entry.column
            )
        return vehicle_id

    def _adversary(self, ids: list[str]) -> AdversaryPower:
        entries = self.adversary
        values: dict[str, object] = {}
        for key in ("owns", "certificates", "grant_signing_keys"):
            if key in entries:
                values[key] = tuple(
                    self._reference(entries[key], v, ids) for v in _parse_list(entries[key])
                )
        for key in ("victim", "peer"):
            if key in entries:
                values[key] = self._reference(entries[key], entries[key].value, ids)
        if "radio" in entries:
            entry = entries["radio"]
            try:
                values["radio"] = RadioControl(entry.value.lower())
            except ValueError:
                raise ScenarioValidationError(
                    f"radio is passive or active, got {entry.value!r}", entry.line, entry.column
                ) from None
        if "strategy" in entries:
            entry = entries["strategy"]
            try:
                values["strategy"] = StrategyName(entry.value.lower())
            except ValueError:
                raise ScenarioValidationError(
                    f"unknown strategy {entry.value!r}", entry.line, entry.column
                ) from None
        if "max_actions" in entries:
            entry = entries["max_actions"]
            values["max_actions"] = _parse_int(entry)
            if not 0 <= values["max_actions"] <= 8:
                raise ConstantRangeError("max_actions must be in 0..8", entry.line, entry.column)
        for key in ("clone_attributes", "relay_answers_locally"):
            if key in entries:
                values[key] = _parse_bool(entries[key])
        if "tamper" in entries:
            values["tamper"] = entries["tamper"].value.strip("'")
        try:
            return AdversaryPower(
                radio_control=values.get("radio", RadioControl.PASSIVE),
                owns_vehicles=values.get("owns", ()),
                certificates=values.get("certificates", ()),
                can_clone_static_attributes=values.get("clone_attributes", False),
                strategy=values.get("strategy"),
                victim=values.get("victim"),
                peer=values.get("peer"),
                max_actions=values.get("max_actions", 6),
                relay_answers_locally=values.get("relay_answers_locally", False),
                tamper=values.get("tamper"),
                grant_signing_keys=values.get("grant_signing_keys", ()),
            )
        except ValidationError as exc:
            raise ScenarioValidationError(f"adversary: {_first_message(exc)}") from None

    def _check_clones(self, vehicles: list[VehicleSpec], adversary: AdversaryPower) -> None:
        if adversary.can_clone_static_attributes:
            return
        for owned in vehicles:
            if not adversary.owns(owned.id):
                continue
            for other in vehicles:
                if other.id != owned.id and other.attributes.appearance() == owned.attributes.appearance():
                    raise ScenarioValidationError(
                        f"vehicle {owned.id!r} copies the looks of {other.id!r} "
                        "but clone_attributes is false",
                        self.vehicle_lines[owned.id],
                        1,
                    )

    def _check_script(
        self, ids: list[str], adversary: AdversaryPower, duration: float
    ) -> list[ScriptDirective]:
        for directive in self.script:
            for vehicle_id in (directive.actor, directive.peer):
                if vehicle_id is not None and vehicle_id not in ids:
                    raise UnknownReferenceError(
                        f"script names unknown vehicle {vehicle_id!r}", directive.line, 1
                    )
            if adversary.owns(directive.actor):
                raise ScenarioValidationError(
                    f"script actor {directive.actor!r} is adversary-owned", directive.line, 1
                )
            if directive.peer == directive.actor:
                raise ScenarioValidationError(
                    f"{directive.actor!r} cannot handshake with itself", directive.line, 1
                )
            if directive.at > duration:
                raise ConstantRangeError(
                    f"directive at t={directive.at} is past the duration {duration}",
                    directive.line,
                    1,
                )
        return self.script


def _first_message(exc: Exception) -> str:
    if isinstance(exc, ValidationError):
        return exc.errors()[0]["msg"]
    return str(exc)


def load_scenario(text: str) -> Scenario:
    scenario = _Parser(text).parse()
    logger.debug(
        "loaded scenario %s (%s, %d vehicles)",
        scenario.name,
        scenario.variant.name,
        len(scenario.vehicles),
    )
    return scenario


def load_scenario_file(path: str | Path) -> Scenario:
    return load_scenario(Path(path).read_text(encoding="utf-8"))


def shipped_scenarios() -> list[str]:
    folder = resources.files("v2vsim") / "scenarios"
    return sorted(
        entry.name[: -len(SCENARIO_SUFFIX)]
        for entry in folder.iterdir()
        if entry.name.endswith(SCENARIO_SUFFIX)
    )


def shipped_scenario(name: str) -> Scenario:
    resource = resources.files("v2vsim") / "scenarios" / f"{name}{SCENARIO_SUFFIX}"
    if not resource.is_file():
        raise UnknownReferenceError(f"no shipped scenario named {name!r}")
    return load_scenario(resource.read_text(encoding="utf-8"))
