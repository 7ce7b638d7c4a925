import hashlib
from enum import Enum
from pathlib import Path

from filelock import FileLock
from pydantic import BaseModel, ConfigDict, Field

from v2vsim.logger import get_logger

logger = get_logger(__name__)

LOCK_TIMEOUT = 10


class SimulationInvariantError(Exception):
    pass


class TraceCategory(str, Enum):
    RADIO = "RADIO"
    OPTICAL = "OPTICAL"
    SENSE = "SENSE"
    PROTO = "PROTO"
    ADV = "ADV"
    VERDICT = "VERDICT"


def format_value(value: object) -> str:
    """Canonical text of one detail value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9f}"
    if isinstance(value, bytes):
        return hashlib.sha256(value).hexdigest()[:16]
    if isinstance(value, Enum):
        return str(value.value)
    text = str(value)
    # keep the line format parseable
    return text.replace("\t", " ").replace("\n", " ").replace(";", ",")


class TraceRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    time: float = Field(..., ge=0, description="Simulated time in s")
    seq: int = Field(..., ge=0, description="Emission order")
    category: TraceCategory
    actor: str
    detail: dict[str, str] = Field(default_factory=dict)

    def line(self) -> str:
        fields = ";".join(f"{k}={self.detail[k]}" for k in sorted(self.detail))
        return f"{self.time:.9f}\t{self.category.value}\t{self.actor}\t{fields}"

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.detail.get(key, default)


def parse_line(line: str, seq: int = 0) -> TraceRecord:
    time, category, actor, fields = line.rstrip("\n").split("\t", 3)
    detail = {}
    if fields:
        for item in fields.split(";"):
            key, _, value = item.partition("=")
            detail[key] = value
    return TraceRecord(
        time=float(time),
        seq=seq,
        category=TraceCategory(category),
        actor=actor,
        detail=detail,
    )


class Trace:
    """Append-only run log; identical scenario and seed give identical text."""

    def __init__(self):
        self.records: list[TraceRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def emit(
        self, time: float, category: TraceCategory, actor: str, **detail: object
    ) -> TraceRecord:
        if self.records and time < self.records[-1].time:
            raise SimulationInvariantError(
                f"trace time went backwards: {time:.9f} < {self.records[-1].time:.9f}"
            )
        if self.records and self.records[-1].category is TraceCategory.VERDICT:
            raise SimulationInvariantError("record emitted after the verdict")
        record = TraceRecord(
            time=time,
            seq=len(self.records),
            category=category,
            actor=actor,
            detail={k: format_value(v) for k, v in detail.items()},
        )
        self.records.append(record)
        return record

    def find(
        self,
        category: TraceCategory | None = None,
        actor: str | None = None,
        event: str | None = None,
    ) -> list[TraceRecord]:
        return [
            r
            for r in self.records
            if (category is None or r.category is category)
            and (actor is None or r.actor == actor)
            and (event is None or r.detail.get("event") == event)
        ]

    def lines(self) -> list[str]:
        return [r.line() for r in self.records]

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        lock = FileLock(str(path) + ".lock", timeout=LOCK_TIMEOUT)
        with lock:
            path.write_text(self.text(), encoding="utf-8")
        logger.info("wrote %d trace records to %s", len(self.records), path)
        return path
