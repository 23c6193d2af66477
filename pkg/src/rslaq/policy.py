"""A1 policy parsing and the internal SLA model.

An A1 policy document lists network slices with operator weights and the
target KPIs each slice must meet. Predicate strings such as
``"bandwidth_mbps per slice < 10mbps"`` describe the *violation* condition:
the SLA is broken when the measured value satisfies the comparison.
"""

from __future__ import annotations

import json
import logging
import re
import warnings
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-6


class PolicyError(ValueError):
    """Raised when an A1 policy document is malformed or inconsistent."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class PolicyValidationError(PolicyError):
    """The document parsed but violates an invariant (e.g. weight sum)."""


class UnsupportedKpiError(PolicyError):
    """A predicate names a metric the simulator does not measure."""

    def __init__(self, slice_name: str, text: str):
        self.slice_name = slice_name
        self.text = text
        super().__init__(f"unsupported KPI in slice {slice_name!r}: {text!r}")


class UnsupportedKpiWarning(UserWarning):
    pass


class Metric(str, Enum):
    THROUGHPUT = "throughput"
    BUFFER_OCCUPANCY = "buffer_occupancy"
    DROPPED_BYTES = "dropped_bytes"


class Scope(str, Enum):
    PER_UE = "per_ue"
    PER_SLICE = "per_slice"


class Comparator(str, Enum):
    BELOW_IS_VIOLATION = "below_is_violation"
    ABOVE_IS_VIOLATION = "above_is_violation"


class SliceClass(str, Enum):
    EMBB = "eMBB"
    URLLC = "URLLC"
    MTC = "MTC"
    OTHER = "other"


class OptimizationKpi(str, Enum):
    MAXIMIZE_MEAN_THROUGHPUT = "maximize_mean_throughput"
    MINIMIZE_MAX_BUFFER = "minimize_max_buffer"


METRIC_UNITS = {
    Metric.THROUGHPUT: "bit/s",
    Metric.BUFFER_OCCUPANCY: "fraction",
    Metric.DROPPED_BYTES: "bytes/frame",
}

_METRIC_ALIASES = {
    "throughput": Metric.THROUGHPUT,
    "thr": Metric.THROUGHPUT,
    "bandwidth": Metric.THROUGHPUT,
    "bandwidth_mbps": Metric.THROUGHPUT,
    "bandwidth_kbps": Metric.THROUGHPUT,
    "throughput_mbps": Metric.THROUGHPUT,
    "buffer_occupancy": Metric.BUFFER_OCCUPANCY,
    "buffer_status": Metric.BUFFER_OCCUPANCY,
    "bfs": Metric.BUFFER_OCCUPANCY,
    "dropped_bytes": Metric.DROPPED_BYTES,
    "tdp": Metric.DROPPED_BYTES,
}

_RATE_UNITS = {
    "bps": Decimal(1),
    "kbps": Decimal(10) ** 3,
    "mbps": Decimal(10) ** 6,
    "gbps": Decimal(10) ** 9,
}
_BYTE_UNITS = {
    "b": Decimal(1),
    "bytes": Decimal(1),
    "kb": Decimal(10) ** 3,
    "mb": Decimal(10) ** 6,
}

_PREDICATE_RE = re.compile(
    r"^\s*(?P<metric>[A-Za-z_]+)\s+per\s+(?P<scope>ue|slice)\s*"
    r"(?P<op><=|>=|<|>)\s*(?P<value>[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*(?P<unit>[A-Za-z%/]*)\s*$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class KpiPredicate:
    """One target KPI expressed as a violation condition.

    ``threshold`` is in the canonical unit of the metric: bit/s for
    throughput, a fraction of buffer capacity for buffer occupancy and bytes
    per frame for dropped bytes.
    """

    metric: Metric
    scope: Scope
    comparator: Comparator
    threshold: float
    name: str = ""

    def __post_init__(self):
        if not self.threshold > 0:
            raise PolicyValidationError(f"threshold must be > 0, got {self.threshold}", field=self.name or None)
        if self.metric is Metric.BUFFER_OCCUPANCY and self.threshold > 1:
            raise PolicyValidationError("buffer occupancy threshold is a fraction in (0, 1]", field=self.name or None)

    @property
    def unit(self) -> str:
        return METRIC_UNITS[self.metric]

    def violated(self, value) -> np.ndarray:
        """Elementwise violation test for one or many measured values."""
        value = np.asarray(value, dtype=float)
        if self.comparator is Comparator.BELOW_IS_VIOLATION:
            return value < self.threshold
        return value > self.threshold

    def to_text(self) -> str:
        op = "<" if self.comparator is Comparator.BELOW_IS_VIOLATION else ">"
        scope = "UE" if self.scope is Scope.PER_UE else "slice"
        unit = {Metric.THROUGHPUT: "bps", Metric.BUFFER_OCCUPANCY: "", Metric.DROPPED_BYTES: "B"}[self.metric]
        return f"{self.metric.value} per {scope} {op} {self.threshold!r}{unit}"


@dataclass(frozen=True)
class SlaSpec:
    outage_kpis: tuple[KpiPredicate, ...] = ()
    soft_kpis: tuple[KpiPredicate, ...] = ()
    reliability: float | None = None

    def __post_init__(self):
        if self.reliability is not None and not 0 < self.reliability < 1:
            raise PolicyValidationError(f"reliability must lie in (0, 1), got {self.reliability}")
        if self.outage_kpis and self.reliability is None:
            raise PolicyValidationError("outage KPIs require a reliability target")


@dataclass(frozen=True)
class SlicePolicy:
    name: str
    weight: float
    slice_class: SliceClass = SliceClass.OTHER
    priority: int | None = None
    sla: SlaSpec | None = None
    optimization_kpi: OptimizationKpi = OptimizationKpi.MAXIMIZE_MEAN_THROUGHPUT

    def __post_init__(self):
        if not 0 <= self.weight <= 1:
            raise PolicyValidationError(f"weight of slice {self.name!r} must be in [0, 1]", field="weight")
        if self.priority is not None and self.priority < 1:
            raise PolicyValidationError(f"priority of slice {self.name!r} must be >= 1", field="priority")

    @property
    def has_policy(self) -> bool:
        return self.sla is not None


@dataclass(frozen=True)
class UnsupportedKpi:
    slice_name: str
    key: str
    text: str


@dataclass(frozen=True)
class A1Policy:
    slices: tuple[SlicePolicy, ...]
    unsupported: tuple[UnsupportedKpi, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.slices) < 1:
            raise PolicyValidationError("policy must define at least one slice", field="network_slices")
        names = [s.name for s in self.slices]
        if len(set(names)) != len(names):
            raise PolicyValidationError(f"slice names must be unique, got {names}", field="slice_name")
        total = sum(s.weight for s in self.slices)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise PolicyValidationError(f"the slice weights must sum to 1, got {total:.6f}", field="weight")

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.slices])

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.slices]

    def index(self, name: str) -> int:
        return self.names.index(name)


def weights_from_priorities(priorities: Sequence[int]) -> list[float]:
    """Translate operator priorities (1 = highest) into slice weights.

    Each slice scores ``2J + 1 - priority`` and the scores are normalised, so
    priorities ``[2, 1, 3]`` become ``[5/15, 6/15, 4/15]``.
    """
    priorities = [int(p) for p in priorities]
    n = len(priorities)
    if n == 0 or sorted(priorities) != list(range(1, n + 1)):
        raise PolicyValidationError(f"priorities must be a permutation of 1..{n}, got {priorities}", field="priority")
    scores = [2 * n + 1 - p for p in priorities]
    total = sum(scores)
    return [s / total for s in scores]


def parse_rate(text: str) -> float:
    """``"10mbps"`` -> 1e7 bit/s."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*([A-Za-z/]*)\s*", text)
    if not m:
        raise PolicyError(f"cannot parse rate {text!r}")
    unit = m.group(2).lower().replace("/s", "ps").replace("bit", "b")
    if unit not in _RATE_UNITS:
        raise PolicyError(f"unknown rate unit in {text!r}")
    return float(Decimal(m.group(1)) * _RATE_UNITS[unit])


def parse_percent(text: str) -> float:
    """``"99.999%"`` -> 0.99999. The trailing percent sign is mandatory."""
    if not isinstance(text, str) or not text.strip().endswith("%"):
        raise PolicyError(f"percent value must be a string ending in '%', got {text!r}", field="reliability_percent")
    try:
        value = Decimal(text.strip()[:-1].strip())
    except InvalidOperation:
        raise PolicyError(f"cannot parse percent {text!r}", field="reliability_percent") from None
    return float(value / 100)


def format_percent(fraction: float) -> str:
    value = (Decimal(repr(float(fraction))) * 100).normalize()
    return f"{value:f}%"


def _threshold(metric: Metric, value: str, unit: str, text: str) -> float:
    unit = unit.lower()
    number = Decimal(value)
    if metric is Metric.THROUGHPUT:
        if unit == "":
            raise PolicyError(f"throughput threshold needs a rate unit: {text!r}")
        if unit not in _RATE_UNITS:
            raise PolicyError(f"unit {unit!r} is not a rate unit: {text!r}")
        return float(number * _RATE_UNITS[unit])
    if metric is Metric.BUFFER_OCCUPANCY:
        if unit == "%":
            return float(number / 100)
        if unit == "":
            return float(number)
        raise PolicyError(f"buffer occupancy is a fraction or percentage: {text!r}")
    if unit == "":
        return float(number)
    if unit not in _BYTE_UNITS:
        raise PolicyError(f"unit {unit!r} is not a byte unit: {text!r}")
    return float(number * _BYTE_UNITS[unit])


def parse_predicate(text: str, name: str = "") -> KpiPredicate:
    """Parse ``"<metric> per <UE|slice> <op> <value><unit>"``.

    Raises :class:`UnsupportedKpiError` (with an empty slice name) when the
    metric is well formed but not one the simulator measures.
    """
    if not isinstance(text, str):
        raise PolicyError(f"predicate must be a string, got {text!r}", field=name or None)
    m = _PREDICATE_RE.match(text)
    if not m:
        raise PolicyError(f"malformed KPI predicate {text!r}", field=name or None)
    metric = _METRIC_ALIASES.get(m.group("metric").lower())
    if metric is None:
        raise UnsupportedKpiError("", text)
    scope = Scope.PER_UE if m.group("scope").lower() == "ue" else Scope.PER_SLICE
    comparator = Comparator.BELOW_IS_VIOLATION if m.group("op").startswith("<") else Comparator.ABOVE_IS_VIOLATION
    value = _threshold(metric, m.group("value"), m.group("unit"), text)
    return KpiPredicate(metric, scope, comparator, value, name=name)


def _slice_class(name: str, explicit: str | None) -> SliceClass:
    key = (explicit or name).lower()
    for cls in (SliceClass.EMBB, SliceClass.URLLC, SliceClass.MTC):
        if key == cls.value.lower():
            return cls
    if explicit is not None and explicit.lower() != "other":
        raise PolicyError(f"unknown slice class {explicit!r}", field="slice_class")
    return SliceClass.OTHER


def _parse_kpi_block(block: Any, slice_name: str, kind: str, strict: bool, unsupported: list):
    if block is None:
        return (), None
    if not isinstance(block, Mapping):
        raise PolicyError(f"{kind} of slice {slice_name!r} must be an object", field=kind)
    predicates = []
    reliability = None
    for key, value in block.items():
        if key == "reliability_percent":
            reliability = parse_percent(value)
            continue
        try:
            predicates.append(parse_predicate(value, name=key))
        except UnsupportedKpiError:
            if strict:
                raise UnsupportedKpiError(slice_name, value) from None
            unsupported.append(UnsupportedKpi(slice_name, key, value))
            warnings.warn(f"slice {slice_name!r}: ignoring unsupported KPI {value!r}", UnsupportedKpiWarning, stacklevel=4)
    return tuple(predicates), reliability


def policy_from_dict(doc: Mapping[str, Any], strict: bool = False) -> A1Policy:
    if not isinstance(doc, Mapping) or "network_slices" not in doc:
        raise PolicyError("top-level key 'network_slices' is required", field="network_slices")
    entries = doc["network_slices"]
    if not isinstance(entries, list):
        raise PolicyError("'network_slices' must be an array", field="network_slices")

    unsupported: list[UnsupportedKpi] = []
    raw = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, Mapping) or "slice_name" not in entry:
            raise PolicyError(f"slice #{i} needs a 'slice_name'", field=f"network_slices[{i}]")
        name = str(entry["slice_name"])
        sla = None
        if "target_kpis" in entry:
            target = entry["target_kpis"]
            if not isinstance(target, Mapping):
                raise PolicyError(f"target_kpis of slice {name!r} must be an object", field="target_kpis")
            outage, reliability = _parse_kpi_block(target.get("outage_kpis"), name, "outage_kpis", strict, unsupported)
            soft, soft_rel = _parse_kpi_block(target.get("soft_kpis"), name, "soft_kpis", strict, unsupported)
            sla = SlaSpec(outage, soft, reliability if reliability is not None else soft_rel)
        cls = _slice_class(name, entry.get("slice_class"))
        if "optimization_kpi" in entry:
            try:
                opt = OptimizationKpi(entry["optimization_kpi"])
            except ValueError:
                raise PolicyError(f"unknown optimization_kpi {entry['optimization_kpi']!r}", field="optimization_kpi") from None
        else:
            opt = OptimizationKpi.MINIMIZE_MAX_BUFFER if cls is SliceClass.URLLC else OptimizationKpi.MAXIMIZE_MEAN_THROUGHPUT
        priority = entry.get("priority")
        if priority is not None and (not isinstance(priority, int) or isinstance(priority, bool)):
            raise PolicyError(f"priority of slice {name!r} must be an integer", field="priority")
        weight = entry.get("weight")
        if weight is not None and (not isinstance(weight, (int, float)) or isinstance(weight, bool)):
            raise PolicyError(f"weight of slice {name!r} must be a number", field="weight")
        raw.append(dict(name=name, weight=weight, slice_class=cls, priority=priority, sla=sla, optimization_kpi=opt))

    if not raw:
        raise PolicyValidationError("policy must define at least one slice", field="network_slices")
    if all(r["weight"] is None for r in raw):
        priorities = [r["priority"] for r in raw]
        if any(p is None for p in priorities):
            raise PolicyValidationError("every slice needs a weight or, failing that, a priority", field="weight")
        for r, w in zip(raw, weights_from_priorities(priorities)):
            r["weight"] = w
    elif any(r["weight"] is None for r in raw):
        raise PolicyValidationError("weights must be given for all slices or none", field="weight")

    slices = tuple(SlicePolicy(**{**r, "weight": float(r["weight"])}) for r in raw)
    return A1Policy(slices, tuple(unsupported))


def parse_a1_policy(text: str | bytes, strict: bool = False) -> A1Policy:
    """Parse an A1 policy JSON document.

    Latency and packet-loss KPIs are not measured by the simulator; by
    default they are recorded in ``A1Policy.unsupported`` with a warning.
    With ``strict=True`` they raise :class:`UnsupportedKpiError`.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolicyError(f"malformed JSON: {exc.msg}", line=exc.lineno) from None
    return policy_from_dict(doc, strict=strict)


def policy_to_dict(policy: A1Policy) -> dict:
    slices = []
    for s in policy.slices:
        entry: dict[str, Any] = {"slice_name": s.name, "weight": s.weight}
        if s.slice_class is not SliceClass.OTHER and s.slice_class.value.lower() != s.name.lower():
            entry["slice_class"] = s.slice_class.value
        elif s.slice_class is SliceClass.OTHER and s.name.lower() in {"embb", "urllc", "mtc"}:
            entry["slice_class"] = "other"
        if s.priority is not None:
            entry["priority"] = s.priority
        entry["optimization_kpi"] = s.optimization_kpi.value
        if s.sla is not None:
            outage = {p.name or f"k_out_{i + 1}": p.to_text() for i, p in enumerate(s.sla.outage_kpis)}
            soft = {p.name or f"k_soft_{i + 1}": p.to_text() for i, p in enumerate(s.sla.soft_kpis)}
            if s.sla.reliability is not None:
                outage["reliability_percent"] = format_percent(s.sla.reliability)
            entry["target_kpis"] = {"outage_kpis": outage, "soft_kpis": soft}
        slices.append(entry)
    return {"network_slices": slices}


def serialize_a1_policy(policy: A1Policy) -> str:
    return json.dumps(policy_to_dict(policy), indent=2)


def evaluate_predicate(predicate: KpiPredicate, snapshot, scope: Scope | None = None):
    """Check a predicate against measured values.

    ``snapshot`` is a mapping of UE id to value for per-UE predicates (the
    violating ids are returned as a set) or a single number for per-slice
    predicates (returns ``True`` when violated).
    """
    if scope is None:
        scope = Scope.PER_UE if isinstance(snapshot, Mapping) else Scope.PER_SLICE
    if scope is not predicate.scope:
        raise ValueError(f"predicate scope {predicate.scope.value} does not match snapshot scope {scope.value}")
    if scope is Scope.PER_UE:
        if not isinstance(snapshot, Mapping):
            raise ValueError("per-UE snapshot must map UE ids to values")
        return {ue for ue, value in snapshot.items() if bool(predicate.violated(value))}
    if isinstance(snapshot, Mapping) or np.ndim(snapshot) != 0:
        raise ValueError("per-slice snapshot must be a single aggregate value")
    return bool(predicate.violated(snapshot))
