"""Scenario definitions: offered loads, SLAs, UE roster and simulator settings."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from ..policy import A1Policy, PolicyError, parse_rate, policy_from_dict
from ..reward import DEFAULT_DEMAND_SLACK
from ..ransim.config import ArrivalModel, Roster, SimConfig, UeSpec

SCENARIO_NAMES = ("low_traffic", "normal", "congestion", "stressed", "insufficient_resources")
DEFAULT_ALARM_WINDOW = 50
DEFAULT_SMOOTHING = 10


@dataclass(frozen=True)
class SliceTraffic:
    """Offered load of one slice, split evenly over its UEs."""

    rate: float
    cqis: tuple[int, ...]
    arrival: ArrivalModel = ArrivalModel.CBR
    buffer_capacity: int | None = None
    cqi_span: int | None = None

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("offered rate must be >= 0")
        if not self.cqis:
            raise ValueError("a slice needs at least one UE")

    @property
    def num_ues(self) -> int:
        return len(self.cqis)


@dataclass(frozen=True)
class Scenario:
    name: str
    policy: A1Policy
    traffic: tuple[SliceTraffic, ...]
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int = 0
    smoothing_frames: int = DEFAULT_SMOOTHING
    demand_slack: float | None = DEFAULT_DEMAND_SLACK
    alarm_window: int = DEFAULT_ALARM_WINDOW
    agent: Mapping[str, Any] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        if len(self.traffic) != self.policy.n_slices:
            raise ValueError(f"scenario {self.name!r}: {len(self.traffic)} traffic entries for "
                             f"{self.policy.n_slices} slices")
        if self.smoothing_frames < 1 or self.alarm_window < 1:
            raise ValueError("smoothing_frames and alarm_window must be >= 1")

    @property
    def n_slices(self) -> int:
        return self.policy.n_slices

    def roster(self) -> Roster:
        ues = []
        for j, t in enumerate(self.traffic):
            per_ue = t.rate / t.num_ues
            ues += [UeSpec(j, cqi, per_ue, t.arrival, t.buffer_capacity, t.cqi_span) for cqi in t.cqis]
        return Roster(tuple(ues), self.policy.n_slices)

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(**{f.name: getattr(self, f.name) for f in fields(self)} | {"seed": seed})


# Five eMBB users near the cell centre, five URLLC users towards the cell
# edge, ten MTC sensors in between.
EMBB_CQIS = (15, 15, 15, 15, 15)
URLLC_CQIS = (6, 5, 6, 7, 6)
MTC_CQIS = (9, 8, 10, 9, 7, 9, 8, 10, 9, 8)
# Latency-critical queues are kept short: 3 % of this is 600 bytes.
URLLC_BUFFER = 20_000
# 300 learning steps leave the greedy policy close to random over 198 actions
PRESET_AGENT = {"n_steps": 3000}


def _policy_doc(min_thr: str, max_thr: str) -> dict:
    return {
        "network_slices": [
            {
                "slice_name": "eMBB",
                "priority": 2,
                "optimization_kpi": "maximize_mean_throughput",
                "target_kpis": {
                    "outage_kpis": {"k_out_1": f"throughput per slice < {min_thr}", "reliability_percent": "99.99%"},
                    "soft_kpis": {"k_soft_1": f"throughput per slice > {max_thr}"},
                },
            },
            {
                "slice_name": "URLLC",
                "priority": 1,
                "optimization_kpi": "minimize_max_buffer",
                "target_kpis": {
                    "outage_kpis": {"k_out_1": "bfs per UE > 3%", "reliability_percent": "99.999%"},
                    "soft_kpis": {},
                },
            },
            {"slice_name": "MTC", "priority": 3, "optimization_kpi": "maximize_mean_throughput"},
        ]
    }


# (offered eMBB, URLLC, MTC) and the eMBB (min, max) throughput SLA.
_PRESETS = {
    "low_traffic": (("50kbps", "1mbps", "2mbps"), ("10mbps", "15mbps"),
                    "light eMBB load against a 10 Mbit/s minimum"),
    "normal": (("70mbps", "1mbps", "2mbps"), ("10mbps", "15mbps"), "standard operation"),
    "congestion": (("100mbps", "1mbps", "100mbps"), ("10mbps", "15mbps"), "eMBB and MTC saturate the cell"),
    "stressed": (("100mbps", "1mbps", "100mbps"), ("20mbps", "25mbps"), "congestion plus a stricter eMBB SLA"),
    "insufficient_resources": (("100mbps", "2mbps", "100mbps"), ("20mbps", "25mbps"),
                               "URLLC load beyond what the cell can carry"),
}


def preset_document(name: str) -> dict:
    """The JSON form of a built-in scenario (same schema as ``--config`` files)."""
    if name not in _PRESETS:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}")
    rates, (min_thr, max_thr), description = _PRESETS[name]
    return {
        "name": name,
        "description": description,
        "seed": 1,
        "policy": _policy_doc(min_thr, max_thr),
        "traffic": {
            "eMBB": {"rate": rates[0], "cqi": list(EMBB_CQIS)},
            "URLLC": {"rate": rates[1], "cqi": list(URLLC_CQIS), "buffer_capacity": URLLC_BUFFER},
            "MTC": {"rate": rates[2], "cqi": list(MTC_CQIS)},
        },
        "sim": {},
        "agent": dict(PRESET_AGENT),
    }


def _rate(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return parse_rate(str(value))


def scenario_from_dict(doc: Mapping[str, Any]) -> Scenario:
    """Build a scenario from its JSON form.

    ``traffic`` maps slice names to ``{"rate": bit/s or "70mbps", "cqi":
    [per-UE CQIs], "arrival": "cbr"|"poisson", "buffer_capacity": bytes}``.
    """
    doc = copy.deepcopy(dict(doc))
    try:
        policy = policy_from_dict(doc["policy"])
    except KeyError:
        raise PolicyError("scenario needs a 'policy' object", field="policy") from None
    traffic_doc = doc.get("traffic", {})
    traffic = []
    for name in policy.names:
        if name not in traffic_doc:
            raise PolicyError(f"no traffic entry for slice {name!r}", field="traffic")
        t = traffic_doc[name]
        cqis = t.get("cqi")
        if "num_ues" in t and isinstance(cqis, int):
            cqis = [cqis] * int(t["num_ues"])
        traffic.append(SliceTraffic(_rate(t.get("rate", 0)), tuple(int(c) for c in cqis),
                                    ArrivalModel(t.get("arrival", "cbr")), t.get("buffer_capacity"),
                                    t.get("cqi_span")))
    sim = SimConfig().with_overrides(**doc.get("sim", {}))
    seed = int(doc.get("seed", 0))
    return Scenario(
        name=str(doc.get("name", "custom")),
        policy=policy,
        traffic=tuple(traffic),
        sim=sim.with_overrides(seed=seed),
        seed=seed,
        smoothing_frames=int(doc.get("smoothing_frames", DEFAULT_SMOOTHING)),
        demand_slack=doc.get("demand_slack", DEFAULT_DEMAND_SLACK),
        alarm_window=int(doc.get("alarm_window", DEFAULT_ALARM_WINDOW)),
        agent=dict(doc.get("agent", {})),
        description=str(doc.get("description", "")),
    )


def load_scenario(name_or_path: str | Path, seed: int | None = None) -> Scenario:
    if str(name_or_path) in _PRESETS:
        doc = preset_document(str(name_or_path))
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise KeyError(f"unknown scenario {str(name_or_path)!r}; choose from {', '.join(SCENARIO_NAMES)} "
                           "or pass a JSON file")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise PolicyError(f"malformed scenario JSON: {exc.msg}", line=exc.lineno) from None
    if seed is not None:
        doc["seed"] = seed
    return scenario_from_dict(doc)
