from .alarm import AlarmEvent, AlarmMonitor, detect_insufficient_resources, read_alarm_log, write_alarm_log
from .env import RanSlicingEnv, StepRecord, default_composition
from .evaluation import (CONTROLLERS, AgentController, Comparison, RunReport, StaticController, TrainingResult,
                         compare, make_controller, run_eval, run_training, write_report_csv)
from .scenarios import SCENARIO_NAMES, Scenario, SliceTraffic, load_scenario, preset_document, scenario_from_dict

__all__ = [
    "AgentController", "AlarmEvent", "AlarmMonitor", "CONTROLLERS", "Comparison", "RanSlicingEnv", "RunReport",
    "SCENARIO_NAMES", "Scenario", "SliceTraffic", "StaticController", "StepRecord", "TrainingResult", "compare",
    "default_composition", "detect_insufficient_resources", "load_scenario", "make_controller", "preset_document",
    "read_alarm_log", "run_eval", "run_training", "scenario_from_dict", "write_alarm_log", "write_report_csv",
]
