from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).resolve().parents[1] / "src" / "rslaq" / "data"

_ACCEPTANCE: dict[int, dict[str, str]] = {}


@pytest.fixture
def example_policy_path() -> Path:
    return DATA / "a1_policy_example.json"


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    criterion = getattr(report, "criterion", None)
    if criterion is None:
        for key, value in report.user_properties:
            if key == "criterion":
                criterion = value
    if criterion is None:
        return
    number, label = criterion
    _ACCEPTANCE.setdefault(number, {})[label] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[number]
        ok = all(v == "passed" for v in parts.values())
        detail = ", ".join(f"{k}: {v}" for k, v in parts.items())
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
