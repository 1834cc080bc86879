import json
import pathlib
import sys

import pytest
from hypothesis import HealthCheck, settings

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def k2_table():
    with open(HERE / "data" / "k2_oracle.json", encoding="utf-8") as fh:
        rows = json.load(fh)["rows"]
    return [(float(r["x"]), float(r["k2_scaled"])) for r in rows]


@pytest.fixture
def nat():
    from relgas.geometry import PhysicalConstants

    return PhysicalConstants.natural()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
