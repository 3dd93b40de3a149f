import re
from collections import OrderedDict

import numpy as np
import pytest

from uqimp.datagen import ErrorLaw, FeatureSpec, ModelSpec, generate, generate_linear_benchmark

_CRITERIA: "OrderedDict[int, list[tuple[str, str, str]]]" = OrderedDict()



def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if m:
        measured = "; ".join(f"{k}={v}" for k, v in report.user_properties)
        _CRITERIA.setdefault(int(m.group(1)), []).append((m.group(2), report.outcome, measured))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        failed = [name for name, outcome, _ in parts if outcome != "passed"]
        status = "FAIL" if failed else "PASS"
        detail = f" (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {n}: {status}{detail}")
        for name, outcome, measured in parts:
            if measured:
                tr.write_line(f"    {name}: {measured}")


@pytest.fixture(scope="session")
def linear_data():
    return generate_linear_benchmark(FeatureSpec(4), ErrorLaw("normal"), 2000, error_seed=1)


@pytest.fixture(scope="session")
def model1_data():
    return generate(ModelSpec(1), FeatureSpec(4), ErrorLaw("normal"), 1000, error_seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
