from importlib import resources
from pathlib import Path

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("ci", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("ci")

np.seterr(over="raise", invalid="raise")

FIXTURES = Path(str(resources.files("citepurpose.data").joinpath("fixtures")))

_criteria: list[tuple[str, bool, str]] = []


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion's outcome for the terminal summary."""

    def record(label: str, detail: str = ""):
        request.node._criterion = (label, detail)

    yield record
    label, detail = getattr(request.node, "_criterion", (request.node.name, ""))
    passed = not getattr(request.node, "_failed", False)
    _criteria.append((label, passed, detail))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and rep.failed:
        item._failed = True


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _criteria:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")


@pytest.fixture(scope="session")
def fixture_prepared():
    from citepurpose.pipeline import RunConfig, prepare

    return prepare(RunConfig.load(FIXTURES / "config.json"))
