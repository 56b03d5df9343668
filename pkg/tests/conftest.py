import pytest
from hypothesis import HealthCheck, settings

from laxhopf.fundamental_diagram import FundamentalDiagram
from laxhopf.scenario import builtin_scenario

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def fd():
    return FundamentalDiagram(v=30.0, w=7.5, k_c=0.04, k_j=0.2)


@pytest.fixture(scope="session")
def three_zone():
    """Three density zones with stepped boundary flows, no bottlenecks."""
    return builtin_scenario("no_bottleneck")


_ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion; the lines are echoed at the end."""

    def record(criterion: int, ok: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
