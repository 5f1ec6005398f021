import math

import pytest
from hypothesis import settings

from infoshare.market import InfoTech, MarketParams

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

LN3 = math.log(3.0)
REF_M0 = 1.5 * 36 / LN3


@pytest.fixture
def market():
    return MarketParams.identical(10.0, 1.0)


@pytest.fixture
def small_tech():
    """sigma = 4, m0 = 2, alpha = 3: the hand-worked point."""
    return InfoTech(4.0, 2.0, 3.0)


def ref_tech(sigma: float) -> InfoTech:
    return InfoTech(sigma, REF_M0, 3.0)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
