from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gpjscc import fixtures
from gpjscc.codec import build_encoder
from gpjscc.lifting import peg_lift

settings.register_profile(
    "default",
    max_examples=100,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

_CRITERIA: list[str] = []


def record_criterion(label: str, passed: bool, detail: str) -> None:
    """Store one acceptance line; printed in the terminal summary."""
    line = f"CRITERION {label}: {'PASS' if passed else 'FAIL'} | {detail}"
    _CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ar3a():
    return fixtures.load("ar3a")


@pytest.fixture(scope="session")
def ar3a_z200(ar3a):
    code = peg_lift(ar3a, 200, seed=0, girth=False)
    return code, build_encoder(code)


@pytest.fixture(scope="session")
def ar3a_z32(ar3a):
    code = peg_lift(ar3a, 32, seed=0)
    return code, build_encoder(code)


@pytest.fixture(scope="session")
def bp_opt1():
    return np.array([[1, 1, 1], [0, 0, 2], [3, 2, 2]])


@pytest.fixture(scope="session")
def b1_search():
    """Exhaustive two-stage search for k = 1 under benchmark B1 (minutes)."""
    from gpjscc.optimize import SearchConstraints, fstct

    return fstct(SearchConstraints(k=1, p1_bar=0.228, es_n0_bar=-5.918, p1=0.04), backend="brute")
