import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_rr(rng, n=180, mean=850.0, jitter=40.0):
    """Heart-rate-like RR series: slow drift + respiratory modulation + noise."""
    t = np.arange(n)
    rr = (
        mean
        + 30.0 * np.sin(2 * np.pi * t / rng.uniform(15, 40))
        + 20.0 * np.sin(2 * np.pi * t / rng.uniform(3, 6) + rng.uniform(0, 6.28))
        + jitter * rng.standard_normal(n)
    )
    return np.clip(rr, 350, 2000)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance(capsys):
    """Records one pass/fail line per acceptance criterion (printed at session end too)."""

    def record(number, passed: bool | None, detail: str):
        verdict = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        line = f"ACCEPTANCE {number}: {verdict} - {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
