import numpy as np
import pytest

from fxmst.returns import ReturnPanel, normalize

_acceptance: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        _acceptance.append((report.outcome.upper(), report.head_line or report.nodeid))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for outcome, name in _acceptance:
        terminalreporter.write_line(f"{outcome:7s} {name}")


def codes(n):
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return [f"Q{letters[i // 26]}{letters[i % 26]}" for i in range(n)]


def normalized_panel(g, base=None):
    g = np.asarray(g, dtype=float)
    return normalize(ReturnPanel(base, tuple(codes(len(g))), g))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
