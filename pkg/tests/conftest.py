import numpy as np
import pytest
from hypothesis import settings

from memorium import FlatLayout, MaterialModel, PronyKernel

settings.register_profile("memorium", max_examples=25, deadline=None)
settings.load_profile("memorium")


def scalar_model(g_inf=1.0, terms=((1.0, 1.0),)):
    """Scalar model ``G(s) = g_inf + sum c e^{-s/tau}`` from ``(tau, c)`` pairs."""
    taus = np.array([t for t, _ in terms], dtype=float)
    C = np.array([[[c]] for _, c in terms], dtype=float).reshape(len(terms), 1, 1)
    return MaterialModel(FlatLayout(1), PronyKernel(np.array([[g_inf]]), taus, C))


@pytest.fixture
def unit_scalar():
    """``G(s) = 1 + e^{-s}``."""
    return scalar_model()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, text: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
