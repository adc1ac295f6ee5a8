import functools

import numpy as np
import pytest

from semihyp import solver as sv
from semihyp.presets import preset_problem

# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def circulating_exact(x, t):
    X, T = np.meshgrid(x, t)
    return np.stack([-np.sin(np.pi * (X + T)), np.sin(np.pi * (X - T))], axis=1)


@functools.lru_cache(maxsize=None)
def circulating_solution(nx: int, levels_per_slab: int = 16, derivatives: bool = True,
                         initial: str = "extend"):
    p = preset_problem("circulating-wave")
    theta = 0.5  # separation width for unit speeds; q0 = 0 here
    return sv.solve(p, nx, 2.0, dt_user=theta / levels_per_slab, derivatives=derivatives,
                    initial=initial)


@pytest.fixture(scope="session")
def cw200():
    return circulating_solution(200, 32)
