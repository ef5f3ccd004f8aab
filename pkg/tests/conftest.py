import numpy as np
import pytest

from ost import _kernels
from ost.game_core import build_game_family, solve_maximin
from ost.scenario import builtin_use_case


@pytest.fixture(scope="session")
def scenario():
    return builtin_use_case()


@pytest.fixture(scope="session")
def families(scenario):
    return [build_game_family(scenario, sg.id) for sg in scenario.safeguards]


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure compute, not compile."""
    solve_maximin(np.array([[-1.0, 1.0], [1.0, -1.0]]))
    _kernels.sample_run_means(
        np.zeros((2, 2)), np.array([0.5, 1.0]), np.array([0.5, 1.0]),
        np.zeros((1, 2)), np.zeros((1, 2)))
