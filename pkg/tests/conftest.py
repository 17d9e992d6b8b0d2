import numpy as np
import pytest

from noiseball.problems import (FiniteSumProblem, quartic_problem,
                                toy_two_component)


@pytest.fixture
def toy() -> FiniteSumProblem:
    return toy_two_component()


@pytest.fixture
def quartic() -> FiniteSumProblem:
    return quartic_problem()


def central_diff_grad(problem, j, theta, h=1e-6):
    """Finite-difference gradient of component j at theta."""
    g = np.empty(problem.d)
    for i in range(problem.d):
        e = np.zeros(problem.d)
        e[i] = h
        g[i] = (problem.value_component(j, theta + e)
                - problem.value_component(j, theta - e)) / (2.0 * h)
    return g
