import json
import os
import sys

import numpy as np
import pytest

from underreach.engine import SystemSpec
from underreach.zonotope import Zonotope

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(os.path.dirname(HERE), "configs")

DI_A = np.array([[0.0, 0.0], [1.0, 0.0]])


@pytest.fixture(scope="session")
def oracle_values():
    with open(os.path.join(HERE, "fixtures", "oracle_values.json")) as fh:
        return json.load(fh)


@pytest.fixture
def unit_square():
    return Zonotope([0.5, 0.5], [[0.5, 0.0], [0.0, 0.5]])


@pytest.fixture
def di_system(unit_square):
    """Double integrator driven by inputs in [0,1]^2 from the origin, T = 1."""
    return SystemSpec(DI_A, None, unit_square, 1.0)


def random_full_zonotope(rng, n, extra=1, scale=1.0):
    """Random zonotope with an invertible leading block, so it is full-dimensional."""
    G = rng.normal(size=(n, n + extra))
    G[:, :n] += 2.0 * np.eye(n)
    return Zonotope(scale * rng.normal(size=n), scale * G)


def random_normalized(rng, n):
    A = rng.normal(size=(n, n))
    return A / np.max(np.sum(np.abs(A), axis=1))


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items()
                if name.endswith("test_acceptance") and hasattr(m, "RESULTS")), None)
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
