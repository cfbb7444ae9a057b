import math

import numpy as np
import pytest
from hypothesis import settings

from ricci_lab import flow, geometry as geo

settings.register_profile("lab", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def sphere_run():
    """Unit round S^3 at N = 129 run to sup|Rm| > 1e6."""
    p0 = flow.initial_profile(flow.RoundSphere(1.0), 3, 129)
    return flow.run(p0, flow.StepControl(qMax=1e6))


@pytest.fixture(scope="session")
def dumbbell_run():
    """Default dumbbell on S^3 at N = 2049 run until the neck is unresolved."""
    p0 = flow.initial_profile(flow.Dumbbell(), 3, 2049)
    return flow.run(p0, flow.StepControl())


@pytest.fixture(scope="session")
def small_dumbbell_run():
    p0 = flow.initial_profile(flow.Dumbbell(), 3, 257)
    return flow.run(p0, flow.StepControl())


def _random_profile(rng, n=3, N=257):
    return geo.smooth_profile(
        n, N, psi0=math.pi * rng.uniform(0.7, 1.4),
        psi_modes=[rng.uniform(-0.15, 0.15), 0.0, rng.uniform(-0.1, 0.1)],
        phi_modes=rng.uniform(-0.15, 0.15, 2)).validate()


@pytest.fixture
def random_profile():
    """Factory for admissible warped profiles with random cosine modulations."""
    return _random_profile


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def verdict():
    """Record and print one PASS/FAIL line per acceptance criterion."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
