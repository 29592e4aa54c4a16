import numpy as np
import pytest

from conetree import kernels, validate
from conetree.recursion import boundary_values, green_levels
from conetree.potential import RadialPotential


@pytest.fixture(scope="session")
def binary():
    return validate([2])


@pytest.fixture(scope="session")
def golden():
    # labels o and b; o has children o, o, b and b has children o, b
    return validate([[2, 1], [1, 1]])


@pytest.fixture(scope="session")
def warm_kernels(golden):
    """Compile the kernels once so timings measure the computation only."""
    boundary_values([0.3], golden)
    green_levels(0.3 + 1e-3j, golden, RadialPotential.zero(2), 2)
    kernels.dirichlet_table(np.array([1j]), golden.as_float(), 3)
    for name in kernels.available_backends():
        impl = kernels.get_backend(name)
        impl.newton(np.array([[1j, 1j]]), golden.as_float(), np.array([[1j, 1j]]), 5)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
