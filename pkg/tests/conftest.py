import numpy as np
import pytest

from chfem.config import initial_field, benchmark_config
from chfem.harness import space_for
from chfem.integrator import simulate
from chfem.model import benchmark_model


@pytest.fixture(scope="session")
def params():
    return benchmark_model()


@pytest.fixture(scope="session")
def space0():
    return space_for(0)


@pytest.fixture(scope="session")
def space1():
    return space_for(1)


@pytest.fixture(scope="session")
def benchmark_run(space0):
    """Benchmark run on level 0, tau = 0.02, T = 0.16."""
    cfg = benchmark_config(level=0, T=0.16)
    phi0 = initial_field(cfg, space0)
    return simulate(phi0, cfg.time_grid(), cfg.model, cfg.settings())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def emit(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
