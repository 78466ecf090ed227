import pytest

from muhs.evolution import SolverConfig, simulate
from muhs.grid import make_grid
from muhs.initial_data import cosine_data


@pytest.fixture(scope="session")
def cosine_config():
    return SolverConfig(lam=0.5, n_points=256, t_end=1.0, dt=1e-3, snapshot_stride=10)


@pytest.fixture(scope="session")
def cosine_ic():
    return cosine_data(make_grid(256), 1.0, 0.02)


@pytest.fixture(scope="session")
def cosine_run(cosine_config, cosine_ic):
    return simulate(cosine_config, cosine_ic)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"criterion {number}: {status}  {title}  [{detail}]")
        assert passed, f"criterion {number} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
