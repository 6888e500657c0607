from pathlib import Path

import numpy as np
import pytest

from cmcf import FlowConfig, load_mesh, run_flow, shapes

DATA = Path(__file__).parent / "data"

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion, printed at the end of the run."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {name}" + (f": {detail}" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


@pytest.fixture(scope="session")
def spot():
    return load_mesh(DATA / "spot.obj")


@pytest.fixture(scope="session")
def spot_cmcf(spot):
    return run_flow(spot, FlowConfig())


@pytest.fixture(scope="session")
def ico4():
    return shapes.icosphere(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20260421)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q
