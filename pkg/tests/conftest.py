import numpy as np
import pytest

from oqbm.grid import SpatialGrid
from oqbm.params import CoefficientSet

FIG1A = CoefficientSet(8e-3, 1e-3, 3e-3, 5e-2, 1e-2, 5e-3, 8e-3, 1e-3, 1e-4)
ZERO = CoefficientSet(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@pytest.fixture
def small_grid():
    return SpatialGrid(12.0, 241)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


# acceptance support -------------------------------------------------------------

_TRAJECTORIES = {}
_CRITERIA = {}


def full_trajectory(name):
    """Full-resolution run of a bundled scenario, computed once per session."""
    import time
    from oqbm import config, dynamics
    if name not in _TRAJECTORIES:
        start = time.perf_counter()
        tr = dynamics.evolve(config.bundled(name))
        _TRAJECTORIES[name] = (tr, time.perf_counter() - start)
    return _TRAJECTORIES[name]


@pytest.fixture
def record_criterion():
    """record_criterion(k, passed, detail); parts of one criterion are AND-ed."""
    def record(k, passed, detail):
        ok, details = _CRITERIA.get(k, (True, []))
        _CRITERIA[k] = (ok and bool(passed), details + [detail])
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, details = _CRITERIA[k]
        terminalreporter.write_line(f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  " + "; ".join(details))
