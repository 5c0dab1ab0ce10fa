import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dsc.estimator import PanelDataset

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_panel(cells, treated=0, t0=0):
    return PanelDataset.from_cells(cells, treated, t0)


@pytest.fixture
def normal_panel():
    """Target is the 50/50 barycenter of N(-2,1) and N(2,1); one pre, one post period."""
    g = np.random.default_rng(11)
    cells = {}
    for t in (0, 1):
        cells[(0, t)] = g.normal(0, 1, 800)
        cells[(1, t)] = g.normal(-2, 1, 800)
        cells[(2, t)] = g.normal(2, 1, 800)
    return make_panel(cells)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=int):
            terminalreporter.write_line(RESULTS[key])
