from __future__ import annotations

import logging

import numpy as np
import pytest

from openadmm.costs import consensus_cost
from openadmm.open_graph import GraphSnapshot


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def path4() -> GraphSnapshot:
    """0 - 1 - 2 - 3"""
    return GraphSnapshot.path(4)


@pytest.fixture
def triangle() -> GraphSnapshot:
    return GraphSnapshot([0, 1, 2], [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def avg_costs():
    return lambda signals: {a: consensus_cost("avg", u) for a, u in enumerate(signals)}


@pytest.fixture(autouse=True)
def _quiet_library_logs(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.WARNING, logger="openadmm")
