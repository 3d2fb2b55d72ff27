from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

SCENARIOS = Path(__file__).parent.parent / "src" / "mfplan" / "scenarios"


@pytest.fixture
def pedestrian_path() -> Path:
    return SCENARIOS / "pedestrian.json"


@pytest.fixture
def greedy_path() -> Path:
    return SCENARIOS / "greedy.json"


@pytest.fixture
def single_future_path() -> Path:
    return SCENARIOS / "single_future.json"
