"""
Shared fixtures for the NICR Planner tests
"""

import json
import os

import pytest

from src.core.simgen import TrialDataset

SLOW = os.environ.get("NICR_SLOW_TESTS") == "1"
slow = pytest.mark.skipif(not SLOW, reason="long Monte Carlo run; set NICR_SLOW_TESTS=1")

# Prostate-cancer planning example with exponential event times and no dropout
PLANNING_CONFIG = {
    "lambda01": 0.073,
    "k1": 1.0,
    "lambda2": 0.021,
    "k2": 1.0,
    "q01": 0.737,
    "phi": 0.0,
    "tf": 7.5,
    "r": 12.0,
    "delta0": 1.5,
    "delta1": 1.0,
    "alpha": 0.05,
    "power": 0.85,
}

FOUR_SUBJECT_CSV = (
    "id,group,entry,time,status\n"
    "1,0,0,1,1\n"
    "2,1,0,2,1\n"
    "3,0,0,3,2\n"
    "4,1,0,4,1\n"
)


@pytest.fixture
def planning_config():
    return dict(PLANNING_CONFIG)


@pytest.fixture
def config_file(tmp_path):
    """Write a run document and return its path"""
    def write(doc, name="trial.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return write


@pytest.fixture
def four_subjects():
    return TrialDataset(time=[1, 2, 3, 4], status=[1, 1, 2, 1], group=[0, 1, 0, 1])


@pytest.fixture
def four_subject_csv(tmp_path):
    path = tmp_path / "four.csv"
    path.write_text(FOUR_SUBJECT_CSV)
    return str(path)
