#!/usr/bin/env python3
"""
Tests for the Monte Carlo power harness
Reduced-scale checks run by default; the full acceptance grid needs NICR_SLOW_TESTS=1
"""

import math
from dataclasses import replace

import numpy as np
import pytest
from joblib import parallel_config

from src.core.power import (
    Hypothesis, PowerScenario, PowerSimulator, replication_seed, run_grid,
    run_scenario, table1_grid,
)
from src.utils.exceptions import InvalidParameterError
from tests.conftest import slow


def small_scenario(**changes) -> PowerScenario:
    base = dict(lambda01=1.0, k1=1.0, lambda2=0.5, k2=1.0, q01=0.5, phi=0.0,
                tf=1.0, r=0.5, delta0=1.3, replications=40, n_override=(150, 150))
    base.update(changes)
    return PowerScenario(**base)


def test_table1_grid_shape():
    grid = table1_grid()
    assert len(grid) == 120
    keys = {(s.q01, s.k1, s.k2, s.lambda01, s.lambda2, s.phi) for s in grid}
    assert len(keys) == 120
    assert {s.q01 for s in grid} == {0.3, 0.5, 0.8}
    assert {(s.k1, s.k2) for s in grid} == {(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (0.5, 1.5), (1.5, 0.5)}
    assert all(s.delta0 == 1.3 and s.delta1 == 1.0 and s.tf == 1.0 and s.r == 0.5 for s in grid)


def test_table1_grid_null_hypothesis():
    grid = table1_grid(tf=2.0, r_accrual=0.0, hypothesis=Hypothesis.NULL, replications=10)
    assert all(s.true_b == pytest.approx(math.log(1.3)) for s in grid)
    assert all(s.target_rate == pytest.approx(0.025) for s in grid)
    assert all(s.replications == 10 for s in grid)


def test_scenario_targets():
    alt = small_scenario()
    assert alt.true_b == 0.0
    assert alt.target_rate == 0.8
    null = small_scenario(hypothesis="null")
    assert null.hypothesis is Hypothesis.NULL
    assert null.true_b == pytest.approx(math.log(1.3))


def test_group_sizes_from_formula():
    s = small_scenario(n_override=None)
    n0, n1 = s.group_sizes()
    assert n0 == n1 > 229
    assert small_scenario().group_sizes() == (150, 150)


def test_invalid_scenarios():
    with pytest.raises(InvalidParameterError):
        small_scenario(replications=0)
    with pytest.raises(InvalidParameterError):
        small_scenario(n_override=(0, 10))
    with pytest.raises(InvalidParameterError):
        small_scenario(delta0=1.0)
    with pytest.raises(InvalidParameterError):
        small_scenario(hypothesis="maybe")


def test_replication_seeds_are_distinct():
    seeds = {replication_seed(7, i, r) for i in range(5) for r in range(200)}
    assert len(seeds) == 1000
    assert replication_seed(7, 1, 2) == replication_seed(7, 1, 2)
    assert replication_seed(7, 1, 2) != replication_seed(8, 1, 2)


def test_run_scenario_result_fields():
    result = run_scenario(small_scenario(), seed=11)
    assert result.replications == 40
    assert result.n_per_group == (150, 150)
    assert 0.0 <= result.rejection_rate <= 1.0
    assert result.mc_stderr == pytest.approx(
        math.sqrt(result.rejection_rate * (1 - result.rejection_rate) / 40))
    fracs = result.mean_frac_event1 + result.mean_frac_event2 + result.mean_frac_censored
    assert fracs == pytest.approx(1.0)
    assert result.seed == 11

    row = result.to_row()
    assert row["reps"] == 40
    assert row["hypothesis"] == "alt"
    assert row["seed"] == 11


def test_results_are_reproducible():
    scenario = small_scenario(replications=30)
    first = run_scenario(scenario, seed=5)
    second = run_scenario(scenario, seed=5)
    assert first == second


def test_results_independent_of_chunking_and_workers():
    grid = [small_scenario(replications=25), small_scenario(q01=0.8, replications=25)]
    serial = PowerSimulator(parallelism=1, chunk_size=50).run_grid(grid, seed=9)
    chunked = PowerSimulator(parallelism=1, chunk_size=7).run_grid(grid, seed=9)
    with parallel_config(backend="threading"):
        threaded = PowerSimulator(parallelism=2, chunk_size=4).run_grid(grid, seed=9)
    assert serial == chunked == threaded


def test_run_grid_overrides_replications():
    results = run_grid([small_scenario()], reps_per_scenario=12, seed=3)
    assert results[0].replications == 12
    with pytest.raises(InvalidParameterError):
        run_grid([], reps_per_scenario=None, seed=3)


def test_simulator_rejects_zero_workers():
    with pytest.raises(InvalidParameterError):
        PowerSimulator(parallelism=0)


def formula_scenario(hypothesis, reps):
    return PowerScenario(lambda01=2.0, k1=1.0, lambda2=0.5, k2=1.0, q01=0.8, phi=0.0,
                         tf=1.0, r=0.5, delta0=1.3, replications=reps, hypothesis=hypothesis)


def test_formula_power_reduced_scale():
    result = run_scenario(formula_scenario(Hypothesis.ALT, 200), seed=2024)
    # 200 replications: Monte Carlo standard error near 0.028
    assert 0.65 <= result.rejection_rate <= 0.93
    assert result.unconverged_count == 0


def test_formula_type_one_error_reduced_scale():
    result = run_scenario(formula_scenario(Hypothesis.NULL, 200), seed=2025)
    assert result.rejection_rate <= 0.08


# One scenario per shape pair plus a heavily censored one
ACCEPTANCE_SCENARIOS = [
    dict(q01=0.5, k1=0.5, k2=0.5, lambda01=1.0, lambda2=0.5, phi=0.0),
    dict(q01=0.5, k1=1.0, k2=1.0, lambda01=2.0, lambda2=0.15, phi=0.0),
    dict(q01=0.8, k1=2.0, k2=2.0, lambda01=1.0, lambda2=0.5, phi=0.1),
    dict(q01=0.3, k1=0.5, k2=1.5, lambda01=2.0, lambda2=0.5, phi=0.0),
    dict(q01=0.8, k1=1.5, k2=0.5, lambda01=2.0, lambda2=0.15, phi=0.1),
    dict(q01=0.3, k1=1.0, k2=1.0, lambda01=1.0, lambda2=0.5, phi=0.1),
]


def acceptance_grid(hypothesis):
    base = table1_grid(hypothesis=hypothesis, replications=2000)[0]
    return [replace(base, **changes) for changes in ACCEPTANCE_SCENARIOS]


@slow
def test_formula_power_acceptance():
    results = PowerSimulator(parallelism=-1).run_grid(acceptance_grid(Hypothesis.ALT), seed=20240601)
    rates = np.array([r.rejection_rate for r in results])
    assert np.all((rates >= 0.77) & (rates <= 0.83)), rates


@slow
def test_formula_type_one_error_acceptance():
    results = PowerSimulator(parallelism=-1).run_grid(acceptance_grid(Hypothesis.NULL), seed=20240602)
    rates = np.array([r.rejection_rate for r in results])
    assert np.all((rates >= 0.015) & (rates <= 0.035)), rates


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
