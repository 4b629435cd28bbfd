#!/usr/bin/env python3
"""
Tests for dataset CSV import/export and the report writers
"""

import math

import numpy as np
import pandas as pd
import pytest

from src.core.design import table2_rows
from src.core.power import PowerScenario, run_scenario
from src.core.simgen import GenScenario, TrialDataset, generate_dataset
from src.utils.datasets import BASE_COLUMNS, ORACLE_COLUMN, read_dataset, write_dataset
from src.utils.exceptions import DatasetFormatError, FileAccessError
from src.utils.reports import (
    POWER_COLUMNS, TABLE2_COLUMNS, plot_power_svg, table2_frame, write_power_csv,
)


def generated(seed=3):
    return generate_dataset(GenScenario(lambda01=1.0, k1=1.0, lambda2=0.5, k2=1.0, q01=0.5,
                                        phi=0.2, tf=1.0, r=0.5, b=math.log(1.3),
                                        n0=30, n1=30, seed=seed))


def test_write_then_read(tmp_path):
    data = generated()
    path = tmp_path / "trial.csv"
    write_dataset(data, str(path), include_oracle=True)
    back = read_dataset(str(path), require_oracle=True)
    np.testing.assert_array_equal(back.status, data.status)
    np.testing.assert_array_equal(back.group, data.group)
    np.testing.assert_array_equal(back.ids, np.arange(1, 61))
    np.testing.assert_allclose(back.time, data.time, rtol=1e-15)
    np.testing.assert_allclose(back.censor_time, data.censor_time, rtol=1e-15)


def test_oracle_column_only_on_request(tmp_path):
    path = tmp_path / "trial.csv"
    write_dataset(generated(), str(path))
    header = path.read_text().splitlines()[0]
    assert header == ",".join(BASE_COLUMNS)
    assert not read_dataset(str(path)).has_oracle


def test_export_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_dataset(generated(seed=8), str(a))
    write_dataset(generated(seed=8), str(b))
    assert a.read_bytes() == b.read_bytes()


def test_times_written_as_decimal_literals(tmp_path):
    path = tmp_path / "small.csv"
    times = [1e-05, 2.5e-12, 123456.75]
    write_dataset(TrialDataset(times, [1, 0, 2], [0, 1, 0], entry=[3e-07, 0.0, 1.0]), str(path))
    body = path.read_text().splitlines()[1:]
    assert body[0] == "1,0,0.0000003,0.00001,1"
    assert all("e" not in line.lower() for line in body)
    back = read_dataset(str(path))
    np.testing.assert_allclose(back.time, times, rtol=1e-15)
    np.testing.assert_allclose(back.entry, [3e-07, 0.0, 1.0], rtol=1e-15)


def test_four_subject_file(four_subject_csv):
    data = read_dataset(four_subject_csv)
    assert len(data) == 4
    assert list(data.status) == [1, 1, 2, 1]
    assert list(data.time) == [1.0, 2.0, 3.0, 4.0]


def test_missing_oracle_column_is_named(four_subject_csv):
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(four_subject_csv, require_oracle=True)
    assert err.value.column == ORACLE_COLUMN
    assert err.value.exit_code == 2


@pytest.mark.parametrize("body, line, column", [
    ("1,0,0,1,1\n2,1,0,abc,1\n", 3, "time"),
    ("1,0,0,1,1\n2,3,0,1,1\n", 3, "group"),
    ("1,0,0,1,4\n", 2, "status"),
    ("1,0,0,-1,1\n", 2, "time"),
    ("1,0,0,1,1.5\n", 2, "status"),
])
def test_bad_values_report_line(tmp_path, body, line, column):
    path = tmp_path / "bad.csv"
    path.write_text("id,group,entry,time,status\n" + body)
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(str(path))
    assert err.value.line == line
    assert err.value.column == column
    assert str(err.value).startswith(f"line {line}:")


def test_bad_headers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,group,time,status\n1,0,1,1\n")
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(str(path))
    assert err.value.column == "entry"

    path.write_text("id,group,entry,time,status,weight\n1,0,0,1,1,2\n")
    with pytest.raises(DatasetFormatError) as err:
        read_dataset(str(path))
    assert err.value.column == "weight"

    path.write_text("")
    with pytest.raises(DatasetFormatError):
        read_dataset(str(path))

    path.write_text("id,group,entry,time,status\n")
    with pytest.raises(DatasetFormatError):
        read_dataset(str(path))


def test_unreadable_and_unwritable_paths(tmp_path):
    with pytest.raises(FileAccessError) as err:
        read_dataset(str(tmp_path / "nowhere.csv"))
    assert err.value.exit_code == 4
    with pytest.raises(FileAccessError):
        write_dataset(TrialDataset([1.0], [1], [0]), str(tmp_path / "no" / "such" / "dir.csv"))


# Reports

def test_table2_frame_layout():
    frame = table2_frame(table2_rows())
    assert list(frame.columns) == TABLE2_COLUMNS
    assert len(frame) == 6
    assert (frame["events"] == 220).all()
    row = frame[(frame["k1"] == 1.0) & (frame["phi"] == 0.0)].iloc[0]
    assert row["lambda1"] == "0.073"
    assert row["lambda2"] == "0.021"
    assert row["N_CR"] == 486


@pytest.fixture(scope="module")
def power_results():
    scenario = PowerScenario(lambda01=1.0, k1=1.0, lambda2=0.5, k2=1.0, q01=0.5, phi=0.0,
                             tf=1.0, r=0.5, delta0=1.3, replications=10, n_override=(80, 80))
    return [run_scenario(scenario, seed=1)]


def test_power_csv(tmp_path, power_results):
    path = tmp_path / "power.csv"
    write_power_csv(power_results, str(path))
    frame = pd.read_csv(path)
    assert list(frame.columns) == POWER_COLUMNS
    assert frame.loc[0, "reps"] == 10
    assert frame.loc[0, "n0"] == 80
    assert frame.loc[0, "hypothesis"] == "alt"


def test_power_plot_svg(tmp_path, power_results):
    path = tmp_path / "power.svg"
    plot_power_svg(power_results, str(path))
    text = path.read_text()
    assert "<svg" in text
    with pytest.raises(FileAccessError):
        plot_power_svg(power_results, str(tmp_path / "missing" / "power.svg"))


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
