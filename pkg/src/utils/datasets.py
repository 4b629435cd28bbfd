"""
Dataset CSV import/export for NICR Planner
Header id,group,entry,time,status with an optional oracle censor_time column
"""

import functools
import logging
import re
from typing import Optional

import numpy as np
import pandas as pd

from src.core.simgen import TrialDataset
from src.utils.exceptions import DatasetFormatError, FileAccessError, InvalidParameterError

logger = logging.getLogger(__name__)

BASE_COLUMNS = ['id', 'group', 'entry', 'time', 'status']
ORACLE_COLUMN = 'censor_time'

_LINE_IN_MESSAGE = re.compile(r"line (\d+)")
# Shortest decimal literal that reads back to the same double, never exponent notation
_DECIMAL = functools.partial(np.format_float_positional, unique=True, trim="-")


def dataset_frame(data: TrialDataset, include_oracle: bool = False) -> pd.DataFrame:
    frame = pd.DataFrame({
        'id': data.ids,
        'group': data.group,
        'entry': data.entry,
        'time': data.time,
        'status': data.status,
    })
    if include_oracle:
        if not data.has_oracle:
            raise InvalidParameterError("dataset carries no oracle censoring times", fields=(ORACLE_COLUMN,))
        frame[ORACLE_COLUMN] = data.censor_time
    return frame


def write_dataset(data: TrialDataset, path: str, include_oracle: bool = False):
    """Write the dataset as CSV; oracle censoring times only when asked for"""
    frame = dataset_frame(data, include_oracle)
    try:
        frame.to_csv(path, index=False, lineterminator="\n", float_format=_DECIMAL)
    except OSError as e:
        raise FileAccessError(f"cannot write {path}: {e.strerror or e}")
    logger.info("💾 Wrote %d subjects to %s", len(frame), path)


def _numeric_column(frame: pd.DataFrame, column: str, integral: bool) -> np.ndarray:
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors='coerce')
    bad = values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
    if integral:
        bad |= ~bad & (values.fillna(0).to_numpy() % 1 != 0)
    if bad.any():
        row = int(np.argmax(bad))
        # header is line 1
        raise DatasetFormatError(f"{column} value {frame[column].iloc[row]!r} is not a valid number",
                                 line=row + 2, column=column)
    return values.to_numpy(dtype=np.int64 if integral else float)


def read_dataset(path: str, require_oracle: bool = False) -> TrialDataset:
    """Read a dataset CSV, reporting the first malformed line"""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        match = _LINE_IN_MESSAGE.search(str(e))
        raise DatasetFormatError(f"malformed CSV: {e}", line=int(match.group(1)) if match else None)
    except pd.errors.EmptyDataError:
        raise DatasetFormatError("empty file, expected header " + ",".join(BASE_COLUMNS), line=1)
    except OSError as e:
        raise FileAccessError(f"cannot read {path}: {e.strerror or e}")

    columns = [c.strip() for c in frame.columns]
    frame.columns = columns
    missing = [c for c in BASE_COLUMNS if c not in columns]
    if missing:
        raise DatasetFormatError(f"missing column(s): {', '.join(missing)}", line=1, column=missing[0])
    unknown = [c for c in columns if c not in BASE_COLUMNS + [ORACLE_COLUMN]]
    if unknown:
        raise DatasetFormatError(f"unknown column(s): {', '.join(unknown)}", line=1, column=unknown[0])
    has_oracle = ORACLE_COLUMN in columns
    if require_oracle and not has_oracle:
        raise DatasetFormatError(f"oracle weighting needs the '{ORACLE_COLUMN}' column",
                                 line=1, column=ORACLE_COLUMN)
    if frame.empty:
        raise DatasetFormatError("no subjects in dataset", line=2)

    ids = _numeric_column(frame, 'id', integral=True)
    group = _numeric_column(frame, 'group', integral=True)
    status = _numeric_column(frame, 'status', integral=True)
    entry = _numeric_column(frame, 'entry', integral=False)
    time = _numeric_column(frame, 'time', integral=False)
    censor: Optional[np.ndarray] = _numeric_column(frame, ORACLE_COLUMN, integral=False) if has_oracle else None

    for column, values, allowed in (('group', group, (0, 1)), ('status', status, (0, 1, 2))):
        wrong = ~np.isin(values, allowed)
        if wrong.any():
            row = int(np.argmax(wrong))
            raise DatasetFormatError(f"{column} must be one of {allowed}, got {values[row]}",
                                     line=row + 2, column=column)
    for column, values in (('time', time), ('entry', entry)):
        negative = values < 0
        if negative.any():
            raise DatasetFormatError(f"{column} must be non-negative", line=int(np.argmax(negative)) + 2,
                                     column=column)

    logger.info("📂 Read %d subjects from %s", len(frame), path)
    return TrialDataset(time, status, group, entry, censor, ids)
