"""Read and write meter CSV files and resample them to hourly resolution."""
import logging
import pathlib
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

HEADER = ('timestamp', 'power_w', 'occupancy')
HOUR_S = 3600
_MISSING = {'', 'nan', 'na', 'null'}


class DataFormatError(ValueError):
    """A meter file does not follow the ``timestamp,power_w,occupancy`` format."""

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


@dataclass
class RawSeries:
    """Power readings of one household.

    Args:
        timestamps: Strictly increasing epoch seconds.
        power: Power in watts.
        occupancy: Occupancy label (0 or 1) per reading.
        household: Household identifier.
        dropped: Number of input rows dropped for missing power.

    """
    timestamps: np.ndarray
    power: np.ndarray
    occupancy: np.ndarray
    household: str = 'house'
    dropped: int = 0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.power = np.asarray(self.power, dtype=np.float64)
        self.occupancy = np.asarray(self.occupancy, dtype=np.int8)
        if not len(self.timestamps) == len(self.power) == len(self.occupancy):
            raise ValueError(
                'timestamps, power and occupancy must have equal length: '
                f'{len(self.timestamps)}, {len(self.power)}, {len(self.occupancy)}'
            )
        if len(self.timestamps) > 1 and np.any(np.diff(self.timestamps) <= 0):
            raise ValueError('timestamps must be strictly increasing.')

    def __len__(self) -> int:
        return len(self.timestamps)


def _first_bad_line(bad: pd.Series) -> int:
    # header is line 1 and the first data row is line 2
    return int(np.flatnonzero(bad.to_numpy())[0]) + 2


def load_csv(path: Union[str, pathlib.Path], household: str = None) -> RawSeries:
    """Load a meter CSV with the exact header ``timestamp,power_w,occupancy``.

    Rows with a missing power value are dropped with a warning and counted in
    ``RawSeries.dropped``.

    Args:
        path: Path to the CSV file.
        household: Household identifier. Defaults to the file stem.

    Returns:
        RawSeries -- the validated series.
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'Data file not found: {path}')
    with path.open(encoding='utf-8') as inf:
        header = inf.readline().strip()
    if tuple(c.strip() for c in header.split(',')) != HEADER:
        raise DataFormatError(
            f'expected header "{",".join(HEADER)}", got "{header}"', line=1
        )

    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as error:
        raise DataFormatError(f'malformed row: {error}')
    df = df.fillna('')
    df.columns = [c.strip() for c in df.columns]

    ts_text = df['timestamp'].str.strip()
    ts_num = pd.to_numeric(ts_text, errors='coerce')
    bad = ts_num.isna() | (ts_num != ts_num.round())
    if bad.any():
        line = _first_bad_line(bad)
        raise DataFormatError(
            f'timestamp "{ts_text.iloc[line - 2]}" is not an integer', line=line
        )

    occ_text = df['occupancy'].str.strip()
    bad = ~occ_text.isin(['0', '1'])
    if bad.any():
        line = _first_bad_line(bad)
        raise DataFormatError(
            f'occupancy must be 0 or 1, got "{occ_text.iloc[line - 2]}"', line=line
        )

    power_text = df['power_w'].str.strip()
    missing = power_text.str.lower().isin(_MISSING)
    power_num = pd.to_numeric(power_text.where(~missing, '0'), errors='coerce')
    bad = power_num.isna() | ~np.isfinite(power_num.fillna(0)) | (power_num < 0)
    if bad.any():
        line = _first_bad_line(bad)
        raise DataFormatError(
            f'power_w must be a non-negative number, got "{power_text.iloc[line - 2]}"',
            line=line
        )

    timestamps = ts_num.to_numpy(dtype=np.float64).astype(np.int64)
    keep = ~missing.to_numpy()
    diffs = np.diff(timestamps[keep])
    if np.any(diffs <= 0):
        rows = np.flatnonzero(keep)
        line = int(rows[np.flatnonzero(diffs <= 0)[0] + 1]) + 2
        raise DataFormatError('timestamps must be strictly increasing', line=line)

    dropped = int(missing.sum())
    if dropped:
        warnings.warn(f'{path.name}: dropped {dropped} row(s) with missing power_w.')
    logger.info('loaded %d rows from %s (%d dropped)', int(keep.sum()), path, dropped)

    return RawSeries(
        timestamps=timestamps[keep],
        # float() per value keeps the decimal text round-trip exact
        power=power_text[keep].astype(np.float64).to_numpy(),
        occupancy=occ_text[keep].astype(np.int8).to_numpy(),
        household=household or path.stem,
        dropped=dropped
    )


def write_csv(series: RawSeries, path: Union[str, pathlib.Path]) -> pathlib.Path:
    """Write a series in the format ``load_csv`` reads."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame({
        'timestamp': series.timestamps,
        'power_w': series.power,
        'occupancy': series.occupancy.astype(int)
    })
    df.to_csv(path, index=False, lineterminator='\n')
    return path


def resample_hourly(raw: RawSeries) -> RawSeries:
    """Average power over each clock hour and take the majority occupancy label.

    Hours with no readings are dropped. An hour with as many occupied as vacant
    readings is labeled occupied.
    """
    if len(raw) == 0:
        raise ValueError('Cannot resample an empty series.')
    df = pd.DataFrame({
        'bucket': raw.timestamps // HOUR_S,
        'power': raw.power,
        'occupancy': raw.occupancy.astype(np.float64)
    })
    hourly = df.groupby('bucket', sort=True).mean()
    return RawSeries(
        timestamps=hourly.index.to_numpy(dtype=np.int64) * HOUR_S,
        power=hourly['power'].to_numpy(),
        occupancy=(hourly['occupancy'].to_numpy() >= 0.5).astype(np.int8),
        household=raw.household
    )
