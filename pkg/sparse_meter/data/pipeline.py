"""From a data source to split and standardized daily sequences."""
import logging
import pathlib
from typing import Union

from .ingest import load_csv, resample_hourly
from .synthetic import synthesize_dataset
from .windows import WindowedDataset, window_daily, split, normalize, TRAIN, VALIDATION, \
    TEST

logger = logging.getLogger(__name__)

SYNTHETIC = 'synth'


def load_windows(source: Union[str, pathlib.Path], utc_offset_s: int = 0
                 ) -> WindowedDataset:
    """Daily windows of a meter CSV or of every ``*.csv`` in a folder.

    Each file is one household named after the file stem.
    """
    path = pathlib.Path(source)
    if path.is_dir():
        files = sorted(path.glob('*.csv'))
        if not files:
            raise FileNotFoundError(f'No CSV files in {path}')
    elif path.is_file():
        files = [path]
    else:
        raise FileNotFoundError(f'Data path does not exist: {path}')
    datasets = []
    for f in files:
        windows = window_daily(resample_hourly(load_csv(f)), utc_offset_s)
        logger.info('%s: %d complete days', f.name, len(windows))
        datasets.append(windows)
    return WindowedDataset.concatenate(datasets)


def prepare_dataset(source: Union[str, pathlib.Path], seed: int, n_days: int = 365,
                    utc_offset_s: int = 0, per_household: bool = False
                    ) -> WindowedDataset:
    """Load, split and standardize a dataset.

    Args:
        source: ``synth`` for the synthetic generator, a CSV file or a folder of CSV
            files.
        seed: Seed of the synthetic data and of the split.
        n_days: Days generated for ``synth``.
        utc_offset_s: Local time offset used to cut days.
        per_household: Split within each household.

    """
    if str(source) == SYNTHETIC:
        windows = synthesize_dataset(n_days, seed)
    else:
        windows = load_windows(source, utc_offset_s)
    dataset, _ = normalize(split(windows, seed, per_household))
    logger.info(
        'dataset: %d sequences (%d train, %d validation, %d test)', len(dataset),
        *(int((dataset.tags == tag).sum()) for tag in (TRAIN, VALIDATION, TEST))
    )
    return dataset
