"""Daily windows, train/validation/test splits and normalization."""
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Tuple

import numpy as np

from .ingest import RawSeries, HOUR_S

logger = logging.getLogger(__name__)

DAY_S = 86400
STEPS_PER_DAY = 24

TRAIN = 'train'
VALIDATION = 'validation'
TEST = 'test'
SPLITS = (TRAIN, VALIDATION, TEST)


@dataclass(frozen=True)
class NormalizationStats:
    """Mean and population standard deviation of the train split consumption."""
    mean: float
    std: float

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


@dataclass
class WindowedDataset:
    """Daily consumption sequences and their occupancy labels.

    Args:
        y: Consumption [N x T]. Watts, or standardized values once ``stats`` is set.
        x: Occupancy labels [N x T] in {0, 1}.
        household: Household identifier of each sequence.
        day_start: Epoch seconds of each sequence's first step.
        tags: Split tag of each sequence (train, validation or test).
        stats: Normalization statistics. Set when ``y`` is standardized.

    """
    y: np.ndarray
    x: np.ndarray
    household: np.ndarray
    day_start: np.ndarray
    tags: Optional[np.ndarray] = None
    stats: Optional[NormalizationStats] = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.int8)
        self.household = np.asarray(self.household, dtype=object)
        self.day_start = np.asarray(self.day_start, dtype=np.int64)
        n = len(self.y)
        if self.y.ndim != 2 or self.x.shape != self.y.shape:
            raise ValueError(
                f'y {self.y.shape} and x {self.x.shape} must be equal [N x T] arrays.'
            )
        if len(self.household) != n or len(self.day_start) != n:
            raise ValueError('household and day_start need one entry per sequence.')
        if self.tags is not None:
            self.tags = np.asarray(self.tags, dtype=object)
            if len(self.tags) != n or not np.isin(self.tags, SPLITS).all():
                raise ValueError(f'tags must hold one of {SPLITS} per sequence.')

    def __len__(self) -> int:
        return len(self.y)

    @property
    def steps(self) -> int:
        return self.y.shape[1]

    @property
    def normalized(self) -> bool:
        return self.stats is not None

    @property
    def raw_y(self) -> np.ndarray:
        """Consumption in watts."""
        return self.stats.invert(self.y) if self.normalized else self.y

    def subset(self, tag: str) -> 'WindowedDataset':
        """Sequences carrying ``tag``."""
        if self.tags is None:
            raise ValueError('Dataset is not split. Run split first.')
        if tag not in SPLITS:
            raise ValueError(f'Unknown split "{tag}". Valid splits are {SPLITS}.')
        return self.take(np.flatnonzero(self.tags == tag))

    def take(self, indices: np.ndarray) -> 'WindowedDataset':
        indices = np.asarray(indices, dtype=np.int64)
        return replace(
            self, y=self.y[indices], x=self.x[indices],
            household=self.household[indices], day_start=self.day_start[indices],
            tags=None if self.tags is None else self.tags[indices]
        )

    @classmethod
    def concatenate(cls, datasets: Iterable['WindowedDataset']) -> 'WindowedDataset':
        datasets = list(datasets)
        if not datasets:
            raise ValueError('Nothing to concatenate.')
        if any(d.normalized or d.tags is not None for d in datasets):
            raise ValueError('Concatenate datasets before splitting and normalizing.')
        return cls(
            y=np.concatenate([d.y for d in datasets]),
            x=np.concatenate([d.x for d in datasets]),
            household=np.concatenate([d.household for d in datasets]),
            day_start=np.concatenate([d.day_start for d in datasets])
        )


def window_daily(hourly: RawSeries, utc_offset_s: int = 0) -> WindowedDataset:
    """Cut an hourly series into complete days starting at local midnight.

    Args:
        hourly: Series from ``resample_hourly``.
        utc_offset_s: Offset of local time from UTC in seconds. An offset that is not
            a whole number of hours, such as +05:30, is floored to the hour grid so
            days start at the first whole UTC hour after local midnight.

    Returns:
        WindowedDataset -- one sequence per complete day. Days with a missing hour
        are dropped.
    """
    offset = (int(utc_offset_s) // HOUR_S) * HOUR_S
    if offset != utc_offset_s:
        logger.warning('UTC offset %d s is not a whole number of hours. Using %d s.',
                       utc_offset_s, offset)
    local = hourly.timestamps + offset
    if np.any(local % HOUR_S):
        raise ValueError('Series is not aligned to whole hours. Run resample_hourly first.')
    day = local // DAY_S
    days, counts = np.unique(day, return_counts=True)
    complete = days[counts == STEPS_PER_DAY]
    keep = np.isin(day, complete)
    n = len(complete)
    if n == 0:
        empty = np.zeros((0, STEPS_PER_DAY))
        return WindowedDataset(
            y=empty, x=empty, household=np.array([], dtype=object),
            day_start=np.array([], dtype=np.int64)
        )
    return WindowedDataset(
        y=hourly.power[keep].reshape(n, STEPS_PER_DAY),
        x=hourly.occupancy[keep].reshape(n, STEPS_PER_DAY),
        household=np.full(n, hourly.household, dtype=object),
        day_start=complete * DAY_S - offset
    )


def _split_counts(n: int) -> Tuple[int, int]:
    n_test = (15 * n) // 100
    n_validation = (n - n_test) // 10
    return n_test, n_validation


def split(dataset: WindowedDataset, seed: int,
          per_household: bool = False) -> WindowedDataset:
    """Tag 15% of the sequences as test and 10% of the rest as validation.

    Both counts are rounded down. The remaining sequences are train.

    Args:
        dataset: Dataset to split.
        seed: Seed of the shuffle.
        per_household: Apply the split rule within each household instead of over
            the pooled sequences.

    """
    if len(dataset) < 20:
        raise ValueError(f'Need at least 20 sequences to split, got {len(dataset)}.')
    rng = np.random.default_rng(seed)
    tags = np.empty(len(dataset), dtype=object)
    if per_household:
        groups = [np.flatnonzero(dataset.household == h)
                  for h in sorted(set(dataset.household))]
    else:
        groups = [np.arange(len(dataset))]
    for group in groups:
        order = group[rng.permutation(len(group))]
        n_test, n_validation = _split_counts(len(group))
        tags[order[:n_test]] = TEST
        tags[order[n_test:n_test + n_validation]] = VALIDATION
        tags[order[n_test + n_validation:]] = TRAIN
    return replace(dataset, tags=tags)


def normalize(dataset: WindowedDataset) -> Tuple[WindowedDataset, NormalizationStats]:
    """Standardize consumption with the train split mean and standard deviation."""
    if dataset.tags is None:
        raise ValueError('Dataset is not split. Normalization stats come from the '
                         'train split only.')
    if dataset.normalized:
        raise ValueError('Dataset is already normalized.')
    train = dataset.y[dataset.tags == TRAIN]
    if train.size == 0:
        raise ValueError('Train split is empty.')
    std = float(train.std())
    if std == 0:
        raise ValueError('Train consumption has zero standard deviation.')
    stats = NormalizationStats(mean=float(train.mean()), std=std)
    return replace(dataset, y=stats.apply(dataset.y), stats=stats), stats


def denormalize(values: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return stats.invert(values)


def to_hourly_series(dataset: WindowedDataset, household: str = None) -> RawSeries:
    """Flatten the sequences of one household back into an hourly series."""
    if household is not None:
        dataset = dataset.take(np.flatnonzero(dataset.household == household))
    order = np.argsort(dataset.day_start, kind='stable')
    steps = np.arange(dataset.steps) * HOUR_S
    return RawSeries(
        timestamps=(dataset.day_start[order, None] + steps).reshape(-1),
        power=dataset.raw_y[order].reshape(-1),
        occupancy=dataset.x[order].reshape(-1),
        household=household or (str(dataset.household[0]) if len(dataset) else 'house')
    )
