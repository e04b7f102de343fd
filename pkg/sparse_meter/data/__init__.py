"""Meter data ingestion, daily windows, splits and the synthetic generator."""
from .ingest import RawSeries, DataFormatError, load_csv, write_csv, resample_hourly
from .windows import (
    WindowedDataset, NormalizationStats, window_daily, split, normalize, denormalize,
    to_hourly_series, TRAIN, VALIDATION, TEST, STEPS_PER_DAY
)
from .synthetic import synthesize_dataset, synthesize_series, stationary_occupancy
from .pipeline import load_windows, prepare_dataset, SYNTHETIC
