"""Synthetic households with occupancy-driven consumption.

Occupancy follows a two-state Markov chain over the hours of a day whose stay
probabilities change during the morning and evening peaks. Consumption is a base
load, plus a log-normal appliance load while occupied, plus Gaussian noise. Each
day starts from the periodic stationary distribution of the chain so days are
independent and identically distributed.
"""
import numpy as np

from .ingest import RawSeries
from .windows import WindowedDataset, DAY_S, STEPS_PER_DAY, to_hourly_series

BASE_LOAD_W = 100.0
APPLIANCE_MEDIAN_W = 400.0
APPLIANCE_LOG_SIGMA = 0.5
NOISE_STD_W = 30.0
STAY_VACANT = 0.85
STAY_OCCUPIED = 0.85
PEAK_HOURS = frozenset((6, 7, 8, 17, 18, 19, 20, 21, 22))
# people come home and stay home during peak hours
PEAK_VACANT_SHIFT = -0.25
PEAK_OCCUPIED_SHIFT = 0.10

MIN_DAYS = 20


def stay_probabilities(hour: int):
    """(stay vacant, stay occupied) for the transition into ``hour``."""
    peak = hour in PEAK_HOURS
    return (
        STAY_VACANT + (PEAK_VACANT_SHIFT if peak else 0.0),
        STAY_OCCUPIED + (PEAK_OCCUPIED_SHIFT if peak else 0.0)
    )


def transition_matrix(hour: int) -> np.ndarray:
    """Row-stochastic matrix P[from, to] for the transition into ``hour``."""
    vacant, occupied = stay_probabilities(hour)
    return np.array([[vacant, 1.0 - vacant], [1.0 - occupied, occupied]])


def stationary_occupancy() -> np.ndarray:
    """Probability of being occupied at each hour of the day, in steady state."""
    daily = np.eye(2)
    for hour in list(range(1, STEPS_PER_DAY)) + [0]:
        daily = daily @ transition_matrix(hour)
    # left eigenvector of the day-long transition for eigenvalue 1
    values, vectors = np.linalg.eig(daily.T)
    start = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    start = start / start.sum()
    marginals = [start]
    for hour in range(1, STEPS_PER_DAY):
        marginals.append(marginals[-1] @ transition_matrix(hour))
    return np.array([m[1] for m in marginals])


def synthesize_dataset(n_days: int, seed: int,
                       household: str = 'synthetic') -> WindowedDataset:
    """Generate ``n_days`` independent days of hourly consumption and occupancy."""
    if n_days < MIN_DAYS:
        raise ValueError(f'n_days must be at least {MIN_DAYS}: {n_days}')
    rng = np.random.default_rng(seed)
    occupied = np.empty((n_days, STEPS_PER_DAY), dtype=np.int8)
    occupied[:, 0] = rng.random(n_days) < stationary_occupancy()[0]
    for hour in range(1, STEPS_PER_DAY):
        vacant_stay, occupied_stay = stay_probabilities(hour)
        prev = occupied[:, hour - 1]
        stay = np.where(prev == 1, occupied_stay, vacant_stay)
        occupied[:, hour] = np.where(rng.random(n_days) < stay, prev, 1 - prev)

    shape = occupied.shape
    appliances = rng.lognormal(np.log(APPLIANCE_MEDIAN_W), APPLIANCE_LOG_SIGMA, shape)
    noise = rng.normal(0.0, NOISE_STD_W, shape)
    power = np.maximum(BASE_LOAD_W + occupied * appliances + noise, 0.0)
    return WindowedDataset(
        y=power,
        x=occupied,
        household=np.full(n_days, household, dtype=object),
        day_start=np.arange(n_days, dtype=np.int64) * DAY_S
    )


def synthesize_series(n_days: int, seed: int, household: str = 'synthetic') -> RawSeries:
    """Same data as ``synthesize_dataset`` as an hourly series ready for CSV."""
    return to_hourly_series(synthesize_dataset(n_days, seed, household))
