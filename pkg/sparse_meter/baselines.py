"""Uniform down-sampling with an anti-aliasing FIR filter, and random down-sampling.

Both keep sequences at full length with zeros in the slots that are not released,
so downstream networks are the same as for the learned releaser.
"""
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .mechanism import ReleaseMode, ReleaseOutput

KAISER_BETA = 5.0
TAPS_PER_FACTOR = 8
UNIFORM_FACTORS = (2, 3, 4, 6, 8, 12)


@dataclass(frozen=True)
class FirFilter:
    """Linear-phase lowpass filter.

    Args:
        coefficients: Symmetric taps with unit DC gain.
        cutoff: Cutoff in cycles per sample, in (0, 0.5].
        order: Number of taps (8 * d + 1 for decimation factor d).

    """
    coefficients: np.ndarray
    cutoff: float
    order: int

    @property
    def dc_gain(self) -> float:
        return float(np.sum(self.coefficients))

    def frequency_response(self, frequencies: np.ndarray) -> np.ndarray:
        """Complex response at ``frequencies`` given in cycles per sample."""
        _, response = signal.freqz(
            self.coefficients, worN=2 * np.pi * np.asarray(frequencies, dtype=float)
        )
        return response

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Filter along the last axis with symmetric edge padding, keeping the length."""
        y = np.asarray(y, dtype=np.float64)
        half = (len(self.coefficients) - 1) // 2
        if half == 0:
            return y * self.coefficients[0]
        pad = [(0, 0)] * (y.ndim - 1) + [(half, half)]
        padded = np.pad(y, pad, mode='symmetric')
        kernel = self.coefficients.reshape((1,) * (y.ndim - 1) + (-1,))
        return signal.convolve(padded, kernel, mode='valid', method='direct')


def _check_factor(d: int, steps: int) -> None:
    if d < 1:
        raise ValueError(f'Decimation factor must be positive: {d}')
    if steps % d:
        raise ValueError(f'Decimation factor {d} must divide the sequence length {steps}.')


def fir_lowpass_design(d: int, steps: int = 24) -> FirFilter:
    """Kaiser-windowed sinc lowpass for decimation by ``d``.

    Cutoff is 1 / (2 d) cycles per sample and taps are renormalized to unit DC gain.
    ``d = 1`` gives the identity filter.
    """
    _check_factor(d, steps)
    if d == 1:
        return FirFilter(coefficients=np.ones(1), cutoff=0.5, order=1)
    numtaps = TAPS_PER_FACTOR * d + 1
    taps = signal.firwin(numtaps, 1.0 / d, window=('kaiser', KAISER_BETA))
    return FirFilter(coefficients=taps / taps.sum(), cutoff=0.5 / d, order=numtaps)


def uniform_downsample(y: np.ndarray, d: int) -> ReleaseOutput:
    """Filter y and keep every d-th filtered sample at positions 0, d, 2d, ...

    Args:
        y: Sequence [T] or batch [N x T].
        d: Decimation factor. Must divide T.

    """
    y = np.asarray(y, dtype=np.float64)
    steps = y.shape[-1]
    fir = fir_lowpass_design(d, steps)
    mask = np.zeros(y.shape)
    mask[..., ::d] = 1.0
    z = fir.apply(y) * mask
    return ReleaseOutput(q=mask, mask=mask, z=z, mode=ReleaseMode.uniform)


def random_count(rate: float, steps: int) -> int:
    """Number of released slots for ``rate``: ``floor(rate * steps + 0.5)``."""
    if not 0 < rate <= 1:
        raise ValueError(f'rate must be in (0, 1]: {rate}')
    return int(np.floor(rate * steps + 0.5))


def random_downsample(y: np.ndarray, rate: float,
                      rng: np.random.Generator) -> ReleaseOutput:
    """Keep a uniformly random set of ``random_count(rate, T)`` slots per sequence.

    Args:
        y: Sequence [T] or batch [N x T].
        rate: Fraction of slots to keep.
        rng: Seeded random generator.

    """
    y = np.asarray(y, dtype=np.float64)
    batch = y.reshape(-1, y.shape[-1])
    steps = batch.shape[1]
    count = random_count(rate, steps)
    mask = np.zeros(batch.shape)
    for row in range(len(batch)):
        mask[row, rng.choice(steps, size=count, replace=False)] = 1.0
    mask = mask.reshape(y.shape)
    return ReleaseOutput(q=mask, mask=mask, z=y * mask, mode=ReleaseMode.random)
