"""Minibatches of sequences with fresh seed noise."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import WindowedDataset


@dataclass
class SequenceBatch:
    """Consumption y [B x T], labels x [B x T] and seed noise u [B x T x m]."""
    y: np.ndarray
    x: np.ndarray
    u: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return len(self.y)

    @property
    def steps(self) -> int:
        return self.y.shape[1]

    def releaser_inputs(self) -> np.ndarray:
        """Per-step releaser input (x, y, u) of shape [B x T x (2 + m)]."""
        return np.concatenate(
            [self.x[..., np.newaxis].astype(np.float64), self.y[..., np.newaxis], self.u],
            axis=2
        )


def _check_batch_size(dataset: WindowedDataset, batch_size: int) -> None:
    if len(dataset) == 0:
        raise ValueError('Cannot sample from an empty dataset.')
    if batch_size > len(dataset):
        raise ValueError(
            f'Batch size {batch_size} is larger than the dataset ({len(dataset)} '
            'sequences).'
        )


def _batch(dataset: WindowedDataset, indices: np.ndarray, noise_dim: int,
           rng: np.random.Generator) -> SequenceBatch:
    u = rng.random((len(indices), dataset.steps, noise_dim))
    return SequenceBatch(
        y=dataset.y[indices], x=dataset.x[indices], u=u, indices=indices
    )


def sample_minibatch(dataset: WindowedDataset, batch_size: int, noise_dim: int,
                     rng: np.random.Generator) -> SequenceBatch:
    """Draw ``batch_size`` distinct sequences and Uniform[0, 1) seed noise."""
    _check_batch_size(dataset, batch_size)
    indices = rng.choice(len(dataset), size=batch_size, replace=False)
    return _batch(dataset, indices, noise_dim, rng)


class EpochSampler:
    """Draw minibatches without replacement from a shuffle of the dataset.

    A new shuffle starts when fewer than ``batch_size`` sequences are left.

    Args:
        seed: Seed of the shuffles and the noise.

    """

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self._order: Optional[np.ndarray] = None
        self._cursor = 0
        self._size = -1

    def draw(self, dataset: WindowedDataset, batch_size: int,
             noise_dim: int) -> SequenceBatch:
        _check_batch_size(dataset, batch_size)
        if self._size != len(dataset) or self._cursor + batch_size > len(self._order):
            self._order = self.rng.permutation(len(dataset))
            self._cursor = 0
            self._size = len(dataset)
        indices = self._order[self._cursor:self._cursor + batch_size]
        self._cursor += batch_size
        return _batch(dataset, indices, noise_dim, self.rng)
