"""Release mechanism: soft masking for training and the test-time release modes.

A release turns consumption ``y`` and a soft mask ``q`` in [0, 1] into a mask and the
released sequence ``z = y * mask``. Training uses the soft mask directly so the
gradient is exact. At test time the mask is thresholded (``hard`` keeps 0/1,
``multiplicative`` keeps q where released) or sampled (``stochastic``).
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .numerics import Tensor, multiply, add

ArrayLike = Union[np.ndarray, Tensor, list, float]

Q_TOLERANCE = 1e-9


class ReleaseMode(str, Enum):
    soft_train = 'soft-train'
    hard = 'hard'
    multiplicative = 'multiplicative'
    stochastic = 'stochastic'
    additive = 'additive'
    uniform = 'uniform'
    random = 'random'


@dataclass
class ReleaseOutput:
    """Result of one release.

    Args:
        q: Soft mask [B x T].
        mask: Multipliers applied to y. Equal to q in soft-train mode, 0/1 in hard
            and stochastic modes and q or 0 in multiplicative mode. All ones for
            additive releases.
        z: Released data [B x T]. A tracked Tensor in soft-train and additive modes
            when built from tracked inputs.
        mode: The release mode. Baseline releases use uniform or random.

    """
    q: Union[np.ndarray, Tensor]
    mask: Union[np.ndarray, Tensor]
    z: Union[np.ndarray, Tensor]
    mode: ReleaseMode

    @property
    def z_values(self) -> np.ndarray:
        return self.z.values if isinstance(self.z, Tensor) else self.z

    @property
    def mask_values(self) -> np.ndarray:
        return self.mask.values if isinstance(self.mask, Tensor) else self.mask


def _values(x: ArrayLike) -> np.ndarray:
    if isinstance(x, Tensor):
        return x.values
    return np.asarray(x, dtype=np.float64)


def _check_q(q: np.ndarray) -> None:
    if q.size and (q.min() < -Q_TOLERANCE or q.max() > 1 + Q_TOLERANCE):
        raise ValueError(
            f'Soft mask must be in [0, 1]. Found values in [{q.min()!r}, {q.max()!r}].'
        )


def _check_shapes(y: np.ndarray, q: np.ndarray, caller: str) -> None:
    if y.shape != q.shape:
        raise ValueError(f'{caller}: y {y.shape} and q {q.shape} must have equal shape.')


def soft_mask_apply(y: ArrayLike, q: ArrayLike) -> ReleaseOutput:
    """Release ``z = y * q``. Gradients flow into both y and q when they are tracked."""
    y = y if isinstance(y, Tensor) else Tensor(y)
    q = q if isinstance(q, Tensor) else Tensor(q)
    _check_shapes(y.values, q.values, 'soft_mask_apply')
    _check_q(q.values)
    return ReleaseOutput(q=q, mask=q, z=multiply(y, q), mode=ReleaseMode.soft_train)


def hard_threshold(y: ArrayLike, q: ArrayLike, tau: float = 0.5) -> ReleaseOutput:
    """Release y where q >= tau and 0 elsewhere. A tie releases the sample."""
    y, q = _values(y), _values(q)
    _check_shapes(y, q, 'hard_threshold')
    _check_q(q)
    mask = (q >= tau).astype(np.float64)
    return ReleaseOutput(q=q, mask=mask, z=y * mask, mode=ReleaseMode.hard)


def soft_nonzero_threshold(y: ArrayLike, q: ArrayLike, tau: float = 0.5) -> ReleaseOutput:
    """Release y * q where q >= tau and 0 elsewhere.

    This combines down-sampling with a multiplicative distortion of the retained
    samples.
    """
    y, q = _values(y), _values(q)
    _check_shapes(y, q, 'soft_nonzero_threshold')
    _check_q(q)
    mask = np.where(q >= tau, np.clip(q, 0.0, 1.0), 0.0)
    return ReleaseOutput(q=q, mask=mask, z=y * mask, mode=ReleaseMode.multiplicative)


def stochastic_release(y: ArrayLike, q: ArrayLike,
                       rng: np.random.Generator) -> ReleaseOutput:
    """Release each sample independently with probability q."""
    y, q = _values(y), _values(q)
    _check_shapes(y, q, 'stochastic_release')
    _check_q(q)
    mask = (rng.random(q.shape) < np.clip(q, 0.0, 1.0)).astype(np.float64)
    return ReleaseOutput(q=q, mask=mask, z=y * mask, mode=ReleaseMode.stochastic)


def additive_release(y: ArrayLike, noise: ArrayLike) -> ReleaseOutput:
    """Release ``z = y + noise`` without removing any sample."""
    tracked = isinstance(y, Tensor) or isinstance(noise, Tensor)
    if tracked:
        z = add(y, noise)
        ones = np.ones(z.shape)
        return ReleaseOutput(q=ones, mask=ones, z=z, mode=ReleaseMode.additive)
    y, noise = _values(y), _values(noise)
    _check_shapes(y, noise, 'additive_release')
    ones = np.ones(y.shape)
    return ReleaseOutput(q=ones, mask=ones, z=y + noise, mode=ReleaseMode.additive)


def release(y: ArrayLike, q: ArrayLike, mode: Union[ReleaseMode, str], tau: float = 0.5,
            rng: Optional[np.random.Generator] = None) -> ReleaseOutput:
    """Apply one of the test-time release modes by name."""
    mode = ReleaseMode(mode)
    if mode == ReleaseMode.hard:
        return hard_threshold(y, q, tau)
    if mode == ReleaseMode.multiplicative:
        return soft_nonzero_threshold(y, q, tau)
    if mode == ReleaseMode.stochastic:
        if rng is None:
            raise ValueError('stochastic release needs a seeded random generator.')
        return stochastic_release(y, q, rng)
    if mode == ReleaseMode.soft_train:
        return soft_mask_apply(y, q)
    raise ValueError(f'{mode.value} is not a masking release mode.')


def released_rate(mask: ArrayLike) -> float:
    """Average number of nonzero mask entries per sequence."""
    mask = _values(mask)
    if mask.ndim == 1:
        mask = mask[np.newaxis, :]
    return float(np.count_nonzero(mask, axis=1).mean())
