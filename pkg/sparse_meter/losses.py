"""Utility, adversary and releaser losses and the directed-information bound.

All logarithms are natural, so entropies and bounds are in nats. Probabilities are
clamped to [PROB_EPS, 1 - PROB_EPS] before any log.
"""
from dataclasses import dataclass, asdict
from typing import Dict

import numpy as np

from .numerics import (
    Tensor, ShapeError, add, subtract, multiply, log, square, reduce_mean, reduce_sum,
    take, clip
)

PROB_EPS = 1e-7
LN2 = float(np.log(2.0))


def _tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_probs(probs: Tensor, caller: str) -> None:
    if probs.ndim != 3 or probs.shape[2] != 2:
        raise ShapeError(caller, [probs.shape], 'expected probabilities [B x T x 2]')


def _check_labels(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if not np.isin(x, (0, 1)).all():
        bad = np.unique(x[~np.isin(x, (0, 1))])
        raise ValueError(f'Labels must be 0 or 1. Found {bad[:5].tolist()}.')
    return x.astype(np.float64)


def utility_loss(y, y_hat) -> Tensor:
    """Mean squared reconstruction error over batch and time."""
    y, y_hat = _tensor(y), _tensor(y_hat)
    if y.shape != y_hat.shape:
        raise ShapeError('utility_loss', [y.shape, y_hat.shape], 'shapes must match')
    return reduce_mean(square(subtract(y, y_hat)))


def adversary_loss(probs, x) -> Tensor:
    """Cross-entropy ``-mean(log p(x_t | z^t))`` of the binary predictions.

    Args:
        probs: Per-step class probabilities [B x T x 2].
        x: Labels [B x T] in {0, 1}.
    """
    probs = _tensor(probs)
    _check_probs(probs, 'adversary_loss')
    x = _check_labels(x)
    if x.shape != probs.shape[:2]:
        raise ShapeError('adversary_loss', [probs.shape, x.shape], 'labels must be [B x T]')
    p_true = add(multiply(take(probs, 1, axis=2), x),
                 multiply(take(probs, 0, axis=2), 1.0 - x))
    return -reduce_mean(log(clip(p_true, PROB_EPS, 1.0 - PROB_EPS)))


def entropy_sum(probs) -> Tensor:
    """Binary entropy of the predictions averaged over the batch and summed over time."""
    probs = _tensor(probs)
    _check_probs(probs, 'entropy_sum')
    p = clip(take(probs, 1, axis=2), PROB_EPS, 1.0 - PROB_EPS)
    q = 1.0 - p
    h = -add(multiply(p, log(p)), multiply(q, log(q)))
    return reduce_sum(reduce_mean(h, axis=0))


def releaser_loss(y, y_hat, probs, lam: float) -> Tensor:
    """``utility_loss(y, y_hat) - lam / T * entropy_sum(probs)``."""
    if lam < 0:
        raise ValueError(f'lambda must be non-negative: {lam}')
    probs = _tensor(probs)
    _check_probs(probs, 'releaser_loss')
    steps = probs.shape[1]
    return subtract(utility_loss(y, y_hat), multiply(entropy_sum(probs), lam / steps))


def di_upper_bound(probs) -> Tensor:
    """Upper bound ``T * ln 2 - entropy_sum`` on the directed information, in nats."""
    probs = _tensor(probs)
    _check_probs(probs, 'di_upper_bound')
    return subtract(probs.shape[1] * LN2, entropy_sum(probs))


@dataclass
class LossBundle:
    utility: float
    adversary: float
    entropy_sum: float
    releaser: float
    lam: float
    di_upper_bound: float

    @classmethod
    def evaluate(cls, y, y_hat, probs, x, lam: float) -> 'LossBundle':
        """Compute every loss from untracked copies of the inputs."""
        y, y_hat, probs = (_tensor(v).detach() for v in (y, y_hat, probs))
        return cls(
            utility=utility_loss(y, y_hat).item(),
            adversary=adversary_loss(probs, x).item(),
            entropy_sum=entropy_sum(probs).item(),
            releaser=releaser_loss(y, y_hat, probs, lam).item(),
            lam=lam,
            di_upper_bound=di_upper_bound(probs).item()
        )

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)
