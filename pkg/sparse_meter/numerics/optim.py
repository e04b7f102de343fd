"""RMSprop and ridge regularization."""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .tensor import Tensor, ShapeError, reduce_sum, square, add, multiply


class MissingGradientError(RuntimeError):
    """An optimizer step was requested for a parameter without a gradient."""


@dataclass
class RmspropState:
    """Running average of squared gradients for one parameter.

    Args:
        s: Squared-gradient running average. Same shape as the parameter.
        rho: Decay of the running average in (0, 1).
        lr: Learning rate.
        eps: Added to the root mean square before dividing.

    """
    s: np.ndarray
    rho: float = 0.9
    lr: float = 1e-3
    eps: float = 1e-8

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f'rho must be in (0, 1): {self.rho}')
        if self.lr <= 0:
            raise ValueError(f'lr must be positive: {self.lr}')
        if self.eps <= 0:
            raise ValueError(f'eps must be positive: {self.eps}')

    @classmethod
    def zeros_like(cls, param: Tensor, rho: float = 0.9, lr: float = 1e-3,
                   eps: float = 1e-8) -> 'RmspropState':
        return cls(np.zeros_like(param.values), rho=rho, lr=lr, eps=eps)


def rmsprop_step(param: Tensor, state: RmspropState) -> Tuple[Tensor, RmspropState]:
    """Apply one RMSprop update in place.

    ``s <- rho * s + (1 - rho) * g**2`` then
    ``param <- param - lr * g / (sqrt(s) + eps)``.
    """
    if param.grad is None:
        raise MissingGradientError(
            f'No gradient for parameter of shape {param.shape}. Run backward first.'
        )
    if state.s.shape != param.shape:
        raise ShapeError('rmsprop_step', [param.shape, state.s.shape])
    grad = param.grad
    state.s *= state.rho
    state.s += (1.0 - state.rho) * grad * grad
    param.values -= state.lr * grad / (np.sqrt(state.s) + state.eps)
    return param, state


def l2_penalty(params: Sequence[Tensor], beta: float) -> Tensor:
    """Ridge penalty ``beta * sum(||w||^2) / (2 * N)`` with N the parameter count.

    The gradient with respect to each weight is ``beta * w / N``.
    """
    if beta < 0:
        raise ValueError(f'beta must be non-negative: {beta}')
    params = list(params)
    count = sum(p.values.size for p in params)
    if beta == 0 or count == 0:
        return Tensor(0.0)
    total = reduce_sum(square(params[0]))
    for p in params[1:]:
        total = add(total, reduce_sum(square(p)))
    return multiply(total, beta / (2.0 * count))
