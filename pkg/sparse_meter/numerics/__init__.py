"""Tensor arithmetic, reverse-mode differentiation and the RMSprop optimizer."""
from .tensor import (  # expose for easy import
    Tensor, ShapeError, DomainError, GraphError, forward_op, backward, matmul, add,
    subtract, multiply, sigmoid, tanh, log, square, reduce_sum, reduce_mean, concat,
    stack, take, reshape, clip
)
from .optim import RmspropState, MissingGradientError, rmsprop_step, l2_penalty
