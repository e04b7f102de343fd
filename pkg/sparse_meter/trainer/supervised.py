"""Post-hoc supervised fits on released data: the attacker and the utility network.

Both are trained after the releaser is frozen and never touch its parameters.
"""
import logging
import math
from typing import Callable, Iterator, Optional

import numpy as np

from ..evaluation.metrics import balanced_accuracy, mse
from ..losses import adversary_loss, utility_loss
from ..nets import LstmStackConfig, ModelParams, init_params, stack_forward, predict
from ..numerics import Tensor, backward, reshape
from .base import TrainingDivergedError
from .config import AttackerConfig, UtilityFitConfig, SupervisedFitConfig

logger = logging.getLogger(__name__)


def _epoch_batches(n: int, batch_size: int,
                   rng: np.random.Generator) -> Iterator[np.ndarray]:
    batch_size = min(batch_size, n)
    while True:
        order = rng.permutation(n)
        for start in range(0, n - batch_size + 1, batch_size):
            yield order[start:start + batch_size]


def predict_occupancy(params: ModelParams, z: np.ndarray) -> np.ndarray:
    """Most likely occupancy label per step. A tie predicts vacant."""
    probs = predict(np.asarray(z)[..., np.newaxis], params)
    return (probs[..., 1] > probs[..., 0]).astype(np.int8)


def reconstruct(params: ModelParams, z: np.ndarray) -> np.ndarray:
    return predict(np.asarray(z)[..., np.newaxis], params)[..., 0]


def _fit_supervised(params: ModelParams, inputs: np.ndarray, targets: np.ndarray,
                    loss_fn: Callable[[Tensor, np.ndarray], Tensor],
                    score_fn: Callable[[ModelParams], float],
                    config: SupervisedFitConfig, validate: bool) -> ModelParams:
    """Minimize ``loss_fn`` with RMSprop and keep the parameters with the best score.

    ``score_fn`` is maximized. Without validation every iteration runs and the
    final parameters are returned.
    """
    params.attach_optimizer(config.lr, config.rho, config.eps)
    batches = _epoch_batches(len(inputs), config.batch_size,
                             np.random.default_rng(config.seed))
    best = params.copy() if validate else None
    best_score, best_iteration = -math.inf, 0
    for iteration in range(1, config.iterations + 1):
        index = next(batches)
        loss = loss_fn(stack_forward(inputs[index], params), targets[index])
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingDivergedError(iteration, 'supervised loss', value)
        backward(loss)
        params.step()
        if validate and iteration % config.validation_every == 0:
            score = score_fn(params)
            if score > best_score:
                best.assign(params)
                best_score, best_iteration = score, iteration
            elif iteration - best_iteration >= config.patience:
                logger.debug('supervised fit stopped at %d, best score %.5f at %d',
                             iteration, best_score, best_iteration)
                break
    if validate and best_iteration > 0:
        params.assign(best)
    return params


def _has_both_classes(x: Optional[np.ndarray]) -> bool:
    return x is not None and len(np.unique(x)) == 2


def train_attacker(z: np.ndarray, x: np.ndarray, config: AttackerConfig = None,
                   z_val: np.ndarray = None, x_val: np.ndarray = None) -> ModelParams:
    """Train an attacker to infer occupancy from released sequences.

    Args:
        z: Released training sequences [N x T].
        x: Occupancy labels [N x T].
        config: Attacker configuration.
        z_val: Released validation sequences for early stopping.
        x_val: Validation labels. Early stopping is skipped when a class is absent.

    Returns:
        ModelParams -- attacker parameters with the best validation balanced
        accuracy.
    """
    config = config or AttackerConfig()
    z = np.asarray(z, dtype=np.float64)
    params = init_params(LstmStackConfig.attacker().scaled(config.width_scale),
                         config.seed)
    validate = z_val is not None and len(z_val) > 0 and _has_both_classes(x_val)

    def score(current: ModelParams) -> float:
        return balanced_accuracy(predict_occupancy(current, z_val), x_val)

    return _fit_supervised(
        params, z[..., np.newaxis], np.asarray(x),
        adversary_loss, score, config, validate
    )


def fit_utility(z: np.ndarray, y: np.ndarray, config: UtilityFitConfig = None,
                z_val: np.ndarray = None, y_val: np.ndarray = None,
                init: Optional[ModelParams] = None) -> ModelParams:
    """Train a utility network to reconstruct y from released sequences.

    Args:
        z: Released training sequences [N x T], standardized.
        y: Standardized consumption [N x T].
        config: Fit configuration.
        z_val: Released validation sequences for early stopping.
        y_val: Validation consumption.
        init: Parameters to fine-tune. A fresh network is trained when omitted.
            ``init`` itself is left unchanged.

    """
    config = config or UtilityFitConfig()
    z = np.asarray(z, dtype=np.float64)
    if init is not None:
        params = init.copy()
    else:
        params = init_params(LstmStackConfig.utility().scaled(config.width_scale),
                             config.seed)
    validate = z_val is not None and len(z_val) > 0

    def score(current: ModelParams) -> float:
        return -mse(y_val, reconstruct(current, z_val))

    def loss(out: Tensor, targets: np.ndarray) -> Tensor:
        return utility_loss(targets, reshape(out, out.shape[:2]))

    return _fit_supervised(params, z[..., np.newaxis], np.asarray(y, dtype=np.float64),
                           loss, score, config, validate)
