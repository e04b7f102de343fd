"""Alternating training of the releaser, utility and adversary networks.

Each outer iteration first runs ``adversary_steps`` updates of the adversary on
releases of the current (frozen) releaser, then one update of the utility network
and one update of the releaser. The releaser minimizes the reconstruction error of
the utility network minus ``lam / T`` times the entropy of the adversary's
predictions, plus a ridge penalty on its own weights.

All networks work on standardized consumption.
"""
import logging
import math
import pathlib
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..common import spawn_seeds, atomic_write
from ..data import WindowedDataset
from ..losses import (
    utility_loss, adversary_loss, entropy_sum, releaser_loss
)
from ..mechanism import (
    ReleaseMode, ReleaseOutput, soft_mask_apply, additive_release, release
)
from ..nets import LstmStackConfig, ModelParams, init_params, stack_forward, predict
from ..numerics import Tensor, backward, reshape, add, l2_penalty
from .config import TrainerConfig
from .sampler import EpochSampler, SequenceBatch

logger = logging.getLogger(__name__)

HISTORY_HEADER = ('iteration', 'L_U', 'L_A', 'L_R', 'entropy_sum')


class TrainingDivergedError(RuntimeError):
    """A loss became non-finite or exceeded the divergence threshold."""

    def __init__(self, iteration: int, name: str, value: float):
        self.iteration = iteration
        self.name = name
        self.value = value
        super().__init__(
            f'Training diverged at iteration {iteration}: {name} = {value!r}. Try a '
            'smaller learning rate or lambda.'
        )


@dataclass
class HistoryRecord:
    iteration: int
    utility: float
    adversary: float
    releaser: float
    entropy_sum: float

    def row(self) -> Tuple:
        return (self.iteration, self.utility, self.adversary, self.releaser,
                self.entropy_sum)


@dataclass
class TrainedSystem:
    """Networks of one training run and their history.

    ``utility`` is None in additive mode, where the release itself is the
    reconstruction. ``attacker`` is filled in by ``evaluate_system``.
    """
    releaser: ModelParams
    adversary: ModelParams
    utility: Optional[ModelParams]
    config: TrainerConfig
    tau: float
    attacker: Optional[ModelParams] = None
    history: List[HistoryRecord] = field(default_factory=list)
    stopped_early: bool = False
    sampler: Optional[EpochSampler] = field(default=None, repr=False)
    validation_seed: int = 0

    @property
    def iteration(self) -> int:
        return len(self.history)

    def soft_output(self, y: np.ndarray, x: np.ndarray, seed: int) -> np.ndarray:
        """Soft mask (or additive perturbation) for standardized sequences [N x T]."""
        rng = np.random.default_rng(seed)
        u = rng.random((*np.shape(y), self.config.noise_dim))
        batch = SequenceBatch(y=np.asarray(y), x=np.asarray(x), u=u,
                              indices=np.arange(len(y)))
        return predict(batch.releaser_inputs(), self.releaser)[..., 0]

    def release(self, y: np.ndarray, x: np.ndarray, seed: int,
                mode: Union[ReleaseMode, str, None] = None,
                tau: Optional[float] = None) -> ReleaseOutput:
        """Test-time release of standardized sequences.

        Args:
            y: Standardized consumption [N x T].
            x: Occupancy labels [N x T].
            seed: Seed of the releaser noise and of stochastic releases.
            mode: Release mode. Defaults to the training mode's release.
            tau: Threshold. Defaults to the trained system's tau.
        """
        out = self.soft_output(y, x, seed)
        if self.config.mode.additive:
            return additive_release(y, out)
        mode = ReleaseMode(mode) if mode is not None else self.config.mode.release_mode
        if mode == ReleaseMode.additive:
            raise ValueError('Additive release needs a system trained in additive mode.')
        return release(
            y, out, mode, tau=self.tau if tau is None else tau,
            rng=np.random.default_rng(spawn_seeds(seed, 1)[0])
        )

    def write_history(self, path: Union[str, pathlib.Path]) -> pathlib.Path:
        df = pd.DataFrame([r.row() for r in self.history], columns=list(HISTORY_HEADER))
        return atomic_write(path, df.to_csv(index=False, lineterminator='\n'))


# network plumbing -------------------------------------------------------------

def _as_sequence(z) -> Tensor:
    z = z if isinstance(z, Tensor) else Tensor(z)
    return reshape(z, (*z.shape, 1))


def releaser_forward(params: ModelParams, batch: SequenceBatch) -> Tensor:
    """Soft mask q (or perturbation n in additive mode) of shape [B x T]."""
    out = stack_forward(batch.releaser_inputs(), params)
    return reshape(out, out.shape[:2])


def adversary_forward(params: ModelParams, z) -> Tensor:
    """Per-step occupancy probabilities [B x T x 2] from released data."""
    return stack_forward(_as_sequence(z), params)


def utility_forward(params: ModelParams, z) -> Tensor:
    """Reconstructed consumption [B x T] from released data."""
    out = stack_forward(_as_sequence(z), params)
    return reshape(out, out.shape[:2])


def network_configs(config: TrainerConfig) -> Tuple[LstmStackConfig, LstmStackConfig,
                                                    LstmStackConfig]:
    """Releaser, adversary and utility shapes for a trainer config."""
    scale = config.width_scale
    return (
        LstmStackConfig.releaser(config.noise_dim, config.mode.additive).scaled(scale),
        LstmStackConfig.adversary().scaled(scale),
        LstmStackConfig.utility().scaled(scale)
    )


def init_system(config: TrainerConfig) -> TrainedSystem:
    """Fresh networks with their optimizers and a seeded minibatch sampler."""
    releaser_seed, adversary_seed, utility_seed, sampler_seed, validation_seed = \
        spawn_seeds(config.seed, 5)
    releaser_config, adversary_config, utility_config = network_configs(config)
    releaser = init_params(releaser_config, releaser_seed)
    adversary = init_params(adversary_config, adversary_seed)
    utility = None if config.mode.additive else init_params(utility_config, utility_seed)
    for params in (releaser, adversary, utility):
        if params is not None:
            params.attach_optimizer(config.lr, config.rho, config.eps)
    return TrainedSystem(
        releaser=releaser, adversary=adversary, utility=utility, config=config,
        tau=config.tau, sampler=EpochSampler(sampler_seed),
        validation_seed=validation_seed
    )


def _check(value: float, name: str, iteration: int, config: TrainerConfig) -> float:
    if not math.isfinite(value) or abs(value) > config.divergence_threshold:
        raise TrainingDivergedError(iteration, name, value)
    return value


def _training_release(releaser: ModelParams, batch: SequenceBatch,
                      config: TrainerConfig, iteration: int) -> Tensor:
    out = releaser_forward(releaser, batch)
    if not np.all(np.isfinite(out.values)):
        raise TrainingDivergedError(iteration, 'releaser output', float('nan'))
    if config.mode.additive:
        return additive_release(Tensor(batch.y), out).z
    return soft_mask_apply(batch.y, out).z


def adversary_inner_steps(system: TrainedSystem, dataset: WindowedDataset,
                          config: TrainerConfig) -> float:
    """Run ``adversary_steps`` updates of the adversary with the releaser frozen.

    Returns:
        float -- mean adversary loss over the updates.
    """
    iteration = system.iteration + 1
    releaser = system.releaser.frozen()
    losses = []
    for _ in range(config.adversary_steps):
        batch = system.sampler.draw(dataset, config.batch_size, config.noise_dim)
        z = _training_release(releaser, batch, config, iteration)
        loss = adversary_loss(adversary_forward(system.adversary, z), batch.x)
        losses.append(_check(loss.item(), 'L_A', iteration, config))
        backward(loss)
        system.adversary.step()
    return float(np.mean(losses))


@dataclass
class OuterStepResult:
    utility: float
    releaser: float
    entropy_sum: float


def outer_step(system: TrainedSystem, dataset: WindowedDataset,
               config: TrainerConfig) -> OuterStepResult:
    """Update the utility network on L_U, then the releaser on L_R plus ridge.

    Both updates use the same minibatch and release. The releaser gradient sees the
    updated utility network and the adversary frozen.
    """
    iteration = system.iteration + 1
    batch = system.sampler.draw(dataset, config.batch_size, config.noise_dim)
    z = _training_release(system.releaser, batch, config, iteration)

    if system.utility is not None:
        loss_u = utility_loss(batch.y, utility_forward(system.utility, z.detach()))
        _check(loss_u.item(), 'L_U', iteration, config)
        backward(loss_u)
        system.utility.step()
        y_hat = utility_forward(system.utility.frozen(), z)
    else:
        y_hat = z

    probs = adversary_forward(system.adversary.frozen(), z)
    loss_r = releaser_loss(batch.y, y_hat, probs, config.lam)
    total = add(loss_r, l2_penalty(list(system.releaser), config.beta))
    _check(total.item(), 'L_R', iteration, config)
    backward(total)
    system.releaser.step()

    return OuterStepResult(
        utility=utility_loss(batch.y, y_hat.detach()).item(),
        releaser=loss_r.item(),
        entropy_sum=entropy_sum(probs.detach()).item()
    )


def _objective(system: TrainedSystem, y: np.ndarray, z: np.ndarray) -> float:
    """Utility error minus ``lam / T`` times adversary entropy on released data."""
    y_hat = z if system.utility is None else predict(z[..., None], system.utility)[..., 0]
    probs = predict(z[..., None], system.adversary)
    return releaser_loss(y, y_hat, probs, system.config.lam).item()


def validation_loss(system: TrainedSystem, validation: WindowedDataset) -> float:
    """Releaser loss on the validation split with the soft release and fixed noise."""
    out = system.soft_output(validation.y, validation.x, system.validation_seed)
    if system.utility is None:
        z = validation.y + out
    else:
        z = validation.y * out
    return _objective(system, validation.y, z)


def select_tau(system: TrainedSystem, validation: WindowedDataset,
               grid: Optional[List[float]] = None) -> float:
    """Threshold from ``grid`` with the lowest validation objective.

    The objective is the thresholded-release reconstruction error minus
    ``lam / T`` times the adversary entropy. Ties keep the smaller threshold.
    """
    config = system.config
    if config.mode.additive:
        return system.tau
    grid = sorted(grid or config.tau_grid)
    q = system.soft_output(validation.y, validation.x, system.validation_seed)
    best_tau, best = system.tau, math.inf
    for tau in grid:
        z = release(validation.y, q, config.mode.release_mode, tau=tau).z
        value = _objective(system, validation.y, z)
        logger.debug('tau %.3f: validation objective %.6f', tau, value)
        if value < best:
            best_tau, best = tau, value
    return best_tau


def train(dataset: WindowedDataset, config: TrainerConfig,
          validation: Optional[WindowedDataset] = None) -> TrainedSystem:
    """Train a releaser against an adversary.

    Args:
        dataset: Standardized training sequences.
        config: Trainer configuration.
        validation: Standardized validation sequences for early stopping and tau
            selection.

    Returns:
        TrainedSystem -- the trained networks and one history record per iteration.
    """
    if not dataset.normalized:
        raise ValueError('Training data must be normalized first.')
    system = init_system(config)
    use_validation = validation is not None and len(validation) > 0
    best, best_iteration = math.inf, 0

    for iteration in range(1, config.iterations + 1):
        loss_a = adversary_inner_steps(system, dataset, config)
        result = outer_step(system, dataset, config)
        system.history.append(HistoryRecord(
            iteration=iteration, utility=result.utility, adversary=loss_a,
            releaser=result.releaser, entropy_sum=result.entropy_sum
        ))
        if iteration % config.log_every == 0:
            logger.info(
                'iteration %d: L_U %.5f, L_A %.5f, L_R %.5f, entropy_sum %.4f',
                iteration, result.utility, loss_a, result.releaser, result.entropy_sum
            )
        if config.early_stopping and use_validation and \
                iteration % config.validation_every == 0:
            value = validation_loss(system, validation)
            if value < best - config.min_delta:
                best, best_iteration = value, iteration
            elif iteration - best_iteration >= config.patience:
                logger.info('early stop at iteration %d (best validation L_R %.5f at '
                            '%d)', iteration, best, best_iteration)
                system.stopped_early = True
                break

    if config.select_tau and use_validation:
        system.tau = select_tau(system, validation)
        logger.info('selected tau %.3f', system.tau)
    return system
