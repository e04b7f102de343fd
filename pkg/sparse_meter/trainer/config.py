"""Configuration of the adversarial trainer and the supervised post-hoc fits."""
from enum import Enum
from types import DynamicClassAttribute
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..mechanism import ReleaseMode


class _TrainingModeFlags:
    # Defined on a base as a DynamicClassAttribute so that the member
    # ``TrainingMode.additive`` and the instance flag ``mode.additive`` can share a name.
    @DynamicClassAttribute
    def additive(self) -> bool:
        return self == TrainingMode.additive


class TrainingMode(_TrainingModeFlags, str, Enum):
    smart = 'smart'
    smart_multiplicative = 'smart-multiplicative'
    additive = 'additive'

    @property
    def release_mode(self) -> ReleaseMode:
        """Test-time release used by the mode."""
        return {
            TrainingMode.smart: ReleaseMode.hard,
            TrainingMode.smart_multiplicative: ReleaseMode.multiplicative,
            TrainingMode.additive: ReleaseMode.additive
        }[self]


class _OptimizerFields(BaseModel):
    model_config = ConfigDict(extra='forbid')

    lr: float = Field(1e-3, gt=0, description='RMSprop learning rate.')

    rho: float = Field(0.9, gt=0, lt=1, description='RMSprop decay of the squared '
                       'gradient average.')

    eps: float = Field(1e-8, gt=0, description='RMSprop epsilon.')

    width_scale: float = Field(
        1.0, gt=0, description='Multiplier applied to the cells per layer of every '
        'network. Use 0.5 for half-width desk experiments.'
    )


class TrainerConfig(_OptimizerFields):
    """Hyperparameters of the alternating releaser / adversary training."""

    batch_size: int = Field(128, ge=1, description='Minibatch size B.')

    adversary_steps: int = Field(4, ge=1, description='Adversary updates k per '
                                 'iteration.')

    noise_dim: int = Field(8, ge=1, description='Seed noise dimension m.')

    beta: float = Field(1.5, ge=0, description='Ridge weight on releaser parameters.')

    lam: float = Field(1.0, ge=0, description='Privacy-utility trade-off weight lambda.')

    iterations: int = Field(3000, ge=1, description='Maximum number of outer '
                            'iterations.')

    seed: int = Field(0, ge=0, description='Seed for initialization, minibatches and '
                      'noise.')

    tau: float = Field(0.5, ge=0, le=1, description='Test-time soft mask threshold.')

    mode: TrainingMode = Field(TrainingMode.smart, description='smart, '
                               'smart-multiplicative or additive.')

    early_stopping: bool = Field(
        True, description='Stop when validation releaser loss has not improved by '
        'min_delta for patience iterations.'
    )

    patience: int = Field(200, ge=1, description='Early stopping window in iterations.')

    min_delta: float = Field(1e-4, ge=0, description='Minimum improvement that resets '
                             'the early stopping window.')

    validation_every: int = Field(10, ge=1, description='Iterations between validation '
                                  'checks.')

    divergence_threshold: float = Field(
        1e6, gt=0, description='Training aborts when a loss exceeds this magnitude.'
    )

    select_tau: bool = Field(False, description='Pick tau from tau_grid on the '
                             'validation split after training.')

    tau_grid: List[float] = Field(
        [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        description='Candidate thresholds for select_tau.'
    )

    log_every: int = Field(100, ge=1, description='Iterations between progress log '
                           'lines.')

    @field_validator('tau_grid')
    @classmethod
    def check_tau_grid(cls, v):
        if not v:
            raise ValueError('tau_grid cannot be empty.')
        bad = [t for t in v if not 0 <= t <= 1]
        if bad:
            raise ValueError(f'tau_grid values must be in [0, 1]: {bad}')
        return v


class SupervisedFitConfig(_OptimizerFields):
    """Post-hoc supervised training on released data."""

    batch_size: int = Field(128, ge=1, description='Minibatch size.')

    iterations: int = Field(1500, ge=1, description='Maximum number of updates.')

    patience: int = Field(300, ge=1, description='Stop when the validation score has '
                          'not improved for this many updates.')

    validation_every: int = Field(25, ge=1, description='Updates between validation '
                                  'checks.')

    seed: int = Field(0, ge=0, description='Seed for initialization and minibatches.')


class AttackerConfig(SupervisedFitConfig):
    """Attacker fit. Early stopping keeps the best validation balanced accuracy."""


class UtilityFitConfig(SupervisedFitConfig):
    """Utility fit. Early stopping keeps the lowest validation reconstruction error."""
