"""Adversarial training of the releaser and post-hoc attacker and utility fits."""
from .config import (  # expose for easy import
    TrainerConfig, TrainingMode, AttackerConfig, UtilityFitConfig, SupervisedFitConfig
)
from .sampler import SequenceBatch, EpochSampler, sample_minibatch
from .base import (
    TrainedSystem, TrainingDivergedError, HistoryRecord, HISTORY_HEADER, init_system,
    adversary_inner_steps, outer_step, train, select_tau, validation_loss,
    network_configs, releaser_forward, adversary_forward, utility_forward
)
from .supervised import train_attacker, fit_utility, predict_occupancy, reconstruct
