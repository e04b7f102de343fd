"""Stacked LSTM networks for the releaser, adversary, utility and attacker roles."""
from .config import LstmStackConfig, OutputHead  # expose for easy import
from .lstm import (
    ModelParams, LayerWeights, LstmState, init_params, lstm_cell_step, stack_forward,
    predict, expected_shapes
)
