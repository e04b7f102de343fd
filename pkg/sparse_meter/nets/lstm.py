"""Stacked LSTM networks built on the tensor engine."""
import hashlib
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from ..numerics import (
    Tensor, ShapeError, RmspropState, rmsprop_step, matmul, add, multiply, sigmoid,
    tanh, concat, stack, take
)
from .config import LstmStackConfig, OutputHead

_GATES = ('i', 'f', 'o', 'g')


class LayerWeights(NamedTuple):
    W_i: Tensor
    W_f: Tensor
    W_o: Tensor
    W_g: Tensor
    b_i: Tensor
    b_f: Tensor
    b_o: Tensor
    b_g: Tensor


def expected_shapes(config: LstmStackConfig) -> Dict[str, Tuple[int, ...]]:
    """Map tensor names to the shapes a config implies."""
    shapes = OrderedDict()
    cells = config.cells
    for layer in range(config.num_layers):
        fan_in = (config.input_dim if layer == 0 else cells) + cells
        for g in _GATES:
            shapes[f'layer{layer}.W_{g}'] = (fan_in, cells)
        for g in _GATES:
            shapes[f'layer{layer}.b_{g}'] = (cells,)
    shapes['head.W'] = (cells, config.output_dim)
    shapes['head.b'] = (config.output_dim,)
    return shapes


class ModelParams:
    """Named parameter tensors of one network plus their optimizer state.

    Args:
        config: Shape of the network.
        tensors: Parameter tensors keyed by name in the order of
            ``expected_shapes(config)``.

    """

    def __init__(self, config: LstmStackConfig, tensors: Dict[str, Tensor]):
        shapes = expected_shapes(config)
        if list(tensors) != list(shapes):
            raise ValueError(
                f'Parameter names do not match the config. Expected {list(shapes)}, '
                f'got {list(tensors)}.'
            )
        mismatched = [
            f'{name}: expected {shape}, got {tensors[name].shape}'
            for name, shape in shapes.items() if tensors[name].shape != shape
        ]
        if mismatched:
            raise ShapeError('ModelParams', [], '; '.join(mismatched))
        self.config = config
        self.tensors = OrderedDict(tensors)
        self.states: Dict[str, RmspropState] = {}
        self._layers = [
            LayerWeights(*(self.tensors[f'layer{layer}.{kind}_{g}']
                           for kind in ('W', 'b') for g in _GATES))
            for layer in range(config.num_layers)
        ]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.tensors.values())

    def __len__(self) -> int:
        return len(self.tensors)

    def layer(self, index: int) -> LayerWeights:
        return self._layers[index]

    @property
    def head(self) -> Tuple[Tensor, Tensor]:
        return self.tensors['head.W'], self.tensors['head.b']

    @property
    def parameter_count(self) -> int:
        return sum(t.values.size for t in self)

    def frozen(self) -> 'ModelParams':
        """An untracked view. It shares values with this parameter set."""
        return ModelParams(
            self.config, OrderedDict((k, t.detach()) for k, t in self.tensors.items())
        )

    def copy(self) -> 'ModelParams':
        """A tracked deep copy without optimizer state."""
        return ModelParams(
            self.config,
            OrderedDict((k, Tensor(t.values, tracked=True)) for k, t in
                        self.tensors.items())
        )

    def assign(self, other: 'ModelParams') -> None:
        """Copy values of ``other`` into these tensors in place."""
        for name, tensor in self.tensors.items():
            np.copyto(tensor.values, other.tensors[name].values)

    def zero_grad(self) -> None:
        for tensor in self:
            tensor.zero_grad()

    def attach_optimizer(self, lr: float = 1e-3, rho: float = 0.9,
                         eps: float = 1e-8) -> None:
        self.states = OrderedDict(
            (name, RmspropState.zeros_like(t, rho=rho, lr=lr, eps=eps))
            for name, t in self.tensors.items()
        )

    def step(self) -> None:
        """Apply RMSprop to every tensor and zero the gradients."""
        if not self.states:
            raise RuntimeError('No optimizer attached. Call attach_optimizer first.')
        for name, tensor in self.tensors.items():
            rmsprop_step(tensor, self.states[name])
        self.zero_grad()

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name, tensor in self.tensors.items():
            digest.update(name.encode('utf-8'))
            digest.update(np.ascontiguousarray(tensor.values).tobytes())
        return digest.hexdigest()

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return OrderedDict((k, t.values.copy()) for k, t in self.tensors.items())

    @classmethod
    def from_arrays(cls, config: LstmStackConfig,
                    arrays: Dict[str, np.ndarray]) -> 'ModelParams':
        return cls(
            config,
            OrderedDict((k, Tensor(v, tracked=True)) for k, v in arrays.items())
        )


def init_params(config: LstmStackConfig, seed: int) -> ModelParams:
    """Glorot-uniform weights, forget-gate bias 1 and all other biases 0."""
    rng = np.random.default_rng(seed)
    tensors = OrderedDict()
    for name, shape in expected_shapes(config).items():
        if name.endswith('.b_f'):
            values = np.ones(shape)
        elif '.b' in name:
            values = np.zeros(shape)
        else:
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            values = rng.uniform(-limit, limit, size=shape)
        tensors[name] = Tensor(values, tracked=True)
    params = ModelParams(config, tensors)
    return params


@dataclass
class LstmState:
    """Hidden and cell vectors of every layer."""
    h: List[Tensor]
    c: List[Tensor]

    @classmethod
    def zeros(cls, config: LstmStackConfig, batch: int) -> 'LstmState':
        shape = (batch, config.cells)
        return cls(
            h=[Tensor(np.zeros(shape)) for _ in range(config.num_layers)],
            c=[Tensor(np.zeros(shape)) for _ in range(config.num_layers)]
        )


def lstm_cell_step(x: Tensor, state: Tuple[Tensor, Tensor],
                   weights: LayerWeights) -> Tuple[Tensor, Tuple[Tensor, Tensor]]:
    """Advance one LSTM layer by one step.

    Args:
        x: Layer input of shape [B x D].
        state: (h, c) of the layer, each [B x cells].
        weights: Gate weights of the layer.

    Returns:
        Tuple -- (h, (h, c)) after the step.
    """
    h, c = state
    if x.ndim != 2 or x.shape[1] + h.shape[1] != weights.W_i.shape[0]:
        raise ShapeError(
            'lstm_cell_step', [x.shape, h.shape, weights.W_i.shape],
            'input and hidden widths must add up to the gate fan-in'
        )
    xh = concat([x, h], axis=1)
    i = sigmoid(add(matmul(xh, weights.W_i), weights.b_i))
    f = sigmoid(add(matmul(xh, weights.W_f), weights.b_f))
    o = sigmoid(add(matmul(xh, weights.W_o), weights.b_o))
    g = tanh(add(matmul(xh, weights.W_g), weights.b_g))
    c = add(multiply(f, c), multiply(i, g))
    h = multiply(o, tanh(c))
    return h, (h, c)


def _apply_head(h: Tensor, params: ModelParams) -> Tensor:
    weight, bias = params.head
    logits = add(matmul(h, weight), bias)
    head = params.config.head
    if head == OutputHead.sigmoid_scalar:
        return sigmoid(logits)
    if head == OutputHead.linear_scalar:
        return logits
    # two-way softmax written as complementary sigmoids of the logit difference
    diff = take(logits, 1, axis=1) - take(logits, 0, axis=1)
    return stack([sigmoid(-diff), sigmoid(diff)], axis=1)


def stack_forward(seq, params: ModelParams, state: Optional[LstmState] = None) -> Tensor:
    """Run a stacked LSTM over a batch of sequences.

    The output at step t only depends on inputs up to step t.

    Args:
        seq: Tensor or array of shape [B x T x input_dim].
        params: Network parameters. Pass ``params.frozen()`` to evaluate without
            building a differentiation graph.
        state: Optional initial state. Zero state by default.

    Returns:
        Tensor -- per-step outputs of shape [B x T x output_dim].
    """
    seq = seq if isinstance(seq, Tensor) else Tensor(seq)
    config = params.config
    if seq.ndim != 3 or seq.shape[2] != config.input_dim:
        raise ShapeError(
            'stack_forward', [seq.shape], f'expected [B x T x {config.input_dim}]'
        )
    if not np.all(np.isfinite(seq.values)):
        raise ValueError('stack_forward: input sequence has non-finite values.')

    batch, steps, _ = seq.shape
    state = state or LstmState.zeros(config, batch)
    outputs = []
    for t in range(steps):
        if seq.tracked:
            x = take(seq, t, axis=1)
        else:
            x = Tensor(seq.values[:, t, :])
        for layer in range(config.num_layers):
            x, (state.h[layer], state.c[layer]) = lstm_cell_step(
                x, (state.h[layer], state.c[layer]), params.layer(layer)
            )
        outputs.append(_apply_head(x, params))
    return stack(outputs, axis=1)


def predict(seq: np.ndarray, params: ModelParams, chunk_size: int = 2048) -> np.ndarray:
    """Evaluate a network without a differentiation graph, in chunks of sequences."""
    seq = np.asarray(seq, dtype=np.float64)
    frozen = params.frozen()
    outputs = [
        stack_forward(seq[start:start + chunk_size], frozen).values
        for start in range(0, len(seq), chunk_size)
    ]
    if not outputs:
        raise ValueError('predict needs at least one sequence.')
    return np.concatenate(outputs, axis=0)
