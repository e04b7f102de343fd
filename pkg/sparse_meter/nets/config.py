"""Network shapes and the presets used for each role."""
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class OutputHead(str, Enum):
    sigmoid_scalar = 'sigmoid-scalar'
    linear_scalar = 'linear-scalar'
    binary_softmax = 'binary-softmax'


_HEAD_WIDTH = {
    OutputHead.sigmoid_scalar: 1,
    OutputHead.linear_scalar: 1,
    OutputHead.binary_softmax: 2
}


class LstmStackConfig(BaseModel):
    """Shape of a stacked LSTM with a per-step output head."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    num_layers: int = Field(..., ge=1, description='Number of stacked LSTM layers.')

    cells: int = Field(..., ge=1, description='Number of cells in each layer.')

    input_dim: int = Field(..., ge=1, description='Size of the input at each step.')

    head: OutputHead = Field(
        ..., description='Output head applied at every step: sigmoid-scalar, '
        'linear-scalar or binary-softmax.'
    )

    @property
    def output_dim(self) -> int:
        """Width of the per-step output (2 for binary-softmax, 1 otherwise)."""
        return _HEAD_WIDTH[self.head]

    def scaled(self, width_scale: float) -> 'LstmStackConfig':
        """Return a copy with ``cells`` multiplied by width_scale (at least 1)."""
        cells = max(1, int(round(self.cells * width_scale)))
        return self.model_copy(update={'cells': cells})

    # presets - layer and cell counts of each role

    @classmethod
    def releaser(cls, noise_dim: int = 8, additive: bool = False) -> 'LstmStackConfig':
        """4 x 64 releaser. Input at each step is (x, y, u) with u of size noise_dim."""
        head = OutputHead.linear_scalar if additive else OutputHead.sigmoid_scalar
        return cls(num_layers=4, cells=64, input_dim=2 + noise_dim, head=head)

    @classmethod
    def adversary(cls) -> 'LstmStackConfig':
        return cls(num_layers=2, cells=32, input_dim=1, head=OutputHead.binary_softmax)

    @classmethod
    def utility(cls) -> 'LstmStackConfig':
        return cls(num_layers=3, cells=48, input_dim=1, head=OutputHead.linear_scalar)

    @classmethod
    def attacker(cls) -> 'LstmStackConfig':
        return cls(num_layers=3, cells=32, input_dim=1, head=OutputHead.binary_softmax)
