"""SPPR binary checkpoints.

Layout, all integers little-endian::

    b'SPPR' | version u32 | network count u8
    per network: name (u16 length + UTF-8) | tensor count u32
        per tensor: name (u16 length + UTF-8) | rank u8 | dims u32 * rank |
                    values float64 row-major
    CRC32 u32 of all preceding bytes

A YAML sidecar with the trainer configuration and threshold sits next to every
saved system so the network shapes can be rebuilt on load.
"""
import logging
import pathlib
import struct
import zlib
from collections import OrderedDict
from typing import Dict, Optional, Tuple, Union

import numpy as np
import yaml

from .common import atomic_write
from .nets import LstmStackConfig, ModelParams, expected_shapes
from .trainer import TrainedSystem, TrainerConfig, network_configs

logger = logging.getLogger(__name__)

MAGIC = b'SPPR'
FORMAT_VERSION = 1
NETWORK_ORDER = ('releaser', 'adversary', 'utility', 'attacker')

Networks = Dict[str, Dict[str, np.ndarray]]
PathLike = Union[str, pathlib.Path]


class CheckpointError(ValueError):
    """A checkpoint cannot be read or does not match the expected networks."""


def _name(text: str) -> bytes:
    data = text.encode('utf-8')
    if len(data) > 0xFFFF:
        raise CheckpointError(f'Name is too long for a checkpoint: {text[:40]}...')
    return struct.pack('<H', len(data)) + data


def encode(networks: Networks) -> bytes:
    """Serialize named networks of named float64 arrays."""
    if len(networks) > 0xFF:
        raise CheckpointError(f'Too many networks for one checkpoint: {len(networks)}')
    parts = [MAGIC, struct.pack('<IB', FORMAT_VERSION, len(networks))]
    for net_name, tensors in networks.items():
        parts.append(_name(net_name))
        parts.append(struct.pack('<I', len(tensors)))
        for tensor_name, values in tensors.items():
            values = np.asarray(values, dtype='<f8')
            if values.ndim > 0xFF:
                raise CheckpointError(f'{net_name}/{tensor_name} has too many axes.')
            parts.append(_name(tensor_name))
            parts.append(struct.pack(f'<B{values.ndim}I', values.ndim, *values.shape))
            parts.append(np.ascontiguousarray(values).tobytes(order='C'))
    body = b''.join(parts)
    return body + struct.pack('<I', zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def unpack(self, fmt: str) -> Tuple:
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise CheckpointError(f'Checkpoint is truncated at byte {self.offset}.')
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def name(self) -> str:
        length, = self.unpack('<H')
        raw, = self.unpack(f'<{length}s')
        try:
            return raw.decode('utf-8')
        except UnicodeDecodeError:
            raise CheckpointError(f'Invalid UTF-8 name at byte {self.offset - length}.')

    def values(self, dims: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(dims, dtype=np.int64))
        size = 8 * count
        if self.offset + size > len(self.data):
            raise CheckpointError(f'Checkpoint is truncated at byte {self.offset}.')
        values = np.frombuffer(self.data, dtype='<f8', count=count, offset=self.offset)
        self.offset += size
        return values.reshape(dims).astype(np.float64)


def decode(data: bytes) -> Networks:
    """Parse checkpoint bytes. Raises CheckpointError naming the failure."""
    if len(data) < len(MAGIC) + 9:
        raise CheckpointError(f'File is too short to be a checkpoint: {len(data)} bytes.')
    if data[:4] != MAGIC:
        raise CheckpointError(f'Bad magic bytes {data[:4]!r}. Expected {MAGIC!r}.')
    body, (crc,) = data[:-4], struct.unpack('<I', data[-4:])
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if crc != actual:
        raise CheckpointError(f'CRC mismatch: stored {crc:08x}, computed {actual:08x}.')
    reader = _Reader(body)
    reader.offset = len(MAGIC)
    version, count = reader.unpack('<IB')
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f'Unsupported checkpoint version {version}. Expected {FORMAT_VERSION}.'
        )
    networks: Networks = OrderedDict()
    for _ in range(count):
        net_name = reader.name()
        tensors = OrderedDict()
        n_tensors, = reader.unpack('<I')
        for _ in range(n_tensors):
            tensor_name = reader.name()
            rank, = reader.unpack('<B')
            dims = reader.unpack(f'<{rank}I')
            tensors[tensor_name] = reader.values(dims)
        networks[net_name] = tensors
    if reader.offset != len(body):
        raise CheckpointError(f'{len(body) - reader.offset} trailing bytes before CRC.')
    return networks


def save(path: PathLike, networks: Networks) -> pathlib.Path:
    return atomic_write(path, encode(networks))


def load(path: PathLike) -> Networks:
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'Checkpoint not found: {path}')
    return decode(path.read_bytes())


def sidecar_path(path: PathLike) -> pathlib.Path:
    path = pathlib.Path(path)
    return path.with_name(path.stem + '.yaml')


def system_networks(system: TrainedSystem) -> Networks:
    networks = OrderedDict()
    for name in NETWORK_ORDER:
        params = getattr(system, name)
        if params is not None:
            networks[name] = params.to_arrays()
    return networks


def save_system(path: PathLike, system: TrainedSystem) -> pathlib.Path:
    """Save the networks of a trained system and its configuration sidecar."""
    path = save(path, system_networks(system))
    snapshot = {'trainer': system.config.model_dump(mode='json'), 'tau': system.tau}
    atomic_write(sidecar_path(path), yaml.safe_dump(snapshot, sort_keys=False))
    logger.info('saved checkpoint %s', path)
    return path


def read_sidecar(path: PathLike) -> Tuple[TrainerConfig, float]:
    sidecar = sidecar_path(path)
    if not sidecar.is_file():
        raise CheckpointError(
            f'Missing configuration sidecar {sidecar}. Pass the training configuration '
            'explicitly.'
        )
    snapshot = yaml.safe_load(sidecar.read_text(encoding='utf-8')) or {}
    config = TrainerConfig(**snapshot.get('trainer', {}))
    return config, float(snapshot.get('tau', config.tau))


def _params(name: str, config: LstmStackConfig,
            arrays: Dict[str, np.ndarray]) -> ModelParams:
    shapes = expected_shapes(config)
    problems = [f'missing {k} {v}' for k, v in shapes.items() if k not in arrays]
    problems += [f'unexpected {k}' for k in arrays if k not in shapes]
    problems += [
        f'{k}: checkpoint {arrays[k].shape} vs config {v}'
        for k, v in shapes.items() if k in arrays and arrays[k].shape != v
    ]
    if problems:
        raise CheckpointError(f'{name} does not match the configuration: '
                              + '; '.join(problems))
    return ModelParams.from_arrays(config, OrderedDict((k, arrays[k]) for k in shapes))


def _attacker_config(arrays: Dict[str, np.ndarray]) -> LstmStackConfig:
    """Attacker shape with the width read from the saved head.

    The attacker is fitted with the evaluation width, which can differ from the
    trainer width.
    """
    if 'head.W' not in arrays:
        raise CheckpointError('attacker does not match the configuration: missing '
                              'head.W')
    cells = int(arrays['head.W'].shape[0])
    return LstmStackConfig.attacker().model_copy(update={'cells': cells})


def load_system(path: PathLike, config: Optional[TrainerConfig] = None,
                tau: Optional[float] = None) -> TrainedSystem:
    """Rebuild a trained system from a checkpoint.

    Args:
        path: Checkpoint file.
        config: Trainer configuration that defines the network shapes. Read from the
            sidecar when omitted.
        tau: Release threshold. Defaults to the sidecar value or ``config.tau``.

    """
    networks = load(path)
    if config is None:
        config, saved_tau = read_sidecar(path)
        tau = saved_tau if tau is None else tau
    tau = config.tau if tau is None else tau
    releaser_cfg, adversary_cfg, utility_cfg = network_configs(config)
    required = ['releaser', 'adversary'] + ([] if config.mode.additive else ['utility'])
    missing = [n for n in required if n not in networks]
    if missing:
        raise CheckpointError(f'Checkpoint has no {", ".join(missing)} network.')
    attacker = None
    if 'attacker' in networks:
        attacker = _params('attacker', _attacker_config(networks['attacker']),
                           networks['attacker'])
    return TrainedSystem(
        releaser=_params('releaser', releaser_cfg, networks['releaser']),
        adversary=_params('adversary', adversary_cfg, networks['adversary']),
        utility=None if config.mode.additive else
        _params('utility', utility_cfg, networks['utility']),
        config=config, tau=tau, attacker=attacker
    )
