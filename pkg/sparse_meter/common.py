"""Helpers shared across modules."""
import math
import os
import pathlib
import tempfile
from typing import List, Sequence, Union

import numpy as np
import yaml


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Derive ``count`` independent 64-bit seeds from one seed."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def format_float(value) -> str:
    """Shortest text that round-trips a float. Empty for None and NaN."""
    if value is None:
        return ''
    value = float(value)
    if math.isnan(value):
        return ''
    return repr(value)


def parse_float_list(value: Union[str, Sequence[float]]) -> List[float]:
    """Read ``0,0.5,1``, ``[0, 0.5, 1]`` or a sequence of numbers as floats."""
    if isinstance(value, str):
        text = value.strip()
        if not text.startswith('['):
            text = f'[{text}]'
        value = yaml.safe_load(text)
    if not isinstance(value, (list, tuple)):
        value = [value]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ValueError(f'Expected a list of numbers, got {value!r}.')


def atomic_write(path: Union[str, pathlib.Path], data: Union[bytes, str]) -> pathlib.Path:
    """Write a file through a temporary sibling so readers never see partial files."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = 'wb' if isinstance(data, bytes) else 'w'
    fd, tmp = tempfile.mkstemp(prefix=f'.{path.name}.', dir=path.parent)
    try:
        kwargs = {} if mode == 'wb' else {'encoding': 'utf-8', 'newline': '\n'}
        with os.fdopen(fd, mode, **kwargs) as outf:
            outf.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path
