import math

import pytest

from sparse_meter.common import spawn_seeds, format_float, parse_float_list, atomic_write


def test_spawn_seeds():
    assert spawn_seeds(3, 4) == spawn_seeds(3, 4)
    assert len(set(spawn_seeds(3, 4))) == 4
    assert spawn_seeds(3, 2) != spawn_seeds(4, 2)
    assert spawn_seeds(3, 2) == spawn_seeds(3, 4)[:2]


def test_format_float():
    assert format_float(None) == ''
    assert format_float(math.nan) == ''
    assert format_float(0.1) == '0.1'
    assert format_float(2) == '2.0'
    assert float(format_float(1 / 3)) == 1 / 3


@pytest.mark.parametrize('value', ['0,0.5,1', '[0, 0.5, 1]', ' 0, 0.5 ,1 ', (0, 0.5, 1)])
def test_parse_float_list(value):
    assert parse_float_list(value) == [0.0, 0.5, 1.0]


def test_parse_float_list_errors():
    assert parse_float_list('2') == [2.0]
    with pytest.raises(ValueError):
        parse_float_list('a,b')


def test_atomic_write(tmp_path):
    path = atomic_write(tmp_path / 'nested' / 'file.txt', 'a\nb\n')
    assert path.read_bytes() == b'a\nb\n'
    atomic_write(path, b'\x00\x01')
    assert path.read_bytes() == b'\x00\x01'
    assert [p.name for p in path.parent.iterdir()] == ['file.txt']
