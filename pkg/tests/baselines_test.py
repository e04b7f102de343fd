import numpy as np
import pytest

from sparse_meter.baselines import (
    UNIFORM_FACTORS, fir_lowpass_design, uniform_downsample, random_count,
    random_downsample
)
from sparse_meter.mechanism import ReleaseMode, released_rate


@pytest.mark.parametrize('d', UNIFORM_FACTORS)
def test_fir_dc_gain_and_symmetry(d):
    fir = fir_lowpass_design(d)
    assert fir.dc_gain == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(fir.coefficients, fir.coefficients[::-1])
    assert fir.order == 8 * d + 1
    assert fir.cutoff == pytest.approx(0.5 / d)


@pytest.mark.parametrize('d', UNIFORM_FACTORS)
def test_fir_stop_band(d):
    fir = fir_lowpass_design(d)
    stop = 1.5 * fir.cutoff
    frequencies = np.linspace(stop, 0.5, 200)
    gain = np.abs(fir.frequency_response(frequencies))
    assert 20 * np.log10(gain.max()) <= -20.0


def test_fir_errors():
    with pytest.raises(ValueError):
        fir_lowpass_design(5)
    with pytest.raises(ValueError):
        fir_lowpass_design(0)


def test_uniform_positions():
    y = np.random.default_rng(0).uniform(1, 2, size=24)
    out = uniform_downsample(y, 4)
    assert np.flatnonzero(out.mask).tolist() == [0, 4, 8, 12, 16, 20]
    assert np.count_nonzero(out.z) == 6
    assert out.mode == ReleaseMode.uniform


@pytest.mark.parametrize('d', UNIFORM_FACTORS)
def test_uniform_rate(d):
    out = uniform_downsample(np.ones((3, 24)), d)
    assert released_rate(out.mask) == 24 / d


def test_uniform_constant_input():
    out = uniform_downsample(np.full((2, 24), 7.5), 6)
    kept = out.z[out.mask == 1]
    assert np.allclose(kept, 7.5, atol=1e-9)


def test_uniform_no_decimation():
    y = np.random.default_rng(1).normal(size=(2, 24))
    out = uniform_downsample(y, 1)
    assert np.allclose(out.z, y)
    assert released_rate(out.mask) == 24


def test_random_count():
    assert random_count(0.25, 24) == 6
    assert random_count(1.0, 24) == 24
    assert random_count(1 / 24, 24) == 1
    with pytest.raises(ValueError):
        random_count(0.0, 24)
    with pytest.raises(ValueError):
        random_count(1.5, 24)


def test_random_downsample(rng):
    y = rng.uniform(1, 2, size=(50, 24))
    out = random_downsample(y, 0.25, rng)
    assert np.all(np.count_nonzero(out.z, axis=1) == 6)
    assert np.array_equal(out.z, y * out.mask)
    assert np.array_equal(random_downsample(y, 1.0, rng).z, y)


def test_random_inclusion_is_uniform_over_steps():
    rate, draws = 0.25, 10000
    out = random_downsample(np.ones((draws, 24)), rate, np.random.default_rng(17))
    sigma = np.sqrt(rate * (1 - rate) / draws)
    assert np.all(np.abs(out.mask.mean(axis=0) - rate) <= 4 * sigma)


def test_random_downsample_single_sequence(rng):
    out = random_downsample(np.ones(24), 0.5, rng)
    assert out.z.shape == (24,)
    assert out.mask.sum() == 12


def test_random_downsample_seeded():
    y = np.ones((5, 24))
    a = random_downsample(y, 0.3, np.random.default_rng(9))
    b = random_downsample(y, 0.3, np.random.default_rng(9))
    assert np.array_equal(a.mask, b.mask)
