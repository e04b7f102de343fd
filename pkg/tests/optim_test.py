import numpy as np
import pytest

from sparse_meter.numerics import (
    Tensor, RmspropState, MissingGradientError, rmsprop_step, l2_penalty, backward
)


def test_fresh_state_unit_gradient():
    param = Tensor([1.0], tracked=True)
    param.grad = np.array([1.0])
    state = RmspropState.zeros_like(param, rho=0.9, lr=0.01, eps=1e-8)
    rmsprop_step(param, state)
    assert state.s[0] == pytest.approx(0.1)
    assert param.values[0] - 1.0 == pytest.approx(-0.0316228, abs=1e-7)


def test_two_identical_steps():
    param = Tensor([0.0], tracked=True)
    state = RmspropState.zeros_like(param, rho=0.9, lr=0.01, eps=1e-8)
    param.grad = np.array([1.0])
    rmsprop_step(param, state)
    before = param.values[0]
    rmsprop_step(param, state)
    assert state.s[0] == pytest.approx(0.19)
    assert param.values[0] - before == pytest.approx(-0.022942, abs=1e-6)


def test_zero_gradient_decays_state():
    param = Tensor([2.0, -3.0], tracked=True)
    state = RmspropState(np.array([0.5, 1.0]), rho=0.9, lr=0.01)
    param.grad = np.zeros(2)
    rmsprop_step(param, state)
    assert param.values.tolist() == [2.0, -3.0]
    assert np.allclose(state.s, [0.45, 0.9])


def test_missing_gradient():
    param = Tensor([1.0], tracked=True)
    with pytest.raises(MissingGradientError):
        rmsprop_step(param, RmspropState.zeros_like(param))


def test_invalid_state():
    with pytest.raises(ValueError):
        RmspropState(np.zeros(1), rho=1.0)
    with pytest.raises(ValueError):
        RmspropState(np.zeros(1), lr=0.0)


def test_l2_penalty_zero_beta():
    params = [Tensor([[5.0, -7.0]], tracked=True)]
    assert l2_penalty(params, 0.0).item() == 0.0


def test_l2_penalty_value():
    assert l2_penalty([Tensor([2.0, -2.0], tracked=True)], 1.5).item() == \
        pytest.approx(3.0)


def test_l2_penalty_gradient():
    w = Tensor([2.0, -2.0, 1.0], tracked=True)
    backward(l2_penalty([w], 1.5))
    assert np.allclose(w.grad, 1.5 * w.values / 3)


def test_l2_penalty_negative_beta():
    with pytest.raises(ValueError):
        l2_penalty([Tensor([1.0])], -0.1)
