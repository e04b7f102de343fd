"""Central finite-difference check of reverse-mode gradients."""
import numpy as np

from sparse_meter.numerics import backward


def check_gradients(loss_fn, params, h=1e-5, rtol=1e-4, atol=1e-7):
    """Compare analytic and numeric gradients of ``loss_fn()`` for every element.

    Returns the number of compared elements. Raises AssertionError on the first
    element out of tolerance.
    """
    for p in params:
        p.grad = None
    backward(loss_fn())
    analytic = [np.zeros_like(p.values) if p.grad is None else p.grad.copy()
                for p in params]
    count = 0
    for p, grad in zip(params, analytic):
        for index in np.ndindex(p.values.shape):
            original = p.values[index]
            p.values[index] = original + h
            plus = loss_fn().item()
            p.values[index] = original - h
            minus = loss_fn().item()
            p.values[index] = original
            numeric = (plus - minus) / (2 * h)
            diff = abs(grad[index] - numeric)
            scale = max(abs(grad[index]), abs(numeric))
            assert diff <= atol or diff <= rtol * scale, \
                f'{index}: analytic {grad[index]!r} vs numeric {numeric!r}'
            count += 1
    return count
