import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def central_diff(loss, arr, index, h):
    """Two-sided finite difference of loss() w.r.t. one array entry."""
    old = arr[index]
    arr[index] = old + h
    jp = loss()
    arr[index] = old - h
    jm = loss()
    arr[index] = old
    return (jp - jm) / (2.0 * h)


def rel_err(a, b, floor=1e-9):
    return abs(a - b) / max(abs(a), abs(b), floor)
