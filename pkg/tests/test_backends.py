"""The compiled kernels and the pure-Python fallback give identical outputs."""

import numpy as np
import pytest

from perclab import _backend, _purepy, rng
from perclab.graphs import GraphSpec
from perclab.oracle import edge_bits

_kernels = pytest.importorskip("perclab._kernels")

SPECS = [GraphSpec.hypercube(8), GraphSpec.torus(4, 3), GraphSpec.product(3, 3),
         GraphSpec.complete(5)]


def _eq(a, b):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            _eq(x, y)
    elif a is None or b is None:
        assert a is None and b is None
    else:
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_explore_and_batches(spec):
    av = np.array([1, 5, 9], dtype=np.int64)
    for seed in range(10):
        key, t = rng.sample_key(seed), rng.threshold(0.3)
        for caps in ((-1, -1), (2, -1), (-1, 5)):
            args = (spec.kernel_params, key, t, seed % spec.V, *caps, av, True)
            _eq(_kernels.explore(*args), _purepy.explore(*args))
    for r_max, cap in ((-1, -1), (3, -1), (-1, 4)):
        args = (spec.kernel_params, 11, 0, 300, rng.threshold(0.25), r_max, cap, av)
        _eq(_kernels.batch_trials(*args), _purepy.batch_trials(*args))


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_census_and_eccentricities(spec):
    for seed in range(5):
        args = (spec.kernel_params, rng.sample_key(seed), rng.threshold(0.35),
                np.array([0, 3], dtype=np.int64))
        a, b = _kernels.census(*args), _purepy.census(*args)
        _eq(a, b)
        labels, sizes, ou, ov = a
        for min_size in (1, 2, 3):
            _eq(_kernels.eccentricities(spec.V, ou, ov, labels, sizes, min_size),
                _purepy.eccentricities(spec.V, ou, ov, labels, sizes, min_size))


def test_advance_layer_and_masks():
    spec = GraphSpec.hypercube(8)
    ball = np.array([0], dtype=np.int64)
    cur = np.array([1, 2, 4, 8], dtype=np.int64)
    for key in range(20):
        _eq(_kernels.advance_layer(spec.kernel_params, key, rng.threshold(0.5), ball, cur),
            _purepy.advance_layer(spec.kernel_params, key, rng.threshold(0.5), ball, cur))
    small = GraphSpec.complete(4)
    eb = edge_bits(small)
    _eq(_kernels.enumerate_masks(small.kernel_params, eb, 6, 1, 3),
        _purepy.enumerate_masks(small.kernel_params, eb, 6, 1, 3))


def test_trial_seed():
    for i in range(50):
        assert _kernels.trial_seed(123, i) == _purepy.trial_seed(123, i) == rng.trial_seed(123, i)


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("PERC_LAB_BACKEND", "python")
    assert _backend.load() is _purepy
    monkeypatch.setenv("PERC_LAB_BACKEND", "compiled")
    assert _backend.load() is _kernels
