import numpy as np
import pytest

from sublaplace.data.dataset import Task
from sublaplace.data.synthetic import (
    TRUNCATION_RADIUS,
    SyntheticGenerator,
    SyntheticSpec,
    make_synthetic,
)


def test_tiny_noise_recovers_generating_function():
    spec = SyntheticSpec(n_train=30, n_test=10, input_dim=3, noise_std=1e-12, seed=4)
    train, test, oracle = make_synthetic(spec)
    assert (train.n, test.n, train.d) == (30, 10, 3)
    assert np.allclose(train.y, oracle(train.X), atol=1e-10)
    assert np.all(np.abs(train.X) <= TRUNCATION_RADIUS)


def test_same_seed_gives_identical_bytes():
    spec = SyntheticSpec(generator=SyntheticGenerator.PLANTED_MLP, n_train=20, n_test=5, seed=11)
    a, b = make_synthetic(spec), make_synthetic(spec)
    assert a[0].X.tobytes() == b[0].X.tobytes() and a[0].y.tobytes() == b[0].y.tobytes()
    assert a[1].y.tobytes() == b[1].y.tobytes()


def test_noise_variance_matches_spec():
    spec = SyntheticSpec(n_train=100000, n_test=1, input_dim=2, noise_std=0.3, seed=0)
    train, _, oracle = make_synthetic(spec)
    residual_var = float(np.var(train.y - oracle(train.X)))
    # chi-square sampling error of the variance estimate
    assert residual_var == pytest.approx(0.09, abs=3 * 0.09 * np.sqrt(2 / 100000))


def test_binary_task_draws_bernoulli_labels():
    spec = SyntheticSpec(n_train=200, n_test=50, task=Task.BINARY, seed=1)
    train, test, _ = make_synthetic(spec)
    assert set(np.unique(train.y)) <= {0.0, 1.0}
    assert train.task == Task.BINARY and test.task == Task.BINARY


def test_invalid_spec():
    with pytest.raises(ValueError):
        SyntheticSpec(noise_std=0.0)
