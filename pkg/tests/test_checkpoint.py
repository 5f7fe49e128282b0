import numpy as np
import pytest

from sublaplace.net.checkpoint import load_checkpoint, save_checkpoint
from sublaplace.net.model import forward_batch, init_model


def test_checkpoint_is_lossless(tmp_path):
    model = init_model(4, (8, 3), seed=2**63 + 5)
    model = model.with_theta(model.theta + 1e-17 * np.arange(model.p))
    path = save_checkpoint(model, tmp_path / "nested" / "model.npz")
    restored = load_checkpoint(path)
    assert restored.layers == model.layers
    assert restored.seed == model.seed
    assert np.array_equal(restored.theta, model.theta)
    X = np.random.default_rng(0).standard_normal((5, 4))
    assert np.array_equal(forward_batch(restored, X), forward_batch(model, X))


def test_foreign_npz_is_rejected(tmp_path):
    path = tmp_path / "other.npz"
    np.savez(path, header=np.array('{"format": "something-else"}'), theta=np.zeros(3))
    with pytest.raises(ValueError, match="checkpoint"):
        load_checkpoint(path)
