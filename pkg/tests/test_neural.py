import json

import numpy as np
import pytest

from gradcheck import check_sample
from otfsynth.neural import (
    CheckpointError,
    Optimizer,
    QNetwork,
    batch_update,
    forward,
    init_network,
    load_checkpoint,
    mse_grad,
    save_checkpoint,
)


def test_init():
    a, b = init_network(21, seed=4), init_network(21, seed=4)
    assert np.array_equal(a.W1, b.W1) and np.array_equal(a.W2, b.W2)
    assert a.W1.shape == (20, 21) and a.W2.shape == (20,)
    assert not a.b1.any() and a.b2 == 0.0
    assert np.abs(a.W1).max() <= np.sqrt(6 / 41)


def test_forward_constants():
    z = QNetwork(np.zeros((3, 4)), np.zeros(3), np.zeros(3), 0.0)
    assert forward(z, np.ones(4)) == 0.0
    c = init_network(4, 1, hidden=3)
    c.W2[:] = 0
    c.b2 = -3.0
    assert np.allclose(forward(c, np.random.default_rng(0).normal(size=(5, 4))), -3.0)


def test_forward_by_hand():
    q = QNetwork(np.array([[1.0, -2.0], [0.5, 0.5]]), np.array([0.0, -1.0]), np.array([2.0, -1.0]), 0.25)
    # x = (3, 1): h = relu(3 - 2, 1.5 + 0.5 - 1) = (1, 1); out = 2 - 1 + 0.25
    assert forward(q, [3.0, 1.0]) == pytest.approx(1.25)
    # x = (0, 1): h = relu(-2, -0.5) = 0; out = b2
    assert forward(q, [0.0, 1.0]) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        forward(q, [1.0, 2.0, 3.0])


def test_zero_error_step_is_pure_decay():
    q = init_network(5, 0, hidden=4)
    q.b1[:] = 0.1
    X = np.random.default_rng(1).normal(size=(3, 5))
    y = forward(q, X)
    W1, b1, W2 = q.W1.copy(), q.b1.copy(), q.W2.copy()
    opt = Optimizer(learning_rate=0.1, weight_decay=0.01, momentum=0.0)
    batch_update(q, X, y, opt)
    assert np.allclose(q.W1, W1 * (1 - 0.1 * 0.01))
    assert np.allclose(q.W2, W2 * (1 - 0.1 * 0.01))
    assert np.array_equal(q.b1, b1)


def test_loss_decreases():
    q = init_network(6, 2)
    x = np.random.default_rng(2).normal(size=(1, 6))
    y = np.array([3.0])
    before = mse_grad(q, x, y)[0]
    batch_update(q, x, y, Optimizer(learning_rate=1e-3))
    assert mse_grad(q, x, y)[0] < before


@pytest.mark.parametrize("seed", range(10))
def test_gradient_check(seed):
    assert check_sample(seed) < 1e-3


def test_checkpoint_round_trip(tmp_path):
    q = init_network(9, 3)
    opt = Optimizer()
    batch_update(q, np.ones((2, 9)), np.array([1.0, -1.0]), opt)
    path = tmp_path / "c.json"
    save_checkpoint(q, opt, path, step=42, extra={"note": "x"})
    q2, opt2, meta = load_checkpoint(path, expect_d_in=9)
    X = np.random.default_rng(0).normal(size=(100, 9))
    assert np.array_equal(forward(q, X), forward(q2, X))
    assert meta["step"] == 42 and meta["version"] == 1 and meta["note"] == "x"
    assert np.array_equal(opt2.velocity[0], opt.velocity[0])
    save_checkpoint(q2, opt2, tmp_path / "d.json", step=42, extra={"note": "x"})
    assert path.read_bytes() == (tmp_path / "d.json").read_bytes()


def test_checkpoint_errors(tmp_path):
    q = init_network(9, 3)
    path = tmp_path / "c.json"
    save_checkpoint(q, None, path)
    with pytest.raises(CheckpointError, match="d_in"):
        load_checkpoint(path, expect_d_in=10)
    d = json.loads(path.read_text())
    d["version"] = 99
    path.write_text(json.dumps(d))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)
    path.write_text(path.read_text()[:50])
    with pytest.raises(CheckpointError, match="corrupt"):
        load_checkpoint(path)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.json")
