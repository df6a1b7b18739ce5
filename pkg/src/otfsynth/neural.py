"""One-hidden-layer ReLU perceptron with a scalar output, trained by SGD."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_VERSION = 1
HIDDEN = 20
LEARNING_RATE = 1e-5
WEIGHT_DECAY = 1e-4
MOMENTUM = 0.9


class DivergenceError(FloatingPointError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class QNetwork:
    W1: np.ndarray  # hidden x d_in
    b1: np.ndarray
    W2: np.ndarray  # hidden
    b2: float

    @property
    def d_in(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    def copy(self) -> "QNetwork":
        return QNetwork(self.W1.copy(), self.b1.copy(), self.W2.copy(), float(self.b2))

    def params(self) -> list:
        return [self.W1, self.b1, self.W2, np.array(self.b2)]

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.W1).all() and np.isfinite(self.b1).all() and np.isfinite(self.W2).all()
            and math.isfinite(self.b2)
        )

    def __call__(self, X) -> np.ndarray | float:
        return forward(self, X)


@dataclass
class Optimizer:
    """SGD with momentum; L2 decay on weight matrices only."""

    learning_rate: float = LEARNING_RATE
    weight_decay: float = WEIGHT_DECAY
    momentum: float = MOMENTUM
    velocity: list | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.learning_rate <= 0 or self.weight_decay < 0 or not 0 <= self.momentum < 1:
            raise ValueError("invalid optimizer hyperparameters")


def init_network(d_in: int, seed: int = 0, hidden: int = HIDDEN) -> QNetwork:
    if d_in < 1:
        raise ValueError("d_in must be positive")
    rng = np.random.default_rng(seed)
    a1 = math.sqrt(6.0 / (d_in + hidden))
    a2 = math.sqrt(6.0 / (hidden + 1))
    return QNetwork(
        rng.uniform(-a1, a1, size=(hidden, d_in)),
        np.zeros(hidden),
        rng.uniform(-a2, a2, size=hidden),
        0.0,
    )


def forward(q: QNetwork, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != q.d_in:
        raise ValueError(f"input dimension {X.shape[-1]} != network d_in {q.d_in}")
    H = np.maximum(X @ q.W1.T + q.b1, 0.0)
    out = H @ q.W2 + q.b2
    return float(out) if X.ndim == 1 else out


def mse_grad(q: QNetwork, X: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradient ``[dW1, db1, dW2, db2]``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    Z = X @ q.W1.T + q.b1
    H = np.maximum(Z, 0.0)
    out = H @ q.W2 + q.b2
    err = out - y
    m = len(y)
    loss = float(err @ err) / m
    g_out = 2.0 * err / m
    dW2 = H.T @ g_out
    db2 = float(g_out.sum())
    g_h = np.outer(g_out, q.W2) * (Z > 0)
    dW1 = g_h.T @ X
    db1 = g_h.sum(axis=0)
    return loss, [dW1, db1, dW2, db2]


def batch_update(q: QNetwork, X, targets, opt: Optimizer) -> float:
    """One momentum-SGD step on the batch MSE, in place. Returns the loss before the step."""
    if len(targets) == 0:
        raise ValueError("empty batch")
    loss, grads = mse_grad(q, X, targets)
    if not math.isfinite(loss):
        raise DivergenceError("non-finite loss")
    grads[0] = grads[0] + opt.weight_decay * q.W1
    grads[2] = grads[2] + opt.weight_decay * q.W2
    if opt.velocity is None:
        opt.velocity = [np.zeros_like(q.W1), np.zeros_like(q.b1), np.zeros_like(q.W2), 0.0]
    v = opt.velocity
    mu, lr = opt.momentum, opt.learning_rate
    v[0] = mu * v[0] + grads[0]
    v[1] = mu * v[1] + grads[1]
    v[2] = mu * v[2] + grads[2]
    v[3] = mu * v[3] + grads[3]
    q.W1 -= lr * v[0]
    q.b1 -= lr * v[1]
    q.W2 -= lr * v[2]
    q.b2 = float(q.b2 - lr * v[3])
    if not q.is_finite():
        raise DivergenceError("non-finite weights after update")
    return loss


# -- checkpoints -------------------------------------------------------------
def _floats(a) -> list:
    return np.asarray(a, dtype=np.float64).tolist()


def checkpoint_dict(q: QNetwork, opt: Optimizer | None = None, step: int = 0, extra: dict | None = None) -> dict:
    d = {
        "version": CHECKPOINT_VERSION,
        "d_in": q.d_in,
        "hidden": q.hidden,
        "step": int(step),
        "W1": _floats(q.W1),
        "b1": _floats(q.b1),
        "W2": _floats(q.W2),
        "b2": float(q.b2),
    }
    if opt is not None:
        d["optimizer"] = {
            "learning_rate": opt.learning_rate,
            "weight_decay": opt.weight_decay,
            "momentum": opt.momentum,
            "velocity": None if opt.velocity is None else [_floats(v) for v in opt.velocity],
        }
    if extra:
        d.update(extra)
    return d


def save_checkpoint(q: QNetwork, opt: Optimizer | None, path, step: int = 0, extra: dict | None = None) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(checkpoint_dict(q, opt, step, extra), sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)


def load_checkpoint(path, expect_d_in: int | None = None):
    """Returns ``(QNetwork, Optimizer | None, metadata dict)``."""
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        if d.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {d.get('version')!r}")
        q = QNetwork(
            np.array(d["W1"], dtype=np.float64),
            np.array(d["b1"], dtype=np.float64),
            np.array(d["W2"], dtype=np.float64),
            float(d["b2"]),
        )
        if q.W1.shape != (d["hidden"], d["d_in"]) or q.b1.shape != (d["hidden"],) or q.W2.shape != (d["hidden"],):
            raise CheckpointError(f"{path}: weight shapes disagree with header")
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"{path}: corrupt checkpoint ({exc})") from None
    if expect_d_in is not None and q.d_in != expect_d_in:
        raise CheckpointError(f"{path}: checkpoint d_in={q.d_in} but schema dimension is {expect_d_in}")
    opt = None
    od = d.get("optimizer")
    if od is not None:
        vel = od.get("velocity")
        opt = Optimizer(od["learning_rate"], od["weight_decay"], od["momentum"])
        if vel is not None:
            opt.velocity = [np.array(vel[0]), np.array(vel[1]), np.array(vel[2]), float(vel[3])]
    return q, opt, d
