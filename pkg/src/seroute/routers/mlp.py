"""Two-layer perceptron router with a three-way softmax head.

The network maps a query embedding through one ReLU hidden layer to a
softmax over (strong wins, weak wins, tie) and trains with cross-entropy
against the one-hot winner flags. The routing probability folds the tie
mass in evenly: P(strong) = p_strong_win + 0.5 * p_tie, so an untrained
all-zero network predicts exactly 1/3 + 1/6 = 0.5.

Backpropagation is written out by hand; `loss_and_grads` is exposed so the
analytic gradients can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import RouterKind
from ..errors import EmptyTrainingSet, ValidationError
from .base import TrainingSet, as_query_array

DEFAULT_HIDDEN = 128
DEFAULT_EPOCHS = 100
DEFAULT_LEARNING_RATE = 0.001

CLASS_STRONG = 0
CLASS_WEAK = 1
CLASS_TIE = 2


@dataclass(frozen=True)
class MLPConfig:
    hidden: int = DEFAULT_HIDDEN
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValidationError(f"hidden must be >= 1, got {self.hidden!r}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs!r}")
        if not self.learning_rate > 0.0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate!r}")


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _forward(w1, b1, w2, b2, x):
    pre = x @ w1 + b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ w2 + b2
    return pre, hidden, logits


def loss_and_grads(w1, b1, w2, b2, x, y):
    """Mean cross-entropy over the batch and its parameter gradients.

    x: (n, dim) inputs; y: (n, 3) one-hot winner flags.
    Returns (loss, dw1, db1, dw2, db2).
    """
    n = x.shape[0]
    pre, hidden, logits = _forward(w1, b1, w2, b2, x)
    log_probs = _log_softmax_rows(logits)
    loss = float(-(y * log_probs).sum() / n)
    dlogits = (np.exp(log_probs) - y) / n
    dw2 = hidden.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dhidden = dlogits @ w2.T
    dpre = dhidden * (pre > 0.0)
    dw1 = x.T @ dpre
    db1 = dpre.sum(axis=0)
    return loss, dw1, db1, dw2, db2


class MLPRouterModel:
    kind = RouterKind.MLP

    def __init__(self, w1, b1, w2, b2, seed: int = 0):
        w1 = np.asarray(w1, dtype=np.float64)
        b1 = np.asarray(b1, dtype=np.float64)
        w2 = np.asarray(w2, dtype=np.float64)
        b2 = np.asarray(b2, dtype=np.float64)
        if w1.ndim != 2 or b1.shape != (w1.shape[1],):
            raise ValidationError("first layer shapes are inconsistent")
        if w2.shape != (w1.shape[1], 3) or b2.shape != (3,):
            raise ValidationError("second layer must map hidden units to 3 classes")
        for name, value in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            if not np.all(np.isfinite(value)):
                raise ValidationError(f"{name} contains non-finite values")
        self.w1, self.b1, self.w2, self.b2 = w1, b1, w2, b2
        self.seed = int(seed)
        self.loss_history: list[float] = []

    @classmethod
    def zeros(cls, dim: int, hidden: int = DEFAULT_HIDDEN) -> "MLPRouterModel":
        return cls(
            w1=np.zeros((dim, hidden)),
            b1=np.zeros(hidden),
            w2=np.zeros((hidden, 3)),
            b2=np.zeros(3),
        )

    @property
    def dim(self) -> int:
        return int(self.w1.shape[0])

    @property
    def hidden(self) -> int:
        return int(self.w1.shape[1])

    def class_probs(self, embedding) -> np.ndarray:
        """Softmax over (strong wins, weak wins, tie) for one query."""
        query = as_query_array(embedding, self.dim)
        _, _, logits = _forward(self.w1, self.b1, self.w2, self.b2, query[None, :])
        return _softmax_rows(logits)[0]

    def predict_win_prob(self, embedding, key: str = "") -> float:
        probs = self.class_probs(embedding)
        return float(probs[CLASS_STRONG] + 0.5 * probs[CLASS_TIE])


def _one_hot_targets(training_set: TrainingSet) -> np.ndarray:
    return np.array(
        [
            [r.winner_model_a, r.winner_model_b, r.winner_tie]
            for r in training_set.records
        ],
        dtype=np.float64,
    )


def mlp_train(training_set: TrainingSet, config: MLPConfig | None = None) -> MLPRouterModel:
    """Full-batch gradient descent with seeded scaled-normal init."""
    cfg = config or MLPConfig()
    if len(training_set) == 0:
        raise EmptyTrainingSet("perceptron router needs training records")
    x = np.array(training_set.matrix)
    y = _one_hot_targets(training_set)

    rng = np.random.default_rng(cfg.seed)
    w1 = rng.normal(0.0, np.sqrt(2.0 / training_set.dim), (training_set.dim, cfg.hidden))
    b1 = np.zeros(cfg.hidden)
    w2 = rng.normal(0.0, np.sqrt(2.0 / cfg.hidden), (cfg.hidden, 3))
    b2 = np.zeros(3)

    history = []
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        loss, dw1, db1, dw2, db2 = loss_and_grads(w1, b1, w2, b2, x, y)
        history.append(loss)
        w1 -= lr * dw1
        b1 -= lr * db1
        w2 -= lr * dw2
        b2 -= lr * db2

    model = MLPRouterModel(w1=w1, b1=b1, w2=w2, b2=b2, seed=cfg.seed)
    model.loss_history = history
    return model
