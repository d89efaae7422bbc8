"""Latent-factor scoring router.

Each model gets a latent vector and a bias; a query is projected into the
latent space and scored against each model. The win probability is the
sigmoid of the strong-minus-weak score gap. Trained by full-batch gradient
descent on the logistic loss with targets 1 / 0 / 0.5.

The projection starts as small seeded noise while the model vectors and
biases start at zero, so an untrained model predicts exactly 0.5 for every
query and the first update still receives a useful gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import RouterKind
from ..errors import EmptyTrainingSet, NoDecisiveRecords, ValidationError
from .base import TrainingSet, as_query_array, sigmoid

DEFAULT_LATENT_DIM = 8
DEFAULT_EPOCHS = 50
DEFAULT_LEARNING_RATE = 0.01
DEFAULT_INIT_SCALE = 0.01


@dataclass(frozen=True)
class MFConfig:
    latent_dim: int = DEFAULT_LATENT_DIM
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    init_scale: float = DEFAULT_INIT_SCALE
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValidationError(f"latent_dim must be >= 1, got {self.latent_dim!r}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs!r}")
        if not self.learning_rate > 0.0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if not self.init_scale > 0.0:
            raise ValidationError(f"init_scale must be > 0, got {self.init_scale!r}")


class MFRouterModel:
    kind = RouterKind.MF

    def __init__(
        self,
        projection: np.ndarray,
        vec_strong: np.ndarray,
        vec_weak: np.ndarray,
        bias_strong: float,
        bias_weak: float,
        seed: int = 0,
    ):
        projection = np.asarray(projection, dtype=np.float64)
        vec_strong = np.asarray(vec_strong, dtype=np.float64)
        vec_weak = np.asarray(vec_weak, dtype=np.float64)
        if projection.ndim != 2:
            raise ValidationError("projection must be a (dim, latent_dim) matrix")
        latent = projection.shape[1]
        if vec_strong.shape != (latent,) or vec_weak.shape != (latent,):
            raise ValidationError("model vectors must match the projection's latent dim")
        for name, value in (
            ("projection", projection),
            ("vec_strong", vec_strong),
            ("vec_weak", vec_weak),
        ):
            if not np.all(np.isfinite(value)):
                raise ValidationError(f"{name} contains non-finite values")
        if not (math.isfinite(bias_strong) and math.isfinite(bias_weak)):
            raise ValidationError("biases must be finite")
        self.projection = projection
        self.vec_strong = vec_strong
        self.vec_weak = vec_weak
        self.bias_strong = float(bias_strong)
        self.bias_weak = float(bias_weak)
        self.seed = int(seed)
        self.loss_history: list[float] = []

    @property
    def dim(self) -> int:
        return int(self.projection.shape[0])

    @property
    def latent_dim(self) -> int:
        return int(self.projection.shape[1])

    def score_gap(self, embedding) -> float:
        """Strong score minus weak score for one query."""
        query = as_query_array(embedding, self.dim)
        z = query @ self.projection
        return float(
            (self.vec_strong - self.vec_weak) @ z + self.bias_strong - self.bias_weak
        )

    def predict_win_prob(self, embedding, key: str = "") -> float:
        return float(sigmoid(self.score_gap(embedding)))


def mf_train(training_set: TrainingSet, config: MFConfig | None = None) -> MFRouterModel:
    """Full-batch gradient descent on the mean logistic loss."""
    cfg = config or MFConfig()
    if len(training_set) == 0:
        raise EmptyTrainingSet("latent-factor router needs training records")
    targets = np.array(training_set.targets)
    if not np.any(targets != 0.5):
        raise NoDecisiveRecords("training data is all ties; nothing to separate")
    x = np.array(training_set.matrix)
    n = x.shape[0]

    rng = np.random.default_rng(cfg.seed)
    projection = rng.uniform(-cfg.init_scale, cfg.init_scale, (training_set.dim, cfg.latent_dim))
    vec_strong = np.zeros(cfg.latent_dim)
    vec_weak = np.zeros(cfg.latent_dim)
    bias_strong = 0.0
    bias_weak = 0.0

    history = []
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        z = x @ projection
        gap = z @ (vec_strong - vec_weak) + (bias_strong - bias_weak)
        p = sigmoid(gap)
        # mean of softplus(gap) - target * gap, the logistic loss with soft targets
        history.append(float(np.mean(np.logaddexp(0.0, gap) - targets * gap)))
        err = (p - targets) / n
        grad_vec = z.T @ err
        grad_bias = float(err.sum())
        grad_projection = x.T @ np.outer(err, vec_strong - vec_weak)
        vec_strong -= lr * grad_vec
        vec_weak += lr * grad_vec
        bias_strong -= lr * grad_bias
        bias_weak += lr * grad_bias
        projection -= lr * grad_projection

    model = MFRouterModel(
        projection=projection,
        vec_strong=vec_strong,
        vec_weak=vec_weak,
        bias_strong=bias_strong,
        bias_weak=bias_weak,
        seed=cfg.seed,
    )
    model.loss_history = history
    return model
