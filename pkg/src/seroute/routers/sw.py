"""Similarity-weighted pairwise-ranking router.

No parameters are learned up front. At prediction time every training
comparison is reweighted by how similar its query is to the live query and
a fresh two-coefficient pairwise fit is run; the win probability is the
sigmoid of the fitted coefficient gap.

The per-record similarity is the cosine between the live query and the
training query, normalized by that training query's highest cosine to any
*other* training query. The ratio may exceed 1 when the live query sits
closer than any training neighbor does; it is deliberately left unclamped.
Weights are gamma ** (1 + similarity), so an exact nearest match at
similarity 1 with the default gamma of 10 weighs 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import RouterKind
from ..errors import EmptyTrainingSet, ValidationError
from .base import TrainingSet, as_query_array, sigmoid, unit_rows, unit_vector

DEFAULT_GAMMA = 10.0
DEFAULT_STEPS = 200
DEFAULT_LEARNING_RATE = 0.05

# Peer similarities at or below this are unusable as a normalizer; the
# record's similarity is left unnormalized instead.
_MIN_PEER_SIMILARITY = 1e-12


@dataclass(frozen=True)
class SWConfig:
    gamma: float = DEFAULT_GAMMA
    steps: int = DEFAULT_STEPS
    learning_rate: float = DEFAULT_LEARNING_RATE

    def __post_init__(self):
        if not math.isfinite(self.gamma) or self.gamma <= 1.0:
            raise ValidationError(f"gamma must be finite and > 1, got {self.gamma!r}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps!r}")
        if not self.learning_rate > 0.0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate!r}")


class SWRouterModel:
    """Stored training comparisons plus the per-query fit settings."""

    kind = RouterKind.SW

    def __init__(
        self,
        embeddings: np.ndarray,
        targets: np.ndarray,
        config: SWConfig | None = None,
        seed: int = 0,
    ):
        embeddings = np.asarray(embeddings, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if embeddings.ndim != 2 or embeddings.shape[0] == 0:
            raise EmptyTrainingSet("need at least one training record")
        if targets.shape != (embeddings.shape[0],):
            raise ValidationError(
                f"targets shape {targets.shape} does not match {embeddings.shape[0]} records"
            )
        if not set(np.unique(targets)) <= {0.0, 0.5, 1.0}:
            raise ValidationError("targets must be 0, 0.5 or 1")
        self.embeddings = embeddings
        self.targets = targets
        self.config = config or SWConfig()
        self.seed = int(seed)
        self._unit = unit_rows(embeddings)
        self._peer_max = self._compute_peer_max(self._unit)

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])

    @staticmethod
    def _compute_peer_max(unit: np.ndarray) -> np.ndarray:
        n = unit.shape[0]
        if n == 1:
            return np.ones(1, dtype=np.float64)
        grid = unit @ unit.T
        np.fill_diagonal(grid, -np.inf)
        peer = grid.max(axis=1)
        # A record whose best peer similarity is ~0 or negative cannot be
        # normalized by it; fall back to the raw cosine for that record.
        return np.where(peer > _MIN_PEER_SIMILARITY, peer, 1.0)

    def similarity_weights(self, embedding) -> np.ndarray:
        """Per-record weights gamma ** (1 + normalized similarity)."""
        query = unit_vector(as_query_array(embedding, self.dim))
        sims = self._unit @ query
        normalized = sims / self._peer_max
        return np.power(self.config.gamma, 1.0 + normalized)

    def _fit_weights(self, embedding) -> np.ndarray:
        """The same weights rescaled by the largest one.

        The per-query fit normalizes its gradient by the weight sum, so only
        weight ratios matter; the max-shift keeps an extreme similarity
        ratio from overflowing the power.
        """
        query = unit_vector(as_query_array(embedding, self.dim))
        sims = self._unit @ query
        exponent = (1.0 + sims / self._peer_max) * math.log(self.config.gamma)
        return np.exp(exponent - exponent.max())

    def predict_win_prob(self, embedding, key: str = "") -> float:
        """Fit the two comparison coefficients for this query and return
        the probability that the strong model wins.

        Plain gradient descent on the weight-normalized logistic loss with
        soft targets; both coefficients start at zero. With all-tie data
        the gradient at zero vanishes and the prediction stays exactly 0.5.
        """
        weights = self._fit_weights(embedding)
        weight_sum = float(weights.sum())
        lr = self.config.learning_rate
        xi_strong = 0.0
        xi_weak = 0.0
        for _ in range(self.config.steps):
            p = float(sigmoid(xi_strong - xi_weak))
            grad = float(weights @ (p - self.targets)) / weight_sum
            xi_strong -= lr * grad
            xi_weak += lr * grad
        return float(sigmoid(xi_strong - xi_weak))


def sw_train(training_set: TrainingSet, config: SWConfig | None = None, seed: int = 0) -> SWRouterModel:
    """Package the training comparisons; the fit itself happens per query."""
    if len(training_set) == 0:
        raise EmptyTrainingSet("similarity-weighted router needs training records")
    return SWRouterModel(
        embeddings=np.array(training_set.matrix),
        targets=np.array(training_set.targets),
        config=config,
        seed=seed,
    )
