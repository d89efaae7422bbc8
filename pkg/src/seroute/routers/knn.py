"""Nearest-neighbor router over cosine similarity.

The prediction for a query is the strong-win fraction among its k most
similar training records, counting ties as half a win. Similarity ties are
broken toward the lower record index. A linear scan is all the corpus
sizes here need; there is deliberately no approximate index.
"""

from __future__ import annotations

import numpy as np

from ..core import RouterKind
from ..errors import EmptyTrainingSet, ValidationError
from .base import TrainingSet, as_query_array, unit_rows, unit_vector

DEFAULT_K = 1


class KNNRouterModel:
    kind = RouterKind.KNN

    def __init__(self, embeddings: np.ndarray, targets: np.ndarray, k: int = DEFAULT_K, seed: int = 0):
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
        if not 1 <= k <= embeddings.shape[0]:
            raise ValidationError(
                f"k must be in [1, {embeddings.shape[0]}], got {k}"
            )
        self.embeddings = embeddings
        self.targets = targets
        self.k = int(k)
        self.seed = int(seed)
        self._unit = unit_rows(embeddings)

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])

    def neighbors(self, embedding) -> np.ndarray:
        """Indices of the k highest-cosine records, ties to lower index."""
        query = unit_vector(as_query_array(embedding, self.dim))
        sims = self._unit @ query
        # Stable sort on negated similarity keeps equal-similarity records
        # in index order.
        order = np.argsort(-sims, kind="stable")
        return order[: self.k]

    def predict_win_prob(self, embedding, key: str = "") -> float:
        return float(self.targets[self.neighbors(embedding)].mean())


def knn_train(training_set: TrainingSet, k: int = DEFAULT_K, seed: int = 0) -> KNNRouterModel:
    if len(training_set) == 0:
        raise EmptyTrainingSet("nearest-neighbor router needs training records")
    return KNNRouterModel(
        embeddings=np.array(training_set.matrix),
        targets=np.array(training_set.targets),
        k=k,
        seed=seed,
    )
