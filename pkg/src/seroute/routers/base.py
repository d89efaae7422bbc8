"""Shared training-set container and numeric helpers for the routers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from ..embed import EmbeddingVector
from ..errors import DimensionMismatch, ValidationError, ZeroVector
from ..preference import PreferenceRecord

# Per-record regression target: 1 when the strong slot won, 0 when the
# weak slot won, 0.5 for a tie.
TARGET_STRONG = 1.0
TARGET_WEAK = 0.0
TARGET_TIE = 0.5


def record_target(record: PreferenceRecord) -> float:
    if record.winner_model_a:
        return TARGET_STRONG
    if record.winner_model_b:
        return TARGET_WEAK
    return TARGET_TIE


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Preference records plus an embedding for every record id."""

    records: tuple[PreferenceRecord, ...]
    embeddings: Mapping[str, EmbeddingVector]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.dim < 1:
            raise ValidationError(f"embedding dim must be >= 1, got {self.dim}")
        for record in self.records:
            vector = self.embeddings.get(record.id)
            if vector is None:
                raise ValidationError(f"record {record.id!r} has no embedding")
            if vector.dim != self.dim:
                raise DimensionMismatch(
                    f"record {record.id!r} embedding dim {vector.dim} != {self.dim}"
                )

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Record embeddings stacked in record order, shape (n, dim)."""
        out = np.zeros((len(self.records), self.dim), dtype=np.float64)
        for i, record in enumerate(self.records):
            out[i] = self.embeddings[record.id].values
        out.flags.writeable = False
        return out

    @cached_property
    def targets(self) -> np.ndarray:
        out = np.array([record_target(r) for r in self.records], dtype=np.float64)
        out.flags.writeable = False
        return out


def sigmoid(x):
    """Numerically stable logistic function for scalars or arrays."""
    return np.exp(-np.logaddexp(0.0, -np.asarray(x, dtype=np.float64)))


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """L2-normalize each row; a zero row is an error."""
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("training embeddings must have non-zero norm")
    return matrix / norms[:, None]


def unit_vector(values: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise ZeroVector("query embedding must have non-zero norm")
    return values / norm


def as_query_array(embedding, dim: int) -> np.ndarray:
    """Accept an EmbeddingVector or array-like; check dimensionality."""
    if isinstance(embedding, EmbeddingVector):
        values = embedding.values
    else:
        values = np.asarray(embedding, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] != dim:
        raise DimensionMismatch(
            f"query embedding has shape {values.shape}, model expects ({dim},)"
        )
    if not np.all(np.isfinite(values)):
        raise ValidationError("query embedding contains non-finite values")
    return values.astype(np.float64, copy=False)
