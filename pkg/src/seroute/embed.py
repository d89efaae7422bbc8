"""Query embeddings: deterministic hashing mock, remote client, vector math.

Embeddings are computed once when a dataset is built and persisted next to
it, keyed by record id, so later stages never depend on a live provider.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ._http import post_json
from .errors import (
    DimensionMismatch,
    EmptyInput,
    ProviderFailure,
    ValidationError,
    ZeroVector,
)

MOCK_EMBEDDING_DIM = 256

_WORD_RE = re.compile(r"[0-9a-z]+")


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A finite, non-empty 1-D float vector. The array is read-only."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("embedding contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def tolist(self) -> list[float]:
        return self.values.tolist()


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding spill."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"cosine over dims {a.dim} and {b.dim}")
    norm_a = float(np.linalg.norm(a.values))
    norm_b = float(np.linalg.norm(b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine is undefined for a zero vector")
    value = float(np.dot(a.values, b.values) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


def _features(text: str) -> list[str]:
    words = _WORD_RE.findall(text.casefold())
    feats = list(words)
    feats.extend(f"{w1} {w2}" for w1, w2 in zip(words, words[1:]))
    return feats


@dataclass(frozen=True)
class MockEmbedder:
    """Deterministic feature-hashing embedder.

    Unigrams and adjacent word bigrams of the case-folded text are hashed
    into signed buckets and the result is L2-normalized. A pure function of
    the text: a cheap, reproducible stand-in for a sentence-embedding
    provider, with no semantics beyond shared vocabulary.
    """

    dim: int = MOCK_EMBEDDING_DIM
    provider_name: str = "mock"

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("embedding dim must be >= 1")

    def embed(self, text: str) -> EmbeddingVector:
        feats = _features(text)
        if not feats:
            raise EmptyInput("text has no hashable tokens")
        vec = np.zeros(self.dim, dtype=np.float64)
        for feat in feats:
            digest = hashlib.sha256(feat.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dim
            sign = 1.0 if digest[8] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Opposite-sign collisions cancelled everything; fall back to a
            # single deterministic bucket so the vector stays usable.
            digest = hashlib.sha256(text.casefold().encode("utf-8")).digest()
            vec[int.from_bytes(digest[:8], "big") % self.dim] = 1.0
            norm = 1.0
        return EmbeddingVector(vec / norm)


@dataclass(frozen=True)
class RemoteEmbedder:
    """Client for an embedding endpoint speaking {"input"} -> {"embedding"}."""

    endpoint: str
    timeout: float = 10.0
    retries: int = 2
    expected_dim: int | None = None
    provider_name: str = "remote"

    def embed(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise EmptyInput("cannot embed empty text")
        try:
            reply = post_json(
                self.endpoint,
                {"input": text},
                timeout=self.timeout,
                retries=self.retries,
            )
        except Exception as exc:
            raise ProviderFailure(f"embedding endpoint {self.endpoint}: {exc}") from exc
        values = reply.get("embedding") if isinstance(reply, dict) else None
        if not isinstance(values, list) or not values:
            raise ProviderFailure("embedding endpoint returned no 'embedding' list")
        try:
            vector = EmbeddingVector(np.asarray(values, dtype=np.float64))
        except (ValidationError, ValueError) as exc:
            raise ProviderFailure(f"embedding endpoint returned a bad vector: {exc}") from exc
        if self.expected_dim is not None and vector.dim != self.expected_dim:
            raise DimensionMismatch(
                f"provider returned dim {vector.dim}, expected {self.expected_dim}"
            )
        return vector


def write_embedding_store(
    path: str | Path,
    entries: Iterable[tuple[str, EmbeddingVector]],
    *,
    dim: int,
    provider: str,
) -> None:
    """Persist embeddings as JSONL: a header line, then one row per id."""
    path = Path(path)
    lines = [json.dumps({"dim": dim, "provider": provider}, sort_keys=True)]
    seen: set[str] = set()
    for record_id, vector in entries:
        if record_id in seen:
            raise ValidationError(f"duplicate embedding id: {record_id}")
        if vector.dim != dim:
            raise DimensionMismatch(
                f"embedding for {record_id!r} has dim {vector.dim}, store dim is {dim}"
            )
        seen.add(record_id)
        lines.append(
            json.dumps({"id": record_id, "embedding": vector.tolist()}, sort_keys=True)
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_embedding_store(
    path: str | Path,
) -> tuple[dict[str, EmbeddingVector], int, str]:
    """Load a store written by `write_embedding_store`.

    Returns (vectors by id, dim, provider name). Row dims are checked
    against the header.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        header_line = handle.readline()
        if not header_line.strip():
            raise ValidationError(f"embedding store {path} has no header")
        header = json.loads(header_line)
        dim = int(header["dim"])
        provider = str(header["provider"])
        vectors: dict[str, EmbeddingVector] = {}
        for line in handle:
            if not line.strip():
                continue
            row = json.loads(line)
            vector = EmbeddingVector(np.asarray(row["embedding"], dtype=np.float64))
            if vector.dim != dim:
                raise DimensionMismatch(
                    f"row {row['id']!r} has dim {vector.dim}, header says {dim}"
                )
            vectors[str(row["id"])] = vector
    return vectors, dim, provider
