"""Versioned on-disk router artifacts with integrity checking.

An artifact is one JSON document: a header naming the format version,
router kind, embedding dim and seed, a checksum over the canonical payload
serialization, and the payload itself. Floats round-trip bit-exactly
through JSON's shortest-repr encoding, so save/load is identity on
parameters.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import RouterKind
from ..errors import CorruptArtifact, UnsupportedVersion, ValidationError
from .knn import KNNRouterModel
from .mf import MFRouterModel
from .mlp import MLPRouterModel
from .random_router import RandomRouterModel
from .sw import SWConfig, SWRouterModel

FORMAT_VERSION = 1

_HEADER_KEYS = ("format_version", "router_kind", "embedding_dim", "seed", "checksum", "payload")


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))

def _payload_checksum(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def _payload_for(model) -> dict:
    if isinstance(model, SWRouterModel):
        return {
            "gamma": model.config.gamma,
            "steps": model.config.steps,
            "learning_rate": model.config.learning_rate,
            "embeddings": model.embeddings.tolist(),
            "targets": model.targets.tolist(),
        }
    if isinstance(model, KNNRouterModel):
        return {
            "k": model.k,
            "embeddings": model.embeddings.tolist(),
            "targets": model.targets.tolist(),
        }
    if isinstance(model, MFRouterModel):
        return {
            "projection": model.projection.tolist(),
            "vec_strong": model.vec_strong.tolist(),
            "vec_weak": model.vec_weak.tolist(),
            "bias_strong": model.bias_strong,
            "bias_weak": model.bias_weak,
        }
    if isinstance(model, MLPRouterModel):
        return {
            "w1": model.w1.tolist(),
            "b1": model.b1.tolist(),
            "w2": model.w2.tolist(),
            "b2": model.b2.tolist(),
        }
    if isinstance(model, RandomRouterModel):
        return {}
    raise ValidationError(f"cannot serialize model of type {type(model).__name__}")


def save_model(model, path: str | Path) -> str:
    """Write the artifact and return its payload checksum."""
    payload = _payload_for(model)
    checksum = _payload_checksum(payload)
    document = {
        "format_version": FORMAT_VERSION,
        "router_kind": model.kind.value,
        "embedding_dim": int(model.dim),
        "seed": int(model.seed),
        "checksum": checksum,
        "payload": payload,
    }
    Path(path).write_text(
        json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    return checksum


@dataclass(frozen=True)
class LoadedArtifact:
    model: object
    router_kind: RouterKind
    embedding_dim: int
    seed: int
    checksum: str


def _build_model(kind: RouterKind, payload: dict, seed: int):
    if kind is RouterKind.SW:
        return SWRouterModel(
            embeddings=np.asarray(payload["embeddings"], dtype=np.float64),
            targets=np.asarray(payload["targets"], dtype=np.float64),
            config=SWConfig(
                gamma=payload["gamma"],
                steps=payload["steps"],
                learning_rate=payload["learning_rate"],
            ),
            seed=seed,
        )
    if kind is RouterKind.KNN:
        return KNNRouterModel(
            embeddings=np.asarray(payload["embeddings"], dtype=np.float64),
            targets=np.asarray(payload["targets"], dtype=np.float64),
            k=payload["k"],
            seed=seed,
        )
    if kind is RouterKind.MF:
        return MFRouterModel(
            projection=np.asarray(payload["projection"], dtype=np.float64),
            vec_strong=np.asarray(payload["vec_strong"], dtype=np.float64),
            vec_weak=np.asarray(payload["vec_weak"], dtype=np.float64),
            bias_strong=payload["bias_strong"],
            bias_weak=payload["bias_weak"],
            seed=seed,
        )
    if kind is RouterKind.MLP:
        return MLPRouterModel(
            w1=np.asarray(payload["w1"], dtype=np.float64),
            b1=np.asarray(payload["b1"], dtype=np.float64),
            w2=np.asarray(payload["w2"], dtype=np.float64),
            b2=np.asarray(payload["b2"], dtype=np.float64),
            seed=seed,
        )
    return RandomRouterModel(seed=seed)


def load_artifact(path: str | Path) -> LoadedArtifact:
    """Parse, integrity-check and rebuild a saved router."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptArtifact(f"{path}: unreadable artifact: {exc}") from exc
    if not isinstance(document, dict) or any(k not in document for k in _HEADER_KEYS):
        raise CorruptArtifact(f"{path}: artifact header is incomplete")
    version = document["format_version"]
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(
            f"{path}: format version {version!r}, this build reads {FORMAT_VERSION}"
        )
    payload = document["payload"]
    if not isinstance(payload, dict):
        raise CorruptArtifact(f"{path}: payload is not an object")
    if _payload_checksum(payload) != document["checksum"]:
        raise CorruptArtifact(f"{path}: checksum mismatch")
    try:
        kind = RouterKind(document["router_kind"])
    except ValueError as exc:
        raise CorruptArtifact(f"{path}: unknown router kind {document['router_kind']!r}") from exc
    seed = int(document["seed"])
    try:
        model = _build_model(kind, payload, seed)
    except (KeyError, TypeError, ValidationError) as exc:
        raise CorruptArtifact(f"{path}: payload does not fit kind {kind.value!r}: {exc}") from exc
    return LoadedArtifact(
        model=model,
        router_kind=kind,
        embedding_dim=int(document["embedding_dim"]),
        seed=seed,
        checksum=document["checksum"],
    )


def load_model(path: str | Path):
    return load_artifact(path).model
