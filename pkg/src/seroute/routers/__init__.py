"""Routing models over query embeddings.

Four architectures plus a seeded random baseline, all exposing
`predict_win_prob(embedding, key="") -> float` in [0, 1]:

- sw:  similarity-weighted pairwise fit run per query at prediction time
- mf:  latent-factor scores trained by gradient descent
- mlp: two-layer perceptron with a three-way softmax head
- knn: strong-win fraction among the k nearest training records
- random: uniform draw keyed by (seed, query key)

Models persist to versioned, checksummed artifacts via `save_model` and
`load_model`.
"""

from __future__ import annotations

from ..core import ModelPair, RouterKind, RoutingDecision
from .artifact import LoadedArtifact, load_artifact, load_model, save_model
from .base import TrainingSet, record_target
from .knn import DEFAULT_K, KNNRouterModel, knn_train
from .mf import MFConfig, MFRouterModel, mf_train
from .mlp import MLPConfig, MLPRouterModel, loss_and_grads, mlp_train
from .random_router import RandomRouterModel
from .sw import SWConfig, SWRouterModel, sw_train

__all__ = [
    "DEFAULT_K",
    "KNNRouterModel",
    "LoadedArtifact",
    "MFConfig",
    "MFRouterModel",
    "MLPConfig",
    "MLPRouterModel",
    "RandomRouterModel",
    "SWConfig",
    "SWRouterModel",
    "TrainingSet",
    "decide",
    "knn_train",
    "load_artifact",
    "load_model",
    "loss_and_grads",
    "mf_train",
    "mlp_train",
    "record_target",
    "save_model",
    "sw_train",
]


def decide(model, pair: ModelPair, threshold: float, embedding=None, key: str = "") -> RoutingDecision:
    """Route one query: strong if and only if the win probability reaches
    the threshold. The random baseline routes on its keyed draw the same
    way."""
    p = float(model.predict_win_prob(embedding, key=key))
    chosen = pair.strong.id if p >= threshold else pair.weak.id
    return RoutingDecision(
        query_id=key,
        chosen=chosen,
        p_win_strong=p,
        threshold=threshold,
        router_kind=model.kind,
    )
