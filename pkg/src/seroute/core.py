"""Shared domain types: models, queries, samples, routing decisions.

All types here are immutable and validate on construction. Prices are
exact decimals; float prices are rejected so cost totals never accumulate
binary rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum

from .embed import EmbeddingVector
from .errors import DuplicateId, TierMismatch, ValidationError


class Tier(Enum):
    STRONG = "strong"
    WEAK = "weak"


class RouterKind(Enum):
    SW = "sw"
    MF = "mf"
    MLP = "mlp"
    KNN = "knn"
    RANDOM = "random"


def _as_price(label: str, value: Decimal | int | str) -> Decimal:
    if isinstance(value, float):
        raise ValidationError(
            f"{label} must be a Decimal, int or str, not float (inexact)"
        )
    try:
        price = value if isinstance(value, Decimal) else Decimal(value)
    except InvalidOperation as exc:
        raise ValidationError(f"{label} is not a valid decimal: {value!r}") from exc
    if not price.is_finite() or price < 0:
        raise ValidationError(f"{label} must be finite and >= 0, got {value!r}")
    return price


@dataclass(frozen=True)
class ModelRef:
    """One routable model plus its per-token pricing.

    Attributes:
        id: unique model identifier.
        tier: whether this is the strong or the weak model of a pair.
        price_per_input_token: USD per prompt token, exact decimal.
        price_per_output_token: USD per completion token, exact decimal.
    """

    id: str
    tier: Tier
    price_per_input_token: Decimal
    price_per_output_token: Decimal

    def __post_init__(self):
        if not self.id or not self.id.strip():
            raise ValidationError("model id must be non-empty")
        if not isinstance(self.tier, Tier):
            raise ValidationError(f"tier must be a Tier, got {self.tier!r}")
        object.__setattr__(
            self,
            "price_per_input_token",
            _as_price("price_per_input_token", self.price_per_input_token),
        )
        object.__setattr__(
            self,
            "price_per_output_token",
            _as_price("price_per_output_token", self.price_per_output_token),
        )


@dataclass(frozen=True)
class ModelPair:
    """A validated (strong, weak) pair with distinct ids."""

    strong: ModelRef
    weak: ModelRef

    def __post_init__(self):
        if self.strong.tier is not Tier.STRONG or self.weak.tier is not Tier.WEAK:
            raise TierMismatch(
                f"pair tiers must be (strong, weak), got "
                f"({self.strong.tier.value}, {self.weak.tier.value})"
            )
        if self.strong.id == self.weak.id:
            raise DuplicateId(f"pair models share id {self.strong.id!r}")

    def by_id(self, model_id: str) -> ModelRef:
        if model_id == self.strong.id:
            return self.strong
        if model_id == self.weak.id:
            return self.weak
        raise ValidationError(f"model id {model_id!r} is not in this pair")


def validate_model_pair(strong: ModelRef, weak: ModelRef) -> ModelPair:
    """Check tiers and id distinctness, returning the validated pair."""
    return ModelPair(strong=strong, weak=weak)


@dataclass(frozen=True)
class Query:
    """A routable prompt, optionally carrying a precomputed embedding."""

    id: str
    prompt: str
    embedding: EmbeddingVector | None = None

    def __post_init__(self):
        if not self.id or not self.id.strip():
            raise ValidationError("query id must be non-empty")
        if not self.prompt.strip():
            raise ValidationError(f"query {self.id!r} has an empty prompt")


@dataclass(frozen=True)
class GenerationSample:
    """One sampled generation with its sequence log-probability.

    seq_logprob is the total log-probability of the sampled token sequence
    (natural log), so it must be finite and <= 0; token_count >= 1.
    """

    text: str
    seq_logprob: float
    token_count: int

    def __post_init__(self):
        lp = float(self.seq_logprob)
        if lp != lp or lp in (float("inf"), float("-inf")) or lp > 0.0:
            raise ValidationError(f"seq_logprob must be finite and <= 0, got {self.seq_logprob!r}")
        object.__setattr__(self, "seq_logprob", lp)
        if not isinstance(self.token_count, int) or self.token_count < 1:
            raise ValidationError(f"token_count must be an int >= 1, got {self.token_count!r}")


@dataclass(frozen=True)
class RoutingDecision:
    """Outcome of routing one query between the pair's two models.

    For every router kind except RANDOM the choice must follow the
    threshold rule: strong if and only if p_win_strong >= threshold. Use
    `consistent_with` to check a decision against its pair.
    """

    query_id: str
    chosen: str
    p_win_strong: float
    threshold: float
    router_kind: RouterKind

    def __post_init__(self):
        if not isinstance(self.router_kind, RouterKind):
            raise ValidationError(f"router_kind must be a RouterKind, got {self.router_kind!r}")
        if not (0.0 <= self.p_win_strong <= 1.0):
            raise ValidationError(f"p_win_strong must be in [0, 1], got {self.p_win_strong!r}")
        if not (0.0 <= self.threshold <= 1.0 + 1e-9):
            raise ValidationError(f"threshold must be in [0, 1], got {self.threshold!r}")
        if not self.chosen:
            raise ValidationError("chosen model id must be non-empty")

    def consistent_with(self, pair: ModelPair) -> bool:
        expected = pair.strong.id if self.p_win_strong >= self.threshold else pair.weak.id
        return self.chosen == expected
