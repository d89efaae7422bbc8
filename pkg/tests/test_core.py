from decimal import Decimal

import pytest

from seroute.core import (
    GenerationSample,
    ModelPair,
    ModelRef,
    Query,
    RouterKind,
    RoutingDecision,
    Tier,
    validate_model_pair,
)
from seroute.errors import DuplicateId, TierMismatch, ValidationError


def _ref(model_id="m", tier=Tier.STRONG, p_in="0.001", p_out="0.002") -> ModelRef:
    return ModelRef(
        id=model_id, tier=tier, price_per_input_token=p_in, price_per_output_token=p_out
    )


class TestPrices:
    def test_string_price_is_exact(self):
        ref = _ref(p_in="0.00003")
        assert ref.price_per_input_token == Decimal("0.00003")
        assert ref.price_per_input_token * 3 == Decimal("0.00009")

    def test_int_price_accepted(self):
        assert _ref(p_in=2).price_per_input_token == Decimal(2)

    def test_decimal_price_passes_through(self):
        assert _ref(p_in=Decimal("0.5")).price_per_input_token == Decimal("0.5")

    def test_float_price_rejected(self):
        with pytest.raises(ValidationError, match="float"):
            _ref(p_in=0.00003)

    def test_negative_price_rejected(self):
        with pytest.raises(ValidationError):
            _ref(p_out="-1")

    def test_non_numeric_price_rejected(self):
        with pytest.raises(ValidationError):
            _ref(p_in="three dollars")

    def test_nan_price_rejected(self):
        with pytest.raises(ValidationError):
            _ref(p_in="NaN")


class TestModelPair:
    def test_valid_pair(self, pair):
        assert pair.strong.tier is Tier.STRONG
        assert pair.by_id("weak-edge") is pair.weak
        assert pair.by_id("strong-cloud") is pair.strong

    def test_by_id_unknown(self, pair):
        with pytest.raises(ValidationError):
            pair.by_id("other")

    def test_tier_mismatch(self):
        with pytest.raises(TierMismatch):
            ModelPair(strong=_ref("a", Tier.WEAK), weak=_ref("b", Tier.WEAK))
        with pytest.raises(TierMismatch):
            validate_model_pair(_ref("a", Tier.STRONG), _ref("b", Tier.STRONG))

    def test_duplicate_id(self):
        with pytest.raises(DuplicateId):
            ModelPair(strong=_ref("same", Tier.STRONG), weak=_ref("same", Tier.WEAK))

    def test_empty_id(self):
        with pytest.raises(ValidationError):
            _ref("  ")


class TestQuery:
    def test_valid(self):
        q = Query(id="q1", prompt="what is up")
        assert q.embedding is None

    def test_empty_prompt(self):
        with pytest.raises(ValidationError):
            Query(id="q1", prompt="   ")

    def test_empty_id(self):
        with pytest.raises(ValidationError):
            Query(id="", prompt="hello")


class TestGenerationSample:
    def test_valid(self):
        s = GenerationSample(text="x", seq_logprob=-1.5, token_count=3)
        assert s.seq_logprob == -1.5

    def test_zero_logprob_allowed(self):
        GenerationSample(text="x", seq_logprob=0.0, token_count=1)

    def test_positive_logprob_rejected(self):
        with pytest.raises(ValidationError):
            GenerationSample(text="x", seq_logprob=0.1, token_count=1)

    def test_nan_and_inf_rejected(self):
        with pytest.raises(ValidationError):
            GenerationSample(text="x", seq_logprob=float("nan"), token_count=1)
        with pytest.raises(ValidationError):
            GenerationSample(text="x", seq_logprob=float("-inf"), token_count=1)

    def test_token_count_bounds(self):
        with pytest.raises(ValidationError):
            GenerationSample(text="x", seq_logprob=-1.0, token_count=0)


class TestRoutingDecision:
    def test_threshold_rule_inclusive(self, pair):
        d = RoutingDecision(
            query_id="q",
            chosen=pair.strong.id,
            p_win_strong=0.5,
            threshold=0.5,
            router_kind=RouterKind.KNN,
        )
        assert d.consistent_with(pair)

    def test_inconsistent_decision_detected(self, pair):
        d = RoutingDecision(
            query_id="q",
            chosen=pair.weak.id,
            p_win_strong=0.9,
            threshold=0.5,
            router_kind=RouterKind.KNN,
        )
        assert not d.consistent_with(pair)

    def test_probability_bounds(self):
        with pytest.raises(ValidationError):
            RoutingDecision(
                query_id="q",
                chosen="m",
                p_win_strong=1.2,
                threshold=0.5,
                router_kind=RouterKind.SW,
            )

    def test_threshold_allows_just_above_one(self):
        RoutingDecision(
            query_id="q",
            chosen="m",
            p_win_strong=0.0,
            threshold=1.0 + 1e-9,
            router_kind=RouterKind.SW,
        )
        with pytest.raises(ValidationError):
            RoutingDecision(
                query_id="q",
                chosen="m",
                p_win_strong=0.0,
                threshold=1.1,
                router_kind=RouterKind.SW,
            )
