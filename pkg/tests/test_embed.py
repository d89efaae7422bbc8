import math

import numpy as np
import pytest

from seroute.embed import (
    MOCK_EMBEDDING_DIM,
    EmbeddingVector,
    MockEmbedder,
    RemoteEmbedder,
    cosine,
    read_embedding_store,
    write_embedding_store,
)
from seroute.errors import (
    DimensionMismatch,
    EmptyInput,
    ProviderFailure,
    ValidationError,
    ZeroVector,
)


class TestEmbeddingVector:
    def test_rejects_empty_and_non_finite(self):
        with pytest.raises(ValidationError):
            EmbeddingVector(np.array([]))
        with pytest.raises(ValidationError):
            EmbeddingVector(np.array([[1.0, 2.0]]))
        with pytest.raises(ValidationError):
            EmbeddingVector(np.array([1.0, float("nan")]))
        with pytest.raises(ValidationError):
            EmbeddingVector(np.array([float("inf")]))

    def test_array_is_read_only(self):
        vec = EmbeddingVector(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            vec.values[0] = 9.0
        assert vec.dim == 2
        assert vec.tolist() == [1.0, 2.0]


class TestCosine:
    def test_known_values(self):
        a = EmbeddingVector(np.array([1.0, 0.0]))
        b = EmbeddingVector(np.array([0.0, 1.0]))
        assert cosine(a, a) == 1.0
        assert cosine(a, b) == 0.0
        c = EmbeddingVector(np.array([-1.0, 0.0]))
        assert cosine(a, c) == -1.0

    def test_clamped_to_unit_interval(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a = EmbeddingVector(rng.normal(size=16))
            b = EmbeddingVector(rng.normal(size=16))
            value = cosine(a, b)
            assert -1.0 <= value <= 1.0

    def test_zero_vector_rejected(self):
        a = EmbeddingVector(np.array([0.0, 0.0]))
        b = EmbeddingVector(np.array([1.0, 1.0]))
        with pytest.raises(ZeroVector):
            cosine(a, b)

    def test_dim_mismatch_rejected(self):
        a = EmbeddingVector(np.array([1.0, 2.0]))
        b = EmbeddingVector(np.array([1.0, 2.0, 3.0]))
        with pytest.raises(DimensionMismatch):
            cosine(a, b)


class TestMockEmbedder:
    def test_deterministic_and_unit_norm(self):
        embedder = MockEmbedder()
        first = embedder.embed("what is the capital of veloria")
        second = embedder.embed("what is the capital of veloria")
        assert np.array_equal(first.values, second.values)
        assert first.dim == MOCK_EMBEDDING_DIM
        assert math.isclose(float(np.linalg.norm(first.values)), 1.0, abs_tol=1e-12)

    def test_case_and_punctuation_folded(self):
        embedder = MockEmbedder(dim=64)
        plain = embedder.embed("alpha beta gamma")
        shouty = embedder.embed("Alpha, BETA;  gamma!")
        assert np.array_equal(plain.values, shouty.values)

    def test_word_order_matters(self):
        # Bigram features distinguish permutations of the same word set.
        embedder = MockEmbedder(dim=256)
        forward = embedder.embed("alpha beta gamma")
        backward = embedder.embed("gamma beta alpha")
        assert not np.array_equal(forward.values, backward.values)

    def test_configurable_dim(self):
        assert MockEmbedder(dim=32).embed("some words here").dim == 32
        with pytest.raises(ValidationError):
            MockEmbedder(dim=0)

    def test_empty_text_rejected(self):
        with pytest.raises(EmptyInput):
            MockEmbedder().embed("   !!!   ")

    def test_similar_texts_score_higher(self):
        embedder = MockEmbedder()
        base = embedder.embed("how many apples are in the crate")
        near = embedder.embed("how many apples are in the basket")
        far = embedder.embed("name the capital city of the province")
        assert cosine(base, near) > cosine(base, far)


class TestStore:
    def test_round_trip(self, tmp_path):
        embedder = MockEmbedder(dim=16)
        entries = [(f"q{i}", embedder.embed(f"question number {i}")) for i in range(5)]
        path = tmp_path / "store.jsonl"
        write_embedding_store(path, entries, dim=16, provider="mock")
        vectors, dim, provider = read_embedding_store(path)
        assert dim == 16
        assert provider == "mock"
        assert set(vectors) == {f"q{i}" for i in range(5)}
        for record_id, vector in entries:
            assert np.array_equal(vectors[record_id].values, vector.values)

    def test_duplicate_id_rejected(self, tmp_path):
        vec = MockEmbedder(dim=8).embed("hello there")
        with pytest.raises(ValidationError, match="duplicate"):
            write_embedding_store(
                tmp_path / "store.jsonl",
                [("q1", vec), ("q1", vec)],
                dim=8,
                provider="mock",
            )

    def test_row_dim_mismatch_rejected(self, tmp_path):
        vec = MockEmbedder(dim=8).embed("hello there")
        with pytest.raises(DimensionMismatch):
            write_embedding_store(
                tmp_path / "store.jsonl", [("q1", vec)], dim=4, provider="mock"
            )

    def test_read_checks_rows_against_header(self, tmp_path):
        path = tmp_path / "store.jsonl"
        path.write_text(
            '{"dim": 3, "provider": "mock"}\n'
            '{"id": "q1", "embedding": [1.0, 2.0]}\n',
            encoding="utf-8",
        )
        with pytest.raises(DimensionMismatch):
            read_embedding_store(path)


class TestRemoteEmbedder:
    def test_success_payload(self, monkeypatch):
        calls = []

        def fake_post(url, payload, *, timeout, retries):
            calls.append((url, payload, timeout, retries))
            return {"embedding": [3.0, 4.0]}

        monkeypatch.setattr("seroute.embed.post_json", fake_post)
        embedder = RemoteEmbedder(endpoint="http://embed.test/v1", timeout=5.0)
        vector = embedder.embed("some text")
        assert vector.tolist() == [3.0, 4.0]
        assert calls == [("http://embed.test/v1", {"input": "some text"}, 5.0, 2)]

    def test_transport_error_wrapped(self, monkeypatch):
        def fake_post(url, payload, *, timeout, retries):
            raise OSError("connection refused")

        monkeypatch.setattr("seroute.embed.post_json", fake_post)
        with pytest.raises(ProviderFailure):
            RemoteEmbedder(endpoint="http://embed.test/v1").embed("some text")

    def test_malformed_reply_wrapped(self, monkeypatch):
        monkeypatch.setattr(
            "seroute.embed.post_json", lambda *a, **k: {"embedding": []}
        )
        with pytest.raises(ProviderFailure):
            RemoteEmbedder(endpoint="http://embed.test/v1").embed("some text")

    def test_expected_dim_enforced(self, monkeypatch):
        monkeypatch.setattr(
            "seroute.embed.post_json", lambda *a, **k: {"embedding": [1.0, 2.0]}
        )
        embedder = RemoteEmbedder(endpoint="http://embed.test/v1", expected_dim=3)
        with pytest.raises(DimensionMismatch):
            embedder.embed("some text")

    def test_empty_text_rejected(self):
        with pytest.raises(EmptyInput):
            RemoteEmbedder(endpoint="http://embed.test/v1").embed("  ")
