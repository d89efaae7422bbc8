"""Semantic-uncertainty scoring over sampled generations.

Samples are grouped into meaning clusters by a bidirectional entailment
check, each cluster receives the probability mass of its members, and the
score is the negative mean log mass across clusters, in nats. Zero means
every sample landed in one cluster; K equally likely clusters score ln K.

Note the mean is taken over clusters, not weighted by cluster probability,
so the score is not a standard entropy. That averaging is intentional and
pinned by tests; do not "fix" it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Protocol

from ._http import post_json
from .core import GenerationSample
from .errors import EmptyInput, OracleFailure, ValidationError

MASS_SUM_TOLERANCE = 1e-9

_NLI_LABELS = {"entailment", "neutral", "contradiction"}
_TOKEN_RE = re.compile(r"[0-9a-z]+")


@dataclass(frozen=True)
class EntailmentVerdict:
    """Directional entailment between two texts.

    forward: the first text entails the second.
    backward: the second text entails the first.
    """

    forward: bool
    backward: bool

    @property
    def equivalent(self) -> bool:
        """True when entailment holds in both directions."""
        return self.forward and self.backward


class EntailmentOracle(Protocol):
    def check(self, a: str, b: str) -> EntailmentVerdict: ...


@dataclass(frozen=True)
class SemanticCluster:
    """A group of samples judged mutually equivalent.

    The representative is the first member; later samples joined the
    cluster by comparing against it.
    """

    members: tuple[GenerationSample, ...]
    prob_mass: float

    def __post_init__(self):
        if not self.members:
            raise ValidationError("cluster must have at least one member")
        if not (0.0 < self.prob_mass <= 1.0 + MASS_SUM_TOLERANCE):
            raise ValidationError(f"cluster prob_mass must be in (0, 1], got {self.prob_mass!r}")

    @property
    def representative(self) -> GenerationSample:
        return self.members[0]


@dataclass(frozen=True)
class SemanticClustering:
    """A partition of one query's samples into meaning clusters."""

    query_id: str
    clusters: tuple[SemanticCluster, ...]

    def __post_init__(self):
        if not self.clusters:
            raise ValidationError("clustering must have at least one cluster")
        total = math.fsum(c.prob_mass for c in self.clusters)
        if abs(total - 1.0) > MASS_SUM_TOLERANCE:
            raise ValidationError(f"cluster masses sum to {total!r}, expected 1")

    @property
    def num_samples(self) -> int:
        return sum(len(c.members) for c in self.clusters)


@dataclass(frozen=True)
class SEScore:
    """A semantic-uncertainty score with its supporting counts."""

    value: float
    num_clusters: int
    num_samples: int

    def __post_init__(self):
        if self.num_clusters < 1 or self.num_samples < self.num_clusters:
            raise ValidationError(
                f"bad counts: {self.num_clusters} clusters over {self.num_samples} samples"
            )
        if not math.isfinite(self.value) or self.value < 0.0:
            raise ValidationError(f"score must be finite and >= 0, got {self.value!r}")
        if (self.value == 0.0) != (self.num_clusters == 1):
            raise ValidationError(
                f"score {self.value!r} inconsistent with {self.num_clusters} clusters"
            )


def normalize_sample_probs(
    samples: Iterable[GenerationSample],
) -> list[tuple[GenerationSample, float]]:
    """Length-normalize each sample's log-probability and renormalize.

    Each sample's weight is exp(seq_logprob / token_count); the weights are
    scaled to sum to one. Input order is preserved.
    """
    items = list(samples)
    if not items:
        raise EmptyInput("cannot normalize an empty sample list")
    length_norm = [s.seq_logprob / s.token_count for s in items]
    # Shift by the max before exponentiating; the shift cancels in the ratio.
    shift = max(length_norm)
    weights = [math.exp(lp - shift) for lp in length_norm]
    total = math.fsum(weights)
    return [(s, w / total) for s, w in zip(items, weights)]


def cluster_by_entailment(
    samples: Iterable[GenerationSample],
    oracle: EntailmentOracle,
    *,
    query_id: str = "",
) -> SemanticClustering:
    """Greedy meaning clustering.

    The first sample opens cluster one. Each later sample is checked
    against the representative of every existing cluster in creation order
    and joins the first cluster whose representative it is bidirectionally
    equivalent to; otherwise it opens a new cluster. Oracle failures abort
    the whole clustering, never producing partial output.
    """
    weighted = normalize_sample_probs(samples)
    groups: list[list[int]] = []
    representatives: list[str] = []
    for idx, (sample, _) in enumerate(weighted):
        for group, rep_text in zip(groups, representatives):
            if oracle.check(sample.text, rep_text).equivalent:
                group.append(idx)
                break
        else:
            groups.append([idx])
            representatives.append(sample.text)
    raw_masses = [math.fsum(weighted[i][1] for i in group) for group in groups]
    total = math.fsum(raw_masses)
    clusters = tuple(
        SemanticCluster(
            members=tuple(weighted[i][0] for i in group),
            prob_mass=mass / total,
        )
        for group, mass in zip(groups, raw_masses)
    )
    return SemanticClustering(query_id=query_id, clusters=clusters)


def semantic_entropy(clustering: SemanticClustering) -> SEScore:
    """Negative mean log cluster mass, in nats.

    One cluster scores exactly zero; K equally likely clusters score ln K.
    """
    logs = [math.log(c.prob_mass) for c in clustering.clusters]
    value = -math.fsum(logs) / len(logs)
    if value <= 0.0:
        value = 0.0
    return SEScore(
        value=value,
        num_clusters=len(logs),
        num_samples=clustering.num_samples,
    )


def _token_set(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.casefold()))


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def _require_nonempty(a: str, b: str) -> None:
    if not a.strip() or not b.strip():
        raise ValidationError("entailment requires two non-empty texts")


@dataclass(frozen=True)
class MockEntailmentOracle:
    """Deterministic lexical stand-in for an NLI service.

    Directional rule: a premise entails a hypothesis when their token
    overlap (Jaccard over case-folded, punctuation-stripped tokens)
    exceeds `overlap_threshold`, or when every premise token also occurs
    in the hypothesis. Cheap and reproducible; not a semantic judgment.
    """

    overlap_threshold: float = 0.6

    def check(self, a: str, b: str) -> EntailmentVerdict:
        _require_nonempty(a, b)
        tokens_a = _token_set(a)
        tokens_b = _token_set(b)
        overlap = _jaccard(tokens_a, tokens_b)
        return EntailmentVerdict(
            forward=overlap > self.overlap_threshold or tokens_a <= tokens_b,
            backward=overlap > self.overlap_threshold or tokens_b <= tokens_a,
        )


@dataclass(frozen=True)
class RemoteEntailmentOracle:
    """Client for an NLI endpoint.

    Wire protocol: POST {"premise": str, "hypothesis": str} and receive
    {"label": "entailment" | "neutral" | "contradiction"}. Each check makes
    two calls, one per direction; only the label "entailment" counts.
    """

    endpoint: str
    timeout: float = 10.0
    retries: int = 2

    def check(self, a: str, b: str) -> EntailmentVerdict:
        _require_nonempty(a, b)
        return EntailmentVerdict(
            forward=self._entails(a, b),
            backward=self._entails(b, a),
        )

    def _entails(self, premise: str, hypothesis: str) -> bool:
        try:
            reply = post_json(
                self.endpoint,
                {"premise": premise, "hypothesis": hypothesis},
                timeout=self.timeout,
                retries=self.retries,
            )
        except Exception as exc:
            raise OracleFailure(f"entailment endpoint {self.endpoint}: {exc}") from exc
        label = reply.get("label") if isinstance(reply, dict) else None
        if label not in _NLI_LABELS:
            raise OracleFailure(f"unexpected entailment label: {label!r}")
        return label == "entailment"
