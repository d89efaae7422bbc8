"""Offline evaluation: threshold sweeps, cost-quality curves, judge scoring.

Benchmarks are fully recorded: every item carries both models' responses,
correctness flags and token counts, so a sweep replays routing decisions
without calling any live model. Costs are exact decimals.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._http import post_json
from .core import ModelPair, ModelRef
from .errors import (
    EmptyBenchmark,
    JudgeFailure,
    TargetUnreachable,
    UnparseableVerdict,
    ValidationError,
    ZeroTotal,
)

# The sweep's top threshold sits just above every probability so the
# all-weak endpoint always appears.
ABOVE_ONE = 1.0 + 1e-9


@dataclass(frozen=True)
class BenchmarkItem:
    """One recorded evaluation prompt with both models' responses.

    Token counts are (input, output) pairs observed when the responses
    were recorded; sweeps price them against the pair's rates.
    """

    id: str
    prompt: str
    reference_answer: str
    strong_response: str
    weak_response: str
    strong_correct: bool
    weak_correct: bool
    strong_tokens: tuple[int, int]
    weak_tokens: tuple[int, int]

    def __post_init__(self):
        if not self.id:
            raise ValidationError("benchmark item id must be non-empty")
        if not self.prompt.strip():
            raise ValidationError(f"benchmark item {self.id!r} has an empty prompt")
        for label, tokens in (("strong", self.strong_tokens), ("weak", self.weak_tokens)):
            pair = tuple(int(t) for t in tokens)
            if len(pair) != 2 or any(t < 0 for t in pair):
                raise ValidationError(
                    f"item {self.id!r} {label}_tokens must be two counts >= 0, got {tokens!r}"
                )
            object.__setattr__(self, f"{label}_tokens", pair)
        object.__setattr__(self, "strong_correct", bool(self.strong_correct))
        object.__setattr__(self, "weak_correct", bool(self.weak_correct))


def response_cost(tokens: tuple[int, int], model: ModelRef) -> Decimal:
    """Exact USD cost of one recorded response under a model's prices."""
    in_tokens, out_tokens = tokens
    return (
        model.price_per_input_token * in_tokens
        + model.price_per_output_token * out_tokens
    )


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    strong_fraction: float
    accuracy: float
    cost_usd: Decimal

    def __post_init__(self):
        if not (0.0 <= self.strong_fraction <= 1.0):
            raise ValidationError(f"strong_fraction must be in [0, 1], got {self.strong_fraction!r}")
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValidationError(f"accuracy must be in [0, 1], got {self.accuracy!r}")
        if not isinstance(self.cost_usd, Decimal) or self.cost_usd < 0:
            raise ValidationError(f"cost_usd must be a Decimal >= 0, got {self.cost_usd!r}")


@dataclass(frozen=True)
class CostQualityCurve:
    """Sweep output: one point per distinct routed fraction.

    Fractions increase strictly and the all-weak (0) and all-strong (1)
    endpoints are always present.
    """

    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValidationError("curve must have at least one point")
        fractions = [p.strong_fraction for p in self.points]
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValidationError("curve fractions must increase strictly")
        if fractions[0] != 0.0 or fractions[-1] != 1.0:
            raise ValidationError("curve must span fractions 0 and 1")

    @property
    def accuracy_weak(self) -> float:
        return self.points[0].accuracy

    @property
    def accuracy_strong(self) -> float:
        return self.points[-1].accuracy


def sweep(model, items: Sequence[BenchmarkItem], pair: ModelPair, embedder=None) -> CostQualityCurve:
    """Replay routing over a recorded benchmark at every useful threshold.

    Thresholds are the distinct predicted probabilities plus 0 and a value
    just above 1; an item goes to the strong model when its probability is
    at or above the threshold. Points that route the same fraction are
    deduplicated keeping the best accuracy.
    """
    if not items:
        raise EmptyBenchmark("cannot sweep an empty benchmark")
    n = len(items)
    probs = np.empty(n, dtype=np.float64)
    for i, item in enumerate(items):
        embedding = embedder.embed(item.prompt) if embedder is not None else None
        probs[i] = model.predict_win_prob(embedding, key=item.id)

    # Sort items by probability descending (ties by index) so the routed
    # set for any threshold is a prefix; prefix sums then price the whole
    # curve in one pass.
    order = np.argsort(-probs, kind="stable")
    strong_correct = [bool(items[i].strong_correct) for i in order]
    weak_correct = [bool(items[i].weak_correct) for i in order]
    strong_costs = [response_cost(items[i].strong_tokens, pair.strong) for i in order]
    weak_costs = [response_cost(items[i].weak_tokens, pair.weak) for i in order]

    strong_correct_prefix = [0] + list(np.cumsum(strong_correct))
    weak_correct_prefix = [0] + list(np.cumsum(weak_correct))
    strong_cost_prefix = [Decimal(0)]
    weak_cost_prefix = [Decimal(0)]
    for sc, wc in zip(strong_costs, weak_costs):
        strong_cost_prefix.append(strong_cost_prefix[-1] + sc)
        weak_cost_prefix.append(weak_cost_prefix[-1] + wc)

    thresholds = sorted(set(probs.tolist()) | {0.0, ABOVE_ONE})
    best_by_fraction: dict[float, CurvePoint] = {}
    for alpha in thresholds:
        m = int(np.count_nonzero(probs >= alpha))
        accuracy = (
            strong_correct_prefix[m] + weak_correct_prefix[n] - weak_correct_prefix[m]
        ) / n
        cost = strong_cost_prefix[m] + weak_cost_prefix[n] - weak_cost_prefix[m]
        point = CurvePoint(
            threshold=float(alpha),
            strong_fraction=m / n,
            accuracy=float(accuracy),
            cost_usd=cost,
        )
        current = best_by_fraction.get(point.strong_fraction)
        if current is None or point.accuracy > current.accuracy:
            best_by_fraction[point.strong_fraction] = point
    points = tuple(sorted(best_by_fraction.values(), key=lambda p: p.strong_fraction))
    return CostQualityCurve(points=points)


def cpt(
    curve: CostQualityCurve,
    x_percent: float,
    accuracy_weak: float,
    accuracy_strong: float,
    mode: str = "gap",
) -> float:
    """Smallest strong fraction whose interpolated accuracy reaches the
    x% quality target.

    mode "gap" (default): target recovers x% of the weak-to-strong
    accuracy gap. mode "relative": target is the weak accuracy scaled by
    (1 + x/100). The curve is read piecewise-linearly between points.
    """
    if not (0.0 < x_percent <= 100.0):
        raise ValidationError(f"x_percent must be in (0, 100], got {x_percent!r}")
    if not accuracy_strong > accuracy_weak:
        raise ValidationError(
            f"need accuracy_strong > accuracy_weak, got {accuracy_strong!r} vs {accuracy_weak!r}"
        )
    if mode == "gap":
        target = accuracy_weak + (x_percent / 100.0) * (accuracy_strong - accuracy_weak)
    elif mode == "relative":
        target = accuracy_weak * (1.0 + x_percent / 100.0)
    else:
        raise ValidationError(f"unknown cpt mode {mode!r}")

    points = curve.points
    if points[0].accuracy >= target:
        return points[0].strong_fraction
    for prev, nxt in zip(points, points[1:]):
        if nxt.accuracy >= target:
            # prev.accuracy < target <= nxt.accuracy: linear crossing.
            # min() trims float noise so the result never overshoots the
            # segment's right endpoint.
            ratio = (target - prev.accuracy) / (nxt.accuracy - prev.accuracy)
            crossing = prev.strong_fraction + ratio * (
                nxt.strong_fraction - prev.strong_fraction
            )
            return min(crossing, nxt.strong_fraction)
    raise TargetUnreachable(
        f"no point on the curve reaches target accuracy {target!r}"
    )


# ---------------------------------------------------------------------------
# curve and summary persistence
# ---------------------------------------------------------------------------

CURVE_FIELDS = ("threshold", "strong_fraction", "accuracy", "cost_usd")


def write_curve_csv(path: str | Path, curve: CostQualityCurve) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CURVE_FIELDS)
        for p in curve.points:
            writer.writerow(
                [repr(p.threshold), repr(p.strong_fraction), repr(p.accuracy), str(p.cost_usd)]
            )


def read_curve_csv(path: str | Path) -> CostQualityCurve:
    points = []
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CURVE_FIELDS:
            raise ValidationError(f"{path}: unexpected curve columns {reader.fieldnames!r}")
        for row in reader:
            points.append(
                CurvePoint(
                    threshold=float(row["threshold"]),
                    strong_fraction=float(row["strong_fraction"]),
                    accuracy=float(row["accuracy"]),
                    cost_usd=Decimal(row["cost_usd"]),
                )
            )
    return CostQualityCurve(points=tuple(points))


def curve_summary(curve: CostQualityCurve, mode: str = "gap") -> dict:
    """Headline numbers for one sweep: CPT(50), CPT(80) and the two
    endpoint costs."""
    return {
        "cpt50": cpt(curve, 50.0, curve.accuracy_weak, curve.accuracy_strong, mode=mode),
        "cpt80": cpt(curve, 80.0, curve.accuracy_weak, curve.accuracy_strong, mode=mode),
        "total_cost_all_strong": str(curve.points[-1].cost_usd),
        "total_cost_all_weak": str(curve.points[0].cost_usd),
    }


# ---------------------------------------------------------------------------
# benchmark persistence
# ---------------------------------------------------------------------------

_BENCH_FIELDS = (
    "id",
    "prompt",
    "reference_answer",
    "strong_response",
    "weak_response",
    "strong_correct",
    "weak_correct",
    "strong_tokens",
    "weak_tokens",
)


def write_benchmark_jsonl(path: str | Path, items: Iterable[BenchmarkItem]) -> None:
    lines = []
    for item in items:
        row = {
            "id": item.id,
            "prompt": item.prompt,
            "reference_answer": item.reference_answer,
            "strong_response": item.strong_response,
            "weak_response": item.weak_response,
            "strong_correct": item.strong_correct,
            "weak_correct": item.weak_correct,
            "strong_tokens": list(item.strong_tokens),
            "weak_tokens": list(item.weak_tokens),
        }
        lines.append(json.dumps(row, ensure_ascii=False, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_benchmark_jsonl(path: str | Path) -> list[BenchmarkItem]:
    items = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            row = json.loads(line)
            try:
                items.append(
                    BenchmarkItem(
                        id=row["id"],
                        prompt=row["prompt"],
                        reference_answer=row["reference_answer"],
                        strong_response=row["strong_response"],
                        weak_response=row["weak_response"],
                        strong_correct=row["strong_correct"],
                        weak_correct=row["weak_correct"],
                        strong_tokens=tuple(row["strong_tokens"]),
                        weak_tokens=tuple(row["weak_tokens"]),
                    )
                )
            except KeyError as exc:
                raise ValidationError(
                    f"{path}:{line_no} is missing field {exc.args[0]!r}"
                ) from exc
    return items


# ---------------------------------------------------------------------------
# answer matching
# ---------------------------------------------------------------------------

_PUNCT_RE = re.compile(r"[^\w\s]")
NUMERIC_TOLERANCE = 1e-6


def _normalize_answer(text: str) -> str:
    return " ".join(_PUNCT_RE.sub(" ", text.casefold()).split())


def normalized_answer_match(candidate: str, reference: str) -> bool:
    """Numeric answers compare within a small absolute tolerance; anything
    else matches exactly after case folding and punctuation stripping.

    The numeric attempt runs on the raw strings: the punctuation fold would
    eat decimal points and minus signs.
    """
    try:
        a = float(candidate.strip())
        b = float(reference.strip())
    except ValueError:
        a = b = None
    if a is not None and math.isfinite(a) and math.isfinite(b):
        return abs(a - b) <= NUMERIC_TOLERANCE
    return _normalize_answer(candidate) == _normalize_answer(reference)


# ---------------------------------------------------------------------------
# judge protocol
# ---------------------------------------------------------------------------

JUDGE_PROMPT_TEMPLATE = (
    "You are an evaluator for math problem solutions. You will receive:\n"
    "1. A question.\n"
    "2. A ground truth answer.\n"
    "3. Three LLM-generated responses.\n"
    "Your task is to select which response(s) is/are best, based on whether "
    "the answer is correct and the reasoning is precise.\n"
    "Follow these rules: \n"
    "* DO NOT provide any explanation or reasoning in your answer-only state "
    "which LLM(s) you judge as having the best response.\n"
    "* If more than one response is equally best, name each of them.\n"
    "Question: {}\n"
    "Ground Truth Answer:{}\n"
    "LLM 1 Response: {}\n"
    "LLM 2 Response: {}\n"
    "LLM 3 Response: {}\n"
    "Your output must ONLY indicate the selected LLM(s). For example, "
    "'LLM 1' or 'LLM 1 and LLM 3'."
)

MAX_JUDGE_CANDIDATES = 3
_EMPTY_SLOT = "N/A"

_VERDICT_SHAPE_RE = re.compile(
    r"llm\s*\d+(?:(?:\s*,\s*(?:and\s+)?|\s+and\s+)llm\s*\d+)*",
)
_VERDICT_SLOT_RE = re.compile(r"llm\s*(\d+)")


@dataclass(frozen=True)
class JudgeResult:
    """One judged query: which candidate labels were selected as best."""

    query_id: str
    selected: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "selected", frozenset(self.selected))
        if not self.selected:
            raise ValidationError("a judge result must select at least one label")


def render_judge_prompt(
    question: str,
    ground_truth: str,
    responses: Sequence[tuple[str, str]],
) -> str:
    """Fill the judge prompt's slots; unused response slots read N/A."""
    if not 1 <= len(responses) <= MAX_JUDGE_CANDIDATES:
        raise ValidationError(
            f"judge takes 1..{MAX_JUDGE_CANDIDATES} responses, got {len(responses)}"
        )
    texts = [text for _, text in responses]
    texts.extend([_EMPTY_SLOT] * (MAX_JUDGE_CANDIDATES - len(texts)))
    return JUDGE_PROMPT_TEMPLATE.format(question, ground_truth, *texts)


def parse_judge_verdict(reply: str, labels: Sequence[str]) -> frozenset[str]:
    """Map a judge reply onto candidate labels.

    Accepted forms: "LLM 1", "LLM 2 and LLM 3", "LLM 1, LLM 2 and LLM 3"
    (case-insensitive, comma/and separated, optional trailing period).
    Anything else, or a slot number outside the presented candidates,
    raises UnparseableVerdict.
    """
    normalized = reply.strip().casefold()
    if normalized.endswith("."):
        normalized = normalized[:-1].rstrip()
    if not _VERDICT_SHAPE_RE.fullmatch(normalized):
        raise UnparseableVerdict(f"cannot parse judge reply: {reply!r}")
    slots = [int(s) for s in _VERDICT_SLOT_RE.findall(normalized)]
    selected = set()
    for slot in slots:
        if not 1 <= slot <= len(labels):
            raise UnparseableVerdict(
                f"judge selected slot {slot}, but only {len(labels)} candidates were presented"
            )
        selected.add(labels[slot - 1])
    return frozenset(selected)


def judge_query(
    judge_client,
    query_id: str,
    question: str,
    ground_truth: str,
    responses: Sequence[tuple[str, str]],
) -> JudgeResult:
    """Ask the judge to pick the best response(s) for one query."""
    rendered = render_judge_prompt(question, ground_truth, responses)
    content = judge_client.complete([{"role": "system", "content": rendered}])
    labels = [label for label, _ in responses]
    return JudgeResult(query_id=query_id, selected=parse_judge_verdict(content, labels))


def judge_items(
    judge_client,
    entries: Iterable[tuple[str, str, str, Sequence[tuple[str, str]]]],
) -> tuple[list[JudgeResult], int]:
    """Judge many queries; unparseable verdicts count as abstentions.

    entries: (query_id, question, ground_truth, [(label, text), ...]).
    Returns (results, abstained_count). Transport failures propagate.
    """
    results = []
    abstained = 0
    for query_id, question, ground_truth, responses in entries:
        try:
            results.append(
                judge_query(judge_client, query_id, question, ground_truth, responses)
            )
        except UnparseableVerdict:
            abstained += 1
    return results, abstained


def judge_score(results: Sequence[JudgeResult], label: str, total: int) -> float:
    """Percent of judged queries whose selection includes `label`."""
    if total <= 0:
        raise ZeroTotal("judge score needs at least one judged query")
    selected = sum(1 for r in results if label in r.selected)
    return selected / total * 100.0


@dataclass(frozen=True)
class RemoteJudge:
    """Client for a judge endpoint speaking chat-completion shapes:
    POST {"messages": [{"role", "content"}, ...]} -> {"content": str}."""

    endpoint: str
    timeout: float = 30.0
    retries: int = 2

    def complete(self, messages: list[dict]) -> str:
        try:
            reply = post_json(
                self.endpoint,
                {"messages": messages},
                timeout=self.timeout,
                retries=self.retries,
            )
        except Exception as exc:
            raise JudgeFailure(f"judge endpoint {self.endpoint}: {exc}") from exc
        content = reply.get("content") if isinstance(reply, dict) else None
        if not isinstance(content, str):
            raise JudgeFailure("judge endpoint returned no 'content' string")
        return content


_MOCK_JUDGE_RE = re.compile(
    r"Question: (.*?)\nGround Truth Answer:(.*?)\n"
    r"LLM 1 Response: (.*?)\nLLM 2 Response: (.*?)\nLLM 3 Response: (.*?)\n"
    r"Your output",
    re.DOTALL,
)


def _format_selection(slots: Sequence[int]) -> str:
    parts = [f"LLM {s}" for s in slots]
    if len(parts) == 1:
        return parts[0]
    if len(parts) == 2:
        return f"{parts[0]} and {parts[1]}"
    return ", ".join(parts[:-1]) + f" and {parts[-1]}"


class MockJudge:
    """Deterministic judge: selects the responses matching the ground
    truth, or every presented response when none match. Replies in the
    same textual forms a live judge is expected to use."""

    def complete(self, messages: list[dict]) -> str:
        rendered = messages[-1]["content"]
        match = _MOCK_JUDGE_RE.search(rendered)
        if match is None:
            raise JudgeFailure("mock judge could not parse the rendered prompt")
        ground_truth = match.group(2)
        responses = [match.group(3), match.group(4), match.group(5)]
        presented = [i + 1 for i, text in enumerate(responses) if text != _EMPTY_SLOT]
        winners = [
            slot
            for slot in presented
            if normalized_answer_match(responses[slot - 1], ground_truth)
        ]
        return _format_selection(winners or presented)
