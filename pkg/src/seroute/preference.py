"""Pairwise preference labels derived from per-model uncertainty scores.

For each prompt the two models' uncertainty scores are compared; when the
relative difference clears a threshold the less-uncertain model wins,
otherwise the comparison is a tie. Records keep fixed slots: model_a is
always the strong model, model_b always the weak one.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .core import ModelRef, Query
from .errors import DegenerateDenominator, EmptyInput, ValidationError
from .uncertainty import SEScore

logger = logging.getLogger(__name__)

# Strong-model scores at or below this are too small to divide by; the
# comparison degenerates to a tie.
DEGENERATE_SE_EPSILON = 1e-9

DEFAULT_TAU = 0.1

RECORD_FIELDS = (
    "id",
    "model_a",
    "model_b",
    "prompt",
    "response_a",
    "response_b",
    "winner_model_a",
    "winner_model_b",
    "winner_tie",
)


class Winner(Enum):
    STRONG = "strong"
    WEAK = "weak"
    TIE = "tie"


@dataclass(frozen=True)
class SEPair:
    """Both models' uncertainty scores and responses for one query."""

    query: Query
    se_strong: SEScore
    se_weak: SEScore
    response_strong: str
    response_weak: str


def normalized_se_delta(pair: SEPair) -> float:
    """Relative uncertainty gap |(strong - weak) / strong|.

    Raises DegenerateDenominator when the strong score is too close to
    zero to divide by.
    """
    strong = pair.se_strong.value
    if strong <= DEGENERATE_SE_EPSILON:
        raise DegenerateDenominator(
            f"strong SE {strong!r} for query {pair.query.id!r} is below "
            f"{DEGENERATE_SE_EPSILON}"
        )
    return abs((strong - pair.se_weak.value) / strong)


def decide_winner(pair: SEPair, tau: float = DEFAULT_TAU) -> Winner:
    """Winner rule: the less-uncertain model wins when the relative gap
    exceeds tau; otherwise it is a tie. A degenerate strong score (too
    small to normalize by) also yields a tie.
    """
    if not tau > 0.0:
        raise ValidationError(f"tau must be > 0, got {tau!r}")
    try:
        delta = normalized_se_delta(pair)
    except DegenerateDenominator:
        return Winner.TIE
    if delta > tau:
        return Winner.STRONG if pair.se_strong.value < pair.se_weak.value else Winner.WEAK
    return Winner.TIE


@dataclass(frozen=True)
class PreferenceRecord:
    """One labeled comparison; exactly one winner flag is set.

    model_a is the strong slot and model_b the weak slot by construction.
    """

    id: str
    model_a: str
    model_b: str
    prompt: str
    response_a: str
    response_b: str
    winner_model_a: int
    winner_model_b: int
    winner_tie: int

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be non-empty")
        if not self.model_a or not self.model_b or self.model_a == self.model_b:
            raise ValidationError(f"record {self.id!r} needs two distinct model ids")
        flags = (self.winner_model_a, self.winner_model_b, self.winner_tie)
        if any(f not in (0, 1) for f in flags) or sum(flags) != 1:
            raise ValidationError(
                f"record {self.id!r} must set exactly one winner flag, got {flags}"
            )

    @property
    def winner(self) -> Winner:
        if self.winner_model_a:
            return Winner.STRONG
        if self.winner_model_b:
            return Winner.WEAK
        return Winner.TIE

    def to_dict(self) -> dict:
        return {field: getattr(self, field) for field in RECORD_FIELDS}


def build_dataset(
    pairs: Sequence[SEPair],
    tau: float,
    strong: ModelRef,
    weak: ModelRef,
) -> list[PreferenceRecord]:
    """Label every query pair and assemble the preference records."""
    if not pairs:
        raise EmptyInput("cannot build a dataset from zero pairs")
    records = []
    degenerate = 0
    for pair in pairs:
        if pair.se_strong.value <= DEGENERATE_SE_EPSILON:
            degenerate += 1
        winner = decide_winner(pair, tau)
        records.append(
            PreferenceRecord(
                id=pair.query.id,
                model_a=strong.id,
                model_b=weak.id,
                prompt=pair.query.prompt,
                response_a=pair.response_strong,
                response_b=pair.response_weak,
                winner_model_a=int(winner is Winner.STRONG),
                winner_model_b=int(winner is Winner.WEAK),
                winner_tie=int(winner is Winner.TIE),
            )
        )
    if degenerate:
        logger.info(
            "build_dataset: %d of %d comparisons had a degenerate strong score "
            "and were recorded as ties",
            degenerate,
            len(pairs),
        )
    return records


def write_preference_jsonl(path: str | Path, records: Iterable[PreferenceRecord]) -> None:
    """One record per line, UTF-8, snake_case keys in schema order."""
    lines = [
        json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))
        for record in records
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_preference_jsonl(path: str | Path) -> list[PreferenceRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            row = json.loads(line)
            try:
                records.append(PreferenceRecord(**{f: row[f] for f in RECORD_FIELDS}))
            except KeyError as exc:
                raise ValidationError(
                    f"{path}:{line_no} is missing field {exc.args[0]!r}"
                ) from exc
    return records
