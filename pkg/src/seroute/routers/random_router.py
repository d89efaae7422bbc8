"""Seeded random baseline.

The prediction is a uniform draw in [0, 1) that depends only on the seed
and the query key, so repeated calls and concurrent callers always agree.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..core import RouterKind


@dataclass(frozen=True)
class RandomRouterModel:
    seed: int

    kind = RouterKind.RANDOM
    dim = 0

    def predict_win_prob(self, embedding=None, key: str = "") -> float:
        digest = hashlib.sha256(f"{self.seed}:{key}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") / 2.0**64
