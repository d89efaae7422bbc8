from importlib.resources import files
from pathlib import Path

import pytest

from seroute.core import ModelPair, ModelRef, Tier


def make_pair() -> ModelPair:
    return ModelPair(
        strong=ModelRef(
            id="strong-cloud",
            tier=Tier.STRONG,
            price_per_input_token="0.00003",
            price_per_output_token="0.00006",
        ),
        weak=ModelRef(
            id="weak-edge",
            tier=Tier.WEAK,
            price_per_input_token="0.0000005",
            price_per_output_token="0.0000015",
        ),
    )


@pytest.fixture
def pair() -> ModelPair:
    return make_pair()


@pytest.fixture
def workspace(tmp_path) -> Path:
    """Temp directory seeded with the bundled manifest and prompt fixture."""
    fixtures = files("seroute").joinpath("fixtures")
    for name in ("manifest.example.json", "prompts_50.jsonl"):
        (tmp_path / name).write_bytes(fixtures.joinpath(name).read_bytes())
    return tmp_path
