"""File-based pipeline stages from sampling through reports.

Every stage reads documented JSONL/CSV files, writes its outputs plus a
stage-tag sidecar (`<output>.meta.json`), and derives all randomness from
the manifest seed, so any rerun with the same manifest is byte-identical.
Stage order: sample -> cluster -> se -> build-prefs; embed feeds train;
train feeds sweep -> cpt; judge and route read earlier outputs directly.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ._http import post_json
from .core import GenerationSample, ModelPair, ModelRef, Query, Tier
from .embed import (
    MOCK_EMBEDDING_DIM,
    MockEmbedder,
    RemoteEmbedder,
    read_embedding_store,
    write_embedding_store,
)
from .errors import MissingInput, ProviderFailure, StageMismatch, ValidationError
from .evaluation import (
    BenchmarkItem,
    MockJudge,
    RemoteJudge,
    cpt,
    curve_summary,
    judge_items,
    judge_score,
    normalized_answer_match,
    read_benchmark_jsonl,
    read_curve_csv,
    sweep,
    write_benchmark_jsonl,
    write_curve_csv,
)
from .preference import (
    DEFAULT_TAU,
    SEPair,
    build_dataset,
    read_preference_jsonl,
    write_preference_jsonl,
)
from .routers import (
    MFConfig,
    MLPConfig,
    RandomRouterModel,
    SWConfig,
    TrainingSet,
    knn_train,
    load_artifact,
    mf_train,
    mlp_train,
    save_model,
    sw_train,
)
from .uncertainty import (
    MockEntailmentOracle,
    SEScore,
    RemoteEntailmentOracle,
    SemanticCluster,
    SemanticClustering,
    cluster_by_entailment,
    semantic_entropy,
)

MOCK_PROVIDER = "mock"

# Every synthetic sample uses the same per-token log probability, so the
# length-normalized sample probabilities come out equal and cluster masses
# are exact member-count fractions.
MOCK_TOKEN_LOGPROB = math.log(0.7)

_ALT_STEMS = (
    ("maybe", "crimson"),
    ("perhaps", "azure"),
    ("possibly", "amber"),
)

_PATH_KEYS = (
    "prompts",
    "generations",
    "clusterings",
    "se_scores",
    "preferences",
    "embeddings",
    "benchmark",
    "artifacts_dir",
    "reports_dir",
)
_PROVIDER_KEYS = ("generation", "entailment", "embedding", "judge")
ROUTER_KINDS = ("sw", "mf", "mlp", "knn", "random")
_TIERS = ("strong", "weak")


def _require_provider(value: str, label: str) -> str:
    if value == MOCK_PROVIDER or value.startswith(("http://", "https://")):
        return value
    raise ValidationError(f"provider {label} must be 'mock' or an http(s) URL, got {value!r}")


@dataclass(frozen=True)
class PipelineManifest:
    """Parsed manifest: seeds, file layout, providers, models, topics."""

    seed: int
    tau: float
    num_samples: int
    embedding_dim: int
    cpt_mode: str
    pair: ModelPair
    paths: Mapping[str, Path]
    providers: Mapping[str, str]
    topics: Mapping[str, Mapping[str, float]]
    router_configs: Mapping[str, Mapping]

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValidationError(f"num_samples must be >= 1, got {self.num_samples}")
        if not self.tau > 0.0:
            raise ValidationError(f"tau must be > 0, got {self.tau!r}")
        if self.embedding_dim < 1:
            raise ValidationError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.cpt_mode not in ("gap", "relative"):
            raise ValidationError(f"cpt_mode must be 'gap' or 'relative', got {self.cpt_mode!r}")
        missing = [key for key in _PATH_KEYS if key not in self.paths]
        if missing:
            raise ValidationError(f"manifest paths missing keys: {missing}")
        for label in _PROVIDER_KEYS:
            _require_provider(self.providers.get(label, MOCK_PROVIDER), label)
        if "default" not in self.topics:
            raise ValidationError("manifest topics must include a 'default' entry")
        for name, rates in self.topics.items():
            for tier in _TIERS:
                rate = rates.get(tier)
                if rate is None or not (0.0 <= float(rate) <= 1.0):
                    raise ValidationError(
                        f"topic {name!r} needs {tier!r} agreement in [0, 1], got {rate!r}"
                    )

    @classmethod
    def from_file(
        cls,
        path: str | Path,
        *,
        seed: int | None = None,
        tau: float | None = None,
        mock: bool = False,
    ) -> "PipelineManifest":
        path = Path(path)
        if not path.exists():
            raise MissingInput(str(path))
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from exc
        base = path.resolve().parent
        try:
            paths = {key: base / raw["paths"][key] for key in _PATH_KEYS}
            models = raw["models"]
            pair = ModelPair(
                strong=ModelRef(
                    id=models["strong"]["id"],
                    tier=Tier.STRONG,
                    price_per_input_token=models["strong"]["price_per_input_token"],
                    price_per_output_token=models["strong"]["price_per_output_token"],
                ),
                weak=ModelRef(
                    id=models["weak"]["id"],
                    tier=Tier.WEAK,
                    price_per_input_token=models["weak"]["price_per_input_token"],
                    price_per_output_token=models["weak"]["price_per_output_token"],
                ),
            )
        except KeyError as exc:
            raise ValidationError(f"manifest {path} is missing key {exc.args[0]!r}") from exc
        providers = {
            key: str(raw.get("providers", {}).get(key, MOCK_PROVIDER)) for key in _PROVIDER_KEYS
        }
        if mock:
            providers = {key: MOCK_PROVIDER for key in _PROVIDER_KEYS}
        return cls(
            seed=int(raw.get("seed", 0)) if seed is None else int(seed),
            tau=float(raw.get("tau", DEFAULT_TAU)) if tau is None else float(tau),
            num_samples=int(raw.get("num_samples", 10)),
            embedding_dim=int(raw.get("embedding_dim", MOCK_EMBEDDING_DIM)),
            cpt_mode=str(raw.get("cpt_mode", "gap")),
            pair=pair,
            paths=paths,
            providers=providers,
            topics=raw.get("topics", {"default": {"strong": 0.9, "weak": 0.6}}),
            router_configs=raw.get("routers", {}),
        )

    def agreement(self, topic: str, tier: str) -> float:
        rates = self.topics.get(topic) or self.topics["default"]
        return float(rates[tier])

    def artifact_path(self, kind: str) -> Path:
        return self.paths["artifacts_dir"] / f"{kind}.json"

    def report_path(self, name: str) -> Path:
        return self.paths["reports_dir"] / name


# ---------------------------------------------------------------------------
# stage tags and chunk I/O
# ---------------------------------------------------------------------------


def stage_rng(seed: int, scope: str) -> random.Random:
    """Independent generator per (seed, scope); insensitive to the order
    in which scopes are processed."""
    digest = hashlib.sha256(f"{seed}:{scope}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_stage_tag(path: Path, stage: str, seed: int) -> None:
    text = json.dumps({"seed": seed, "stage": stage}, sort_keys=True) + "\n"
    _meta_path(path).write_text(text, encoding="utf-8")


def check_stage(path: Path, expected_stage: str, seed: int) -> None:
    """Confirm `path` exists and was produced by `expected_stage` under
    `seed`, so outputs from different runs never mix."""
    if not path.exists():
        raise MissingInput(str(path))
    meta_path = _meta_path(path)
    if not meta_path.exists():
        raise StageMismatch(
            f"{path} has no stage tag; expected output of stage {expected_stage!r}"
        )
    tag = json.loads(meta_path.read_text(encoding="utf-8"))
    found = tag.get("stage")
    if found != expected_stage:
        raise StageMismatch(
            f"{path} was produced by stage {found!r}, expected {expected_stage!r}"
        )
    found_seed = tag.get("seed")
    if found_seed != seed:
        raise StageMismatch(
            f"{path} was produced under seed {found_seed!r}, this run uses {seed!r}"
        )


def _write_rows(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(
        json.dumps(row, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"
        for row in rows
    )
    path.write_text(text, encoding="utf-8")


def _read_rows(path: Path) -> list[dict]:
    rows = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _read_prompts(path: Path) -> list[dict]:
    if not path.exists():
        raise MissingInput(str(path))
    rows = _read_rows(path)
    if not rows:
        raise ValidationError(f"prompt file {path} is empty")
    seen = set()
    for row in rows:
        for key in ("id", "prompt", "reference_answer"):
            if not row.get(key):
                raise ValidationError(f"prompt row {row!r} is missing {key!r}")
        if row["id"] in seen:
            raise ValidationError(f"duplicate prompt id {row['id']!r} in {path}")
        seen.add(row["id"])
    return sorted(rows, key=lambda r: r["id"])


# ---------------------------------------------------------------------------
# generation providers
# ---------------------------------------------------------------------------


def _mock_generation(
    query_id: str,
    reference: str,
    agreement: float,
    num_samples: int,
    rng: random.Random,
) -> tuple[list[dict], str]:
    """Synthesize one model's samples and designated response.

    Roughly `agreement * num_samples` samples repeat the canonical answer
    (the reference text); the rest cycle through wrong alternatives. The
    designated response is canonical with probability `agreement`, which
    ties recorded correctness to the same knob that sets uncertainty.
    """
    canonical = reference
    alternatives = [f"{a} {b} answer {query_id}" for a, b in _ALT_STEMS]
    k = round(agreement * num_samples)
    start = rng.randrange(len(alternatives))
    texts = [canonical] * k + [
        alternatives[(start + i) % len(alternatives)] for i in range(num_samples - k)
    ]
    samples = [
        {
            "text": text,
            "seq_logprob": len(text.split()) * MOCK_TOKEN_LOGPROB,
            "token_count": len(text.split()),
        }
        for text in texts
    ]
    if rng.random() < agreement:
        response = canonical
    else:
        response = alternatives[rng.randrange(len(alternatives))]
    return samples, response


@dataclass(frozen=True)
class RemoteGenerator:
    """Client for a sampling endpoint.

    Wire protocol: POST {"model": str, "prompt": str, "num_samples": int}
    and receive {"response": str, "samples": [{"text", "seq_logprob",
    "token_count"}, ...]}.
    """

    endpoint: str
    timeout: float = 30.0
    retries: int = 2

    def generate(self, model_id: str, prompt: str, num_samples: int) -> tuple[list[dict], str]:
        try:
            reply = post_json(
                self.endpoint,
                {"model": model_id, "prompt": prompt, "num_samples": num_samples},
                timeout=self.timeout,
                retries=self.retries,
            )
            samples = [
                {
                    "text": str(s["text"]),
                    "seq_logprob": float(s["seq_logprob"]),
                    "token_count": int(s["token_count"]),
                }
                for s in reply["samples"]
            ]
            return samples, str(reply["response"])
        except ProviderFailure:
            raise
        except Exception as exc:
            raise ProviderFailure(f"generation endpoint {self.endpoint}: {exc}") from exc


def _embedder_for(manifest: PipelineManifest):
    provider = manifest.providers["embedding"]
    if provider == MOCK_PROVIDER:
        return MockEmbedder(dim=manifest.embedding_dim)
    return RemoteEmbedder(provider, expected_dim=manifest.embedding_dim)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def run_sample(manifest: PipelineManifest) -> list[Path]:
    """Draw each model's samples and designated response per prompt, and
    record the benchmark (responses, correctness, token counts)."""
    prompts = _read_prompts(manifest.paths["prompts"])
    provider = manifest.providers["generation"]
    generator = None if provider == MOCK_PROVIDER else RemoteGenerator(provider)

    generation_rows = []
    bench_items = []
    for row in prompts:
        query_id = row["id"]
        topic = row.get("topic", "default")
        by_tier = {}
        for tier in _TIERS:
            model_id = getattr(manifest.pair, tier).id
            if generator is None:
                rng = stage_rng(manifest.seed, f"sample:{query_id}:{tier}")
                samples, response = _mock_generation(
                    query_id,
                    row["reference_answer"],
                    manifest.agreement(topic, tier),
                    manifest.num_samples,
                    rng,
                )
            else:
                samples, response = generator.generate(
                    model_id, row["prompt"], manifest.num_samples
                )
            generation_rows.append(
                {
                    "query_id": query_id,
                    "tier": tier,
                    "model_id": model_id,
                    "response": response,
                    "samples": samples,
                }
            )
            by_tier[tier] = response
        bench_items.append(
            BenchmarkItem(
                id=query_id,
                prompt=row["prompt"],
                reference_answer=row["reference_answer"],
                strong_response=by_tier["strong"],
                weak_response=by_tier["weak"],
                strong_correct=normalized_answer_match(
                    by_tier["strong"], row["reference_answer"]
                ),
                weak_correct=normalized_answer_match(by_tier["weak"], row["reference_answer"]),
                strong_tokens=(len(row["prompt"].split()), len(by_tier["strong"].split())),
                weak_tokens=(len(row["prompt"].split()), len(by_tier["weak"].split())),
            )
        )

    generations_path = manifest.paths["generations"]
    _write_rows(generations_path, generation_rows)
    write_stage_tag(generations_path, "sample", manifest.seed)

    benchmark_path = manifest.paths["benchmark"]
    benchmark_path.parent.mkdir(parents=True, exist_ok=True)
    write_benchmark_jsonl(benchmark_path, bench_items)
    write_stage_tag(benchmark_path, "sample", manifest.seed)
    return [generations_path, benchmark_path]


def _oracle_for(manifest: PipelineManifest):
    provider = manifest.providers["entailment"]
    if provider == MOCK_PROVIDER:
        return MockEntailmentOracle()
    return RemoteEntailmentOracle(provider)


def run_cluster(manifest: PipelineManifest) -> list[Path]:
    """Group each (query, model) sample list into meaning clusters."""
    generations_path = manifest.paths["generations"]
    check_stage(generations_path, "sample", manifest.seed)
    oracle = _oracle_for(manifest)

    rows = []
    for row in _read_rows(generations_path):
        samples = [
            GenerationSample(
                text=s["text"],
                seq_logprob=s["seq_logprob"],
                token_count=s["token_count"],
            )
            for s in row["samples"]
        ]
        clustering = cluster_by_entailment(samples, oracle, query_id=row["query_id"])
        rows.append(
            {
                "query_id": row["query_id"],
                "tier": row["tier"],
                "clusters": [
                    {
                        "members": [
                            {
                                "text": m.text,
                                "seq_logprob": m.seq_logprob,
                                "token_count": m.token_count,
                            }
                            for m in cluster.members
                        ],
                        "prob_mass": cluster.prob_mass,
                    }
                    for cluster in clustering.clusters
                ],
            }
        )

    out_path = manifest.paths["clusterings"]
    _write_rows(out_path, rows)
    write_stage_tag(out_path, "cluster", manifest.seed)
    return [out_path]


def run_se(manifest: PipelineManifest) -> list[Path]:
    """Score the uncertainty of every clustering."""
    clusterings_path = manifest.paths["clusterings"]
    check_stage(clusterings_path, "cluster", manifest.seed)

    rows = []
    for row in _read_rows(clusterings_path):
        clustering = SemanticClustering(
            query_id=row["query_id"],
            clusters=tuple(
                SemanticCluster(
                    members=tuple(
                        GenerationSample(
                            text=m["text"],
                            seq_logprob=m["seq_logprob"],
                            token_count=m["token_count"],
                        )
                        for m in cluster["members"]
                    ),
                    prob_mass=cluster["prob_mass"],
                )
                for cluster in row["clusters"]
            ),
        )
        score = semantic_entropy(clustering)
        rows.append(
            {
                "query_id": row["query_id"],
                "tier": row["tier"],
                "value": score.value,
                "num_clusters": score.num_clusters,
                "num_samples": score.num_samples,
            }
        )

    out_path = manifest.paths["se_scores"]
    _write_rows(out_path, rows)
    write_stage_tag(out_path, "se", manifest.seed)
    return [out_path]


def run_build_prefs(manifest: PipelineManifest) -> list[Path]:
    """Label each query strong-win / weak-win / tie from the two scores."""
    se_path = manifest.paths["se_scores"]
    generations_path = manifest.paths["generations"]
    check_stage(se_path, "se", manifest.seed)
    check_stage(generations_path, "sample", manifest.seed)
    prompts = {row["id"]: row["prompt"] for row in _read_prompts(manifest.paths["prompts"])}

    scores: dict[tuple[str, str], SEScore] = {}
    for row in _read_rows(se_path):
        scores[(row["query_id"], row["tier"])] = SEScore(
            value=row["value"],
            num_clusters=row["num_clusters"],
            num_samples=row["num_samples"],
        )
    responses: dict[tuple[str, str], str] = {}
    for row in _read_rows(generations_path):
        responses[(row["query_id"], row["tier"])] = row["response"]

    pairs = []
    for query_id in sorted({qid for qid, _ in scores}):
        try:
            pairs.append(
                SEPair(
                    query=Query(id=query_id, prompt=prompts[query_id]),
                    se_strong=scores[(query_id, "strong")],
                    se_weak=scores[(query_id, "weak")],
                    response_strong=responses[(query_id, "strong")],
                    response_weak=responses[(query_id, "weak")],
                )
            )
        except KeyError as exc:
            raise ValidationError(
                f"query {query_id!r} lacks a strong/weak counterpart: {exc.args[0]!r}"
            ) from exc

    records = build_dataset(pairs, manifest.tau, manifest.pair.strong, manifest.pair.weak)
    out_path = manifest.paths["preferences"]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_preference_jsonl(out_path, records)
    write_stage_tag(out_path, "build-prefs", manifest.seed)
    return [out_path]


def run_embed(manifest: PipelineManifest) -> list[Path]:
    """Embed every prompt into the shared vector store."""
    prompts = _read_prompts(manifest.paths["prompts"])
    embedder = _embedder_for(manifest)
    entries = [(row["id"], embedder.embed(row["prompt"])) for row in prompts]

    out_path = manifest.paths["embeddings"]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_embedding_store(
        out_path,
        entries,
        dim=manifest.embedding_dim,
        provider=manifest.providers["embedding"],
    )
    write_stage_tag(out_path, "embed", manifest.seed)
    return [out_path]


def _router_seed(manifest: PipelineManifest, kind: str) -> int:
    cfg = manifest.router_configs.get(kind, {})
    return int(cfg.get("seed", manifest.seed))


def _train_model(manifest: PipelineManifest, kind: str, training_set: TrainingSet | None):
    cfg = dict(manifest.router_configs.get(kind, {}))
    cfg.pop("seed", None)
    seed = _router_seed(manifest, kind)
    try:
        if kind == "sw":
            return sw_train(training_set, SWConfig(**cfg) if cfg else None, seed=seed)
        if kind == "mf":
            return mf_train(training_set, MFConfig(seed=seed, **cfg))
        if kind == "mlp":
            return mlp_train(training_set, MLPConfig(seed=seed, **cfg))
        if kind == "knn":
            return knn_train(training_set, k=int(cfg.get("k", 1)), seed=seed)
        if kind == "random":
            return RandomRouterModel(seed=seed)
    except TypeError as exc:
        raise ValidationError(f"bad config for router {kind!r}: {exc}") from exc
    raise ValidationError(f"unknown router kind {kind!r}; expected one of {ROUTER_KINDS}")


def run_train(manifest: PipelineManifest, kind: str) -> list[Path]:
    """Fit one router architecture and persist its artifact.

    The random baseline trains from nothing but the seed; all other kinds
    read the preference dataset and the embedding store.
    """
    training_set = None
    if kind != "random":
        prefs_path = manifest.paths["preferences"]
        embeds_path = manifest.paths["embeddings"]
        check_stage(prefs_path, "build-prefs", manifest.seed)
        check_stage(embeds_path, "embed", manifest.seed)
        records = read_preference_jsonl(prefs_path)
        vectors, dim, _ = read_embedding_store(embeds_path)
        training_set = TrainingSet(records=tuple(records), embeddings=vectors, dim=dim)

    model = _train_model(manifest, kind, training_set)
    out_path = manifest.artifact_path(kind)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out_path)
    write_stage_tag(out_path, "train", manifest.seed)
    return [out_path]


def run_sweep(manifest: PipelineManifest, kind: str) -> list[Path]:
    """Replay the benchmark through one artifact at every threshold."""
    artifact_path = manifest.artifact_path(kind)
    benchmark_path = manifest.paths["benchmark"]
    check_stage(artifact_path, "train", manifest.seed)
    check_stage(benchmark_path, "sample", manifest.seed)

    loaded = load_artifact(artifact_path)
    items = read_benchmark_jsonl(benchmark_path)
    embedder = None
    if loaded.embedding_dim > 0:
        provider = manifest.providers["embedding"]
        if provider == MOCK_PROVIDER:
            embedder = MockEmbedder(dim=loaded.embedding_dim)
        else:
            embedder = RemoteEmbedder(provider, expected_dim=loaded.embedding_dim)

    curve = sweep(loaded.model, items, manifest.pair, embedder)
    curve_path = manifest.report_path(f"curve_{kind}.csv")
    summary_path = manifest.report_path(f"summary_{kind}.json")
    curve_path.parent.mkdir(parents=True, exist_ok=True)
    write_curve_csv(curve_path, curve)
    summary = curve_summary(curve, mode=manifest.cpt_mode)
    summary_path.write_text(
        json.dumps(summary, sort_keys=True, separators=(",", ": ")) + "\n", encoding="utf-8"
    )
    write_stage_tag(curve_path, "sweep", manifest.seed)
    write_stage_tag(summary_path, "sweep", manifest.seed)
    return [curve_path, summary_path]


def run_cpt(manifest: PipelineManifest, kind: str, x_percent: float) -> float:
    """Read one router's curve and report the fraction that reaches x%."""
    curve_path = manifest.report_path(f"curve_{kind}.csv")
    check_stage(curve_path, "sweep", manifest.seed)
    curve = read_curve_csv(curve_path)
    value = cpt(
        curve,
        x_percent,
        curve.accuracy_weak,
        curve.accuracy_strong,
        mode=manifest.cpt_mode,
    )
    out_path = manifest.report_path(f"cpt_{kind}.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        json.dumps(
            {"cpt": value, "router_kind": kind, "x_percent": x_percent},
            sort_keys=True,
            separators=(",", ": "),
        )
        + "\n",
        encoding="utf-8",
    )
    write_stage_tag(out_path, "cpt", manifest.seed)
    return value


def run_judge(manifest: PipelineManifest) -> list[Path]:
    """Score both recorded responses per query with the configured judge."""
    benchmark_path = manifest.paths["benchmark"]
    check_stage(benchmark_path, "sample", manifest.seed)
    items = read_benchmark_jsonl(benchmark_path)

    provider = manifest.providers["judge"]
    client = MockJudge() if provider == MOCK_PROVIDER else RemoteJudge(provider)
    labels = (manifest.pair.strong.id, manifest.pair.weak.id)
    entries = [
        (
            item.id,
            item.prompt,
            item.reference_answer,
            [(labels[0], item.strong_response), (labels[1], item.weak_response)],
        )
        for item in items
    ]
    results, abstained = judge_items(client, entries)
    total = len(results)
    report = {
        "abstained": abstained,
        "scores": {label: judge_score(results, label, total) for label in labels},
        "total": total,
    }
    out_path = manifest.report_path("judge.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        json.dumps(report, sort_keys=True, separators=(",", ": ")) + "\n", encoding="utf-8"
    )
    write_stage_tag(out_path, "judge", manifest.seed)
    return [out_path]


def run_route(
    manifest: PipelineManifest, kind: str, prompt: str, threshold: float = 0.5
) -> dict:
    """One-off routing decision from a stored artifact."""
    if not prompt.strip():
        raise ValidationError("prompt must be non-empty")
    if not (0.0 <= threshold <= 1.0):
        raise ValidationError(f"threshold must be in [0, 1], got {threshold!r}")
    artifact_path = manifest.artifact_path(kind)
    if not artifact_path.exists():
        raise MissingInput(str(artifact_path))
    loaded = load_artifact(artifact_path)
    embedding = None
    if loaded.embedding_dim > 0:
        provider = manifest.providers["embedding"]
        if provider == MOCK_PROVIDER:
            embedder = MockEmbedder(dim=loaded.embedding_dim)
        else:
            embedder = RemoteEmbedder(provider, expected_dim=loaded.embedding_dim)
        embedding = embedder.embed(prompt)
    p = float(loaded.model.predict_win_prob(embedding, key=prompt))
    chosen = manifest.pair.strong if p >= threshold else manifest.pair.weak
    return {
        "chosen_model": chosen.id,
        "p_win_strong": p,
        "threshold": threshold,
        "router_kind": loaded.router_kind.value,
    }
