"""Configuration and orchestration of the full disambiguation run.

Stages: ingest -> mine stable pairs -> build stable network -> sample and fit
the mixture -> merge -> recover relations -> optional evaluation.  Every run
writes its artifacts plus a manifest with the configuration (and its hash),
per-stage timings, and the headline counts.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, fields
from pathlib import Path

from . import gcn, metrics, model, scn
from .corpus import CorpusIndex, load_stopwords, parse_corpus_file
from .network import CollabNetwork
from .similarity import EmbeddingTable, SimilarityContext

STAGES = ("ingest", "scn", "fit", "merge", "recover", "evaluate")

DEFAULT_FAMILIES_TEXT = ",".join(model.DEFAULT_FAMILIES)


class StageError(RuntimeError):
    """A pipeline stage failed; earlier artifacts are left in place."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    """All knobs of a pipeline run; round-trips losslessly through a file."""

    corpus: str
    out_dir: str
    stopwords: str | None = None
    embeddings: str | None = None
    gold: str | None = None
    eta: int = 3
    delta: float = 0.0
    alpha: float = 0.62
    wl_iterations: int = 2
    sample_rate: float = 0.1
    min_split: int = 5
    seed: int = 42
    freq_cutoff: float = 0.05
    families: str = DEFAULT_FAMILIES_TEXT
    workers: int = 1
    embedding_dim: int = 16
    time_exponent_positive: bool = False

    def __post_init__(self) -> None:
        if self.eta < 2:
            raise ValueError("eta must be >= 2")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.wl_iterations < 1:
            raise ValueError("wl_iterations must be >= 1")
        if not (0.0 < self.sample_rate <= 1.0):
            raise ValueError("sample_rate must lie in (0, 1]")
        if self.min_split < 2:
            raise ValueError("min_split must be >= 2")
        if not (0.0 < self.freq_cutoff <= 1.0):
            raise ValueError("freq_cutoff must lie in (0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        tags = self.family_tags
        if len(tags) != 6 or any(t not in model.FAMILY_TAGS for t in tags):
            raise ValueError(f"families must list 6 known tags, got {self.families!r}")

    @property
    def family_tags(self) -> tuple[str, ...]:
        return tuple(t.strip() for t in self.families.split(","))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        values: dict[str, object] = {}
        types = {f.name: f.type for f in fields(cls)}
        for line_no, raw in enumerate(text.splitlines(), start=1):
            raw = raw.strip()
            if not raw or raw.startswith("#"):
                continue
            if "=" not in raw:
                raise ValueError(f"config line {line_no}: expected 'key = value'")
            key, _, value = (p.strip() for p in raw.partition("="))
            if key not in types:
                raise ValueError(f"config line {line_no}: unknown key {key!r}")
            values[key] = _parse_config_value(types[key], value)
        return cls(**values)  # type: ignore[arg-type]

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _parse_config_value(type_text: str, value: str):
    if "bool" in type_text:
        if value not in ("true", "false"):
            raise ValueError(f"expected true/false, got {value!r}")
        return value == "true"
    if type_text == "int":
        return int(value)
    if type_text == "float":
        return float(value)
    return value


def build_embeddings(config: RunConfig, index: CorpusIndex) -> EmbeddingTable:
    """Load the configured table, or derive deterministic hashed vectors.

    A corpus can end up with no retained keywords (tiny inputs make every
    word "frequent"); the interest feature is then always missing, but the
    table itself must exist.
    """
    if config.embeddings:
        return EmbeddingTable.load(config.embeddings)
    vocab = list(index.word_freq) or ["__no_keywords__"]
    return EmbeddingTable.hashed(vocab, dim=config.embedding_dim, seed=config.seed)


def build_context(
    config: RunConfig, network: CollabNetwork, index: CorpusIndex
) -> SimilarityContext:
    return SimilarityContext(
        network=network,
        index=index,
        embeddings=build_embeddings(config, index),
        alpha=config.alpha,
        wl_iterations=config.wl_iterations,
        positive_time_exponent=config.time_exponent_positive,
    )


def run_full(config: RunConfig) -> dict:
    """Execute all stages and return the manifest (also written to disk)."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "config": {f.name: getattr(config, f.name) for f in fields(config)},
        "config_hash": config.config_hash(),
        "timings": {},
        "counts": {},
    }

    def finish_stage(stage: str, started: float) -> None:
        manifest["timings"][stage] = round(time.perf_counter() - started, 4)

    def fail(stage: str, exc: Exception) -> StageError:
        manifest["error"] = {"stage": stage, "message": str(exc)}
        _write_manifest(out, manifest)
        return StageError(stage, exc)

    t0 = time.perf_counter()
    try:
        stopwords = load_stopwords(config.stopwords)
        index, errors = parse_corpus_file(config.corpus, stopwords, config.freq_cutoff)
        if errors:
            (out / "corpus_errors.txt").write_text(
                "\n".join(str(e) for e in errors) + "\n", encoding="utf-8"
            )
    except Exception as exc:
        raise fail("ingest", exc) from exc
    finish_stage("ingest", t0)
    manifest["counts"]["papers"] = index.n_papers
    manifest["counts"]["record_errors"] = len(errors)

    t0 = time.perf_counter()
    try:
        scrs = scn.mine_scrs(index, config.eta)
        network = scn.build_scn(scrs, index)
        network.dump(out / "scn.graph")
    except Exception as exc:
        raise fail("scn", exc) from exc
    finish_stage("scn", t0)
    manifest["counts"]["scrs"] = len(scrs)
    manifest["counts"]["scn_vertices"] = network.n_vertices()
    manifest["counts"]["scn_edges"] = network.n_edges()

    t0 = time.perf_counter()
    try:
        ctx = build_context(config, network, index)
        training = model.sample_training_pairs(
            ctx, config.sample_rate, config.seed, config.min_split, config.workers
        )
        fit = model.em_fit(training, config.family_tags)
        model.save_model(fit.params, out / "model.txt")
    except Exception as exc:
        raise fail("fit", exc) from exc
    finish_stage("fit", t0)
    manifest["counts"]["training_vectors"] = training.n
    manifest["counts"]["em_iterations"] = fit.iterations
    manifest["counts"]["em_final_ll"] = fit.log_likelihoods[-1]
    manifest["counts"]["em_restarts"] = fit.restarts

    t0 = time.perf_counter()
    try:
        network, events = gcn.merge_pass(network, fit.params, ctx, config.delta)
        with open(out / "merge_events.log", "w", encoding="utf-8") as fh:
            for event in events:
                fh.write(str(event) + "\n")
    except Exception as exc:
        raise fail("merge", exc) from exc
    finish_stage("merge", t0)
    manifest["counts"]["merges"] = len(events)

    t0 = time.perf_counter()
    try:
        network = gcn.recover_relations(network, index, fit.params, ctx, config.delta)
        network.dump(out / "gcn.graph")
    except Exception as exc:
        raise fail("recover", exc) from exc
    finish_stage("recover", t0)
    manifest["counts"]["gcn_vertices"] = network.n_vertices()
    manifest["counts"]["gcn_edges"] = network.n_edges()

    if config.gold:
        t0 = time.perf_counter()
        try:
            gold = metrics.load_gold(config.gold)
            metrics.check_gold_against_corpus(gold, index)
            assignments = network.paper_assignments()
            predicted = {item: assignments[item] for item in gold if item in assignments}
            result = metrics.micro_metrics(predicted, gold)
        except Exception as exc:
            raise fail("evaluate", exc) from exc
        finish_stage("evaluate", t0)
        manifest["metrics"] = {
            "micro_a": result.micro_a,
            "micro_p": result.micro_p,
            "micro_r": result.micro_r,
            "micro_f": result.micro_f,
            "tp": result.tp,
            "fp": result.fp,
            "fn": result.fn,
            "tn": result.tn,
        }

    _write_manifest(out, manifest)
    return manifest


def _write_manifest(out: Path, manifest: dict) -> None:
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
