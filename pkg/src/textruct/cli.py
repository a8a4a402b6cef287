"""Command line entry point: one subcommand per pipeline stage plus `synth`,
`pipeline` and `serve`.

Stage artifacts are plain files under the configured work directory, so the
human-paced review loop can interrupt the pipeline for days between `train`
and `canonicalize`. Each output embeds the tool version and a config hash.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .corpusio import atomic_write_text, config_hash, read_jsonl, write_jsonl
from . import ingest as ingest_mod
from . import lexicon, metrics, normalize as norm_mod, synthgen
from .embedding import TrainConfig, load_model, save_model, train_skip_gram
from .extract import (
    extract_records,
    load_rules,
    merge_sources,
    read_records_csv,
    records_csv,
    resolve_anchors,
)
from .metrics import IndicatorSpec, evaluate, read_gold_csv, report_csv, report_table
from .normalize import NormalizedDocument
from .syndict import (
    Concept,
    SynonymDictionary,
    apply_decisions,
    canonicalize,
    run_round,
    start_session,
)

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"

STAGES = ("ingest", "normalize", "lexstats", "typos", "phrases", "train",
          "canonicalize", "extract", "merge", "evaluate")


@dataclass
class PipelineConfig:
    """All stage settings plus the file layout, loaded from one JSON file.
    Environment variables TEXTRUCT_<PATH> override path entries only."""

    base_dir: Path
    raw: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        raw = json.loads(path.read_text(encoding="utf-8"))
        return cls(base_dir=path.parent.resolve(), raw=raw)

    @classmethod
    def default(cls, base_dir: Path) -> "PipelineConfig":
        return cls(base_dir=base_dir.resolve(), raw={})

    def hash(self) -> str:
        return config_hash(self.raw)

    def _paths(self) -> dict:
        return self.raw.get("paths", {})

    def path(self, key: str, default: str | None = None) -> Path | None:
        env = os.environ.get(f"TEXTRUCT_{key.upper()}")
        value = env or self._paths().get(key, default)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def workdir(self) -> Path:
        wd = self.path("workdir", "work")
        wd.mkdir(parents=True, exist_ok=True)
        return wd

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    def seed(self) -> int:
        return int(self.raw.get("seed", 1234))

    def stage_enabled(self, stage: str) -> bool:
        return bool(self.raw.get("stages", {}).get(stage, True))

    def rules_path(self) -> Path:
        return self.path("rules") or DATA_DIR / "rules.json"

    def concepts_path(self) -> Path:
        return self.path("concepts") or DATA_DIR / "concepts.json"

    def meta(self) -> dict:
        return {"tool": "textruct", "version": __version__, "config": self.hash()}


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"stage {stage}: missing input {path}")
    return path


def _read_normalized(path: Path) -> list[NormalizedDocument]:
    return [NormalizedDocument.from_dict(d) for d in read_jsonl(path)]


def _write_normalized(path: Path, docs, cfg: PipelineConfig) -> None:
    write_jsonl(path, (d.to_dict() for d in docs), meta=cfg.meta())


def _load_dictionary(cfg: PipelineConfig, augmented: bool = True) -> SynonymDictionary:
    """The curated store when it exists (and augmentation is wanted),
    otherwise concepts seeded from the concepts file."""
    dict_path = cfg.path("dictionary")
    if augmented and dict_path is not None and dict_path.exists():
        return SynonymDictionary.load(dict_path)
    data = json.loads(cfg.concepts_path().read_text(encoding="utf-8"))
    d = SynonymDictionary()
    for c in data["concepts"]:
        d.seed_concept(Concept(c["concept_id"], c["canonical"]), c.get("seeds", []))
    return d


def _indicator_specs(cfg: PipelineConfig) -> list[IndicatorSpec]:
    tolerance = float(cfg.section("evaluate").get("numeric_tolerance", 0.0))
    specs = []
    for rule in load_rules(cfg.rules_path()):
        kind = rule.metric
        specs.append(IndicatorSpec(
            name=rule.indicator, kind=kind,
            positive_label=rule.positive_label,
            tolerance=tolerance if kind == "numeric" else 0.0,
        ))
    return specs


class _Stage:
    """Removes the outputs it declared if the stage body raises."""

    def __init__(self, name: str, outputs: list[Path]):
        self.name = name
        self.outputs = outputs

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.outputs:
                try:
                    p.unlink(missing_ok=True)
                except OSError:
                    pass
        return False


# ---------------------------------------------------------------------------
# stage implementations
# ---------------------------------------------------------------------------

def stage_ingest(cfg: PipelineConfig) -> str:
    raw_path = _require(cfg.path("raw_corpus", "corpus.jsonl"), "ingest")
    fmt = cfg.section("ingest").get("format", "jsonl")
    patterns = ingest_mod.load_heading_patterns(cfg.path("headings"))
    out = cfg.workdir() / "documents.jsonl"
    with _Stage("ingest", [out]):
        docs = ingest_mod.load_corpus(raw_path, fmt, patterns)
        write_jsonl(out, (
            {
                "doc_id": d.doc_id, "patient_id": d.patient_id,
                "source_type": d.source_type,
                "authored_date": d.authored_date.isoformat() if d.authored_date else None,
                "sections": [[h, b] for h, b in d.sections],
            }
            for d in docs
        ), meta=cfg.meta())
    return f"ingest: {len(docs)} documents -> {out}"


def stage_normalize(cfg: PipelineConfig, threads: int = 1) -> str:
    src = _require(cfg.workdir() / "documents.jsonl", "normalize")
    months = norm_mod.load_months(cfg.path("months"))
    cues = norm_mod.load_laterality_cues(cfg.path("laterality_cues"))
    out = cfg.workdir() / "normalized.jsonl"
    timeline_out = cfg.workdir() / "timeline.tsv"
    with _Stage("normalize", [out, timeline_out]):
        raw_docs = []
        from datetime import date as _date

        for d in read_jsonl(src):
            raw_docs.append(ingest_mod.RawDocument(
                doc_id=d["doc_id"], patient_id=d["patient_id"],
                source_type=d["source_type"],
                authored_date=_date.fromisoformat(d["authored_date"]) if d.get("authored_date") else None,
                sections=[(h, b) for h, b in d["sections"]],
            ))
        docs = norm_mod.normalize_corpus(raw_docs, months, cues, threads=threads)
        _write_normalized(out, docs, cfg)
        by_patient: dict[str, list[NormalizedDocument]] = {}
        for doc in docs:
            by_patient.setdefault(doc.patient_id, []).append(doc)
        lines = [f"# {json.dumps(cfg.meta(), sort_keys=True)}",
                 "patient_id\tdate\tdoc_id\ttoken_index"]
        for pid in sorted(by_patient):
            tl = norm_mod.build_timeline(by_patient[pid])
            for iso, doc_id, idx in tl.entries:
                lines.append(f"{pid}\t{iso}\t{doc_id}\t{idx}")
        atomic_write_text(timeline_out, "\n".join(lines) + "\n")
    return f"normalize: {len(docs)} documents -> {out}"


def stage_lexstats(cfg: PipelineConfig) -> str:
    src = _require(cfg.workdir() / "normalized.jsonl", "lexstats")
    out = cfg.workdir() / "stats.json"
    with _Stage("lexstats", [out]):
        docs = _read_normalized(src)
        stats = lexicon.compute_stats(docs)
        payload = {
            "_meta": cfg.meta(),
            "total_tokens": stats.total_tokens,
            "unigrams": dict(sorted(stats.unigram_counts.items())),
            "bigrams": [[a, b, c] for (a, b), c in sorted(stats.bigram_counts.items())],
        }
        atomic_write_text(out, json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")
    return (f"lexstats: {stats.total_tokens} tokens, "
            f"{len(stats.unigram_counts)} types -> {out}")


def _read_stats(path: Path) -> lexicon.CorpusStats:
    from collections import Counter

    d = json.loads(path.read_text(encoding="utf-8"))
    return lexicon.CorpusStats(
        unigram_counts=Counter(d["unigrams"]),
        bigram_counts=Counter({(a, b): c for a, b, c in d["bigrams"]}),
        total_tokens=d["total_tokens"],
    )


def stage_typos(cfg: PipelineConfig) -> str:
    src = _require(cfg.workdir() / "normalized.jsonl", "typos")
    stats_path = _require(cfg.workdir() / "stats.json", "typos")
    out = cfg.workdir() / "corrected.jsonl"
    log_out = cfg.workdir() / "substitutions.tsv"
    with _Stage("typos", [out, log_out]):
        docs = _read_normalized(src)
        stats = _read_stats(stats_path)
        typo_cfg = lexicon.TypoConfig(**cfg.section("typo"))
        corrected, subs = lexicon.correct_typos(docs, stats, typo_cfg)
        _write_normalized(out, corrected, cfg)
        meta = json.dumps(cfg.meta(), sort_keys=True)
        atomic_write_text(log_out, f"# {meta}\n" + lexicon.substitutions_tsv(subs))
    return f"typos: {len(subs)} substitutions -> {out}"


def stage_phrases(cfg: PipelineConfig) -> str:
    src = _require(cfg.workdir() / "corrected.jsonl", "phrases")
    out = cfg.workdir() / "phrased.jsonl"
    log_out = cfg.workdir() / "phrases.tsv"
    with _Stage("phrases", [out, log_out]):
        docs = _read_normalized(src)
        phrase_cfg = lexicon.PhraseConfig(**cfg.section("phrase"))
        merged, merges = lexicon.detect_phrases(docs, None, phrase_cfg)
        _write_normalized(out, merged, cfg)
        meta = json.dumps(cfg.meta(), sort_keys=True)
        atomic_write_text(log_out, f"# {meta}\n" + lexicon.phrases_tsv(merges))
    return f"phrases: {len(merges)} merges -> {out}"


def stage_train(cfg: PipelineConfig) -> str:
    src = _require(cfg.workdir() / "phrased.jsonl", "train")
    out = cfg.workdir() / "model.bin"
    with _Stage("train", [out]):
        docs = _read_normalized(src)
        section = dict(cfg.section("train"))
        section.setdefault("seed", cfg.seed())
        train_cfg = TrainConfig(**section)
        losses: list[float] = []
        model = train_skip_gram(
            [d.tokens for d in docs], train_cfg,
            on_epoch=lambda e, l: losses.append(l),
        )
        save_model(model, out)
    last = f", final loss {losses[-1]:.4f}" if losses else ""
    return f"train: |V|={len(model.vocab)} d={model.dim}{last} -> {out}"


def stage_canonicalize(cfg: PipelineConfig, augmented: bool = True) -> str:
    src = _require(cfg.workdir() / "phrased.jsonl", "canonicalize")
    out = cfg.workdir() / "canonical.jsonl"
    with _Stage("canonicalize", [out]):
        docs = _read_normalized(src)
        dictionary = _load_dictionary(cfg, augmented=augmented)
        from dataclasses import replace

        rewritten = [replace(d, tokens=canonicalize(d.tokens, dictionary)) for d in docs]
        _write_normalized(out, rewritten, cfg)
    return f"canonicalize: {len(rewritten)} documents -> {out}"


def _extract_all(cfg: PipelineConfig, docs) -> dict[str, dict]:
    rules = load_rules(cfg.rules_path())
    resolve_anchors(rules, _load_dictionary(cfg))
    by_patient: dict[str, list] = {}
    for d in docs:
        by_patient.setdefault(d.patient_id, []).append(d)
    per_source: dict[str, dict] = {}
    merged: dict = {}
    for pid in sorted(by_patient):
        records = extract_records(by_patient[pid], rules)
        for source, rec in records.items():
            per_source.setdefault(source, {})[pid] = rec
        merged[pid] = merge_sources(records, pid)
    return {"per_source": per_source, "merged": merged, "rules": rules}


def stage_extract(cfg: PipelineConfig) -> str:
    src = _require(cfg.workdir() / "canonical.jsonl", "extract")
    outs = []
    with _Stage("extract", outs):
        docs = _read_normalized(src)
        result = _extract_all(cfg, docs)
        meta = json.dumps(cfg.meta(), sort_keys=True)
        for source, records in sorted(result["per_source"].items()):
            out = cfg.workdir() / f"records-{source}.csv"
            outs.append(out)
            atomic_write_text(out, records_csv(records, result["rules"], meta))
    n = sum(len(v) for v in result["per_source"].values())
    return f"extract: {n} per-source records -> {cfg.workdir()}/records-*.csv"


def stage_merge(cfg: PipelineConfig) -> str:
    src = _require(cfg.workdir() / "canonical.jsonl", "merge")
    out = cfg.workdir() / "records.csv"
    with _Stage("merge", [out]):
        docs = _read_normalized(src)
        result = _extract_all(cfg, docs)
        meta = json.dumps(cfg.meta(), sort_keys=True)
        atomic_write_text(out, records_csv(result["merged"], result["rules"], meta))
    return f"merge: {len(result['merged'])} patient records -> {out}"


def _parsing_ratios(cfg: PipelineConfig, augmented: bool) -> dict[str, float]:
    src = _require(cfg.workdir() / "phrased.jsonl", "evaluate")
    docs = _read_normalized(src)
    dictionary = _load_dictionary(cfg, augmented=augmented)
    if not augmented:
        dictionary = dictionary.seeds_only()
    from dataclasses import replace

    rewritten = [replace(d, tokens=canonicalize(d.tokens, dictionary)) for d in docs]
    rules = load_rules(cfg.rules_path())
    resolve_anchors(rules, dictionary)
    by_patient: dict[str, list] = {}
    for d in rewritten:
        by_patient.setdefault(d.patient_id, []).append(d)
    merged = {}
    for pid in sorted(by_patient):
        merged[pid] = merge_sources(extract_records(by_patient[pid], rules), pid)
    rows = [rec.value_map() for rec in merged.values()]
    return {r.indicator: metrics.extraction_rate(rows, r.indicator) for r in rules}


def stage_evaluate(cfg: PipelineConfig, compare_dictionaries: bool = False) -> str:
    records_path = _require(cfg.workdir() / "records.csv", "evaluate")
    gold_path = _require(cfg.path("gold", "gold.csv"), "evaluate")
    out_csv = cfg.workdir() / "report.csv"
    out_txt = cfg.workdir() / "report.txt"
    with _Stage("evaluate", [out_csv, out_txt]):
        gold = read_gold_csv(gold_path)
        extracted = read_records_csv(records_path)
        specs = _indicator_specs(cfg)
        report = evaluate(gold, extracted, specs)
        meta = json.dumps(cfg.meta(), sort_keys=True)
        body = report_table(report)
        if compare_dictionaries:
            with_aug = _parsing_ratios(cfg, augmented=True)
            without = _parsing_ratios(cfg, augmented=False)
            lines = ["", "parsing ratio (%) with / without suggested synonyms:"]
            for name in with_aug:
                lines.append(
                    f"  {name:<24} {metrics.round_half_up(with_aug[name]):>6.1f}"
                    f"  {metrics.round_half_up(without[name]):>6.1f}"
                )
            body += "\n".join(lines) + "\n"
        atomic_write_text(out_csv, report_csv(report, meta))
        atomic_write_text(out_txt, f"# {meta}\n" + body)
    print(body, end="")
    return f"evaluate: report -> {out_csv}"


def stage_suggest(cfg: PipelineConfig, concept_id: str, seeds: list[str],
                  accepts: list[str], rejects: list[str]) -> str:
    """One review round from the terminal: --accept/--reject decide the
    pending candidates persisted by the previous round, then the next round
    is computed and stored."""
    model_path = _require(cfg.workdir() / "model.bin", "suggest")
    model = load_model(model_path)
    dict_path = cfg.path("dictionary", "work/dictionary.json")
    if dict_path.exists():
        dictionary = SynonymDictionary.load(dict_path)
    else:
        dictionary = _load_dictionary(cfg, augmented=False)
    if concept_id not in dictionary.entries and not seeds:
        raise ValueError(f"unknown concept {concept_id!r}; give seeds to create it")
    dictionary.seed_concept(Concept(concept_id, concept_id), seeds)
    session = start_session(dictionary, concept_id)
    k = int(cfg.section("suggest").get("k", 20))
    if accepts or rejects:
        apply_decisions(session, dictionary, set(accepts), set(rejects))
    candidates = run_round(session, dictionary, model, k)
    dict_path.parent.mkdir(parents=True, exist_ok=True)
    dictionary.save(dict_path)
    lines = [f"{c.token}\t{c.similarity:.4f}\t{c.query_term}" for c in candidates]
    print("\n".join(lines) if lines else "(fixpoint: no new candidates)")
    return f"suggest: {len(candidates)} candidates for {concept_id} -> {dict_path}"


def stage_synth(out_dir: Path, patients: int, seed: int) -> str:
    # Scheduled collocation counts scale with the corpus so small corpora
    # stay within their document budget.
    scale = min(1.0, patients / 250)
    synth_cfg = synthgen.SynthConfig(
        n_patients=patients,
        seed=seed,
        phrase_occurrences=max(10, round(160 * scale)),
        trigram_occurrences=max(8, round(150 * scale)),
        control_occurrences=max(4, round(24 * scale)),
    )
    result = synthgen.generate_corpus(synth_cfg, out_dir)
    config = {
        "seed": seed,
        "paths": {
            "workdir": "work",
            "raw_corpus": "corpus.jsonl",
            "gold": "gold.csv",
            "dictionary": "work/dictionary.json",
        },
        "train": {"window": 3, "dim": 48, "epochs": 6, "learning_rate": 0.01,
                  "min_count": 2, "batch_size": 512},
    }
    atomic_write_text(out_dir / "config.json",
                      json.dumps(config, indent=2, sort_keys=True) + "\n")
    return (f"synth: {result.n_documents} documents, gold and manifest -> {out_dir} "
            f"(config: {out_dir / 'config.json'})")


def run_pipeline(cfg: PipelineConfig, threads: int = 1) -> list[str]:
    summaries = []
    runners = {
        "ingest": lambda: stage_ingest(cfg),
        "normalize": lambda: stage_normalize(cfg, threads),
        "lexstats": lambda: stage_lexstats(cfg),
        "typos": lambda: stage_typos(cfg),
        "phrases": lambda: stage_phrases(cfg),
        "train": lambda: stage_train(cfg),
        "canonicalize": lambda: stage_canonicalize(
            cfg, augmented=bool(cfg.raw.get("use_augmented_dictionary", True))
        ),
        "extract": lambda: stage_extract(cfg),
        "merge": lambda: stage_merge(cfg),
        "evaluate": lambda: stage_evaluate(cfg),
    }
    for stage in STAGES:
        if not cfg.stage_enabled(stage):
            summaries.append(f"{stage}: skipped (disabled)")
            continue
        summaries.append(runners[stage]())
    return summaries


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textruct",
        description="Structure free-text clinical notes into indicator tables.",
    )
    parser.add_argument("--version", action="version", version=f"textruct {__version__}")
    parser.add_argument("--config", default=None,
                        help="pipeline config JSON (default: ./synthetic/config.json, then ./config.json)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-document stages (1 = bitwise reproducible)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="load the raw corpus into sectioned documents")
    sub.add_parser("normalize", help="fold, tokenize, extract dates and laterality")
    sub.add_parser("lexstats", help="count unigrams and bigrams")
    sub.add_parser("typos", help="correct rare-word typos")
    sub.add_parser("phrases", help="merge collocations into phrase tokens")
    sub.add_parser("train", help="train the skip-gram embedding")
    p = sub.add_parser("suggest", help="run one synonym suggestion round")
    p.add_argument("--concept", required=True)
    p.add_argument("--seeds", default="", help="comma-separated seed tokens")
    p.add_argument("--accept", default="", help="comma-separated pending tokens to accept")
    p.add_argument("--reject", default="", help="comma-separated pending tokens to reject")
    p = sub.add_parser("serve", help="run the review service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    sub.add_parser("canonicalize", help="rewrite accepted synonyms to canonical tokens")
    sub.add_parser("extract", help="apply extraction rules per source type")
    sub.add_parser("merge", help="merge per-source records with precedence")
    p = sub.add_parser("evaluate", help="score extracted records against the gold table")
    p.add_argument("--no-augmented-dictionary", action="store_true",
                   help="also report parsing ratios with seed-only dictionaries")
    p = sub.add_parser("synth", help="generate a synthetic corpus with gold and manifest")
    p.add_argument("--out", default="synthetic")
    p.add_argument("--patients", type=int, default=250)
    p.add_argument("--seed", type=int, default=20240601)
    sub.add_parser("pipeline", help="run every stage in order")
    return parser


def _find_config(args) -> PipelineConfig:
    if args.config:
        return PipelineConfig.load(args.config)
    for candidate in (Path("synthetic/config.json"), Path("config.json")):
        if candidate.exists():
            return PipelineConfig.load(candidate)
    return PipelineConfig.default(Path.cwd())


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            print(stage_synth(Path(args.out), args.patients, args.seed))
            return 0
        cfg = _find_config(args)
        if args.command == "serve":
            import uvicorn

            from .service import create_app

            app = create_app(
                store_dir=cfg.path("dictionary", "work/dictionary.json").parent,
                model_path=_require(cfg.workdir() / "model.bin", "serve"),
                corpus_path=_require(cfg.workdir() / "phrased.jsonl", "serve"),
                concepts_path=cfg.concepts_path(),
                suggest_k=int(cfg.section("suggest").get("k", 20)),
            )
            uvicorn.run(app, host=args.host, port=args.port)
            return 0
        if args.command == "pipeline":
            for line in run_pipeline(cfg, threads=args.threads):
                print(line)
            return 0
        if args.command == "suggest":
            split = lambda s: [t for t in s.split(",") if t]
            print(stage_suggest(cfg, args.concept, split(args.seeds),
                                split(args.accept), split(args.reject)))
            return 0
        if args.command == "evaluate":
            print(stage_evaluate(cfg, compare_dictionaries=args.no_augmented_dictionary))
            return 0
        runner = {
            "ingest": lambda: stage_ingest(cfg),
            "normalize": lambda: stage_normalize(cfg, args.threads),
            "lexstats": lambda: stage_lexstats(cfg),
            "typos": lambda: stage_typos(cfg),
            "phrases": lambda: stage_phrases(cfg),
            "train": lambda: stage_train(cfg),
            "canonicalize": lambda: stage_canonicalize(
                cfg, augmented=bool(cfg.raw.get("use_augmented_dictionary", True))
            ),
            "extract": lambda: stage_extract(cfg),
            "merge": lambda: stage_merge(cfg),
        }[args.command]
        print(runner())
        return 0
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
