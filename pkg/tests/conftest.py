import logging
import random
from pathlib import Path

import pytest

from textruct.cli import main as cli_main
from textruct.synthgen import SynthConfig, generate_corpus, read_manifest

logging.getLogger("textruct").setLevel(logging.ERROR)

TINY_SYNTH = SynthConfig(
    n_patients=12,
    phrase_occurrences=40,
    trigram_occurrences=36,
    control_occurrences=16,
    seed=42,
)

TINY_TRAIN = {"window": 2, "dim": 16, "epochs": 5, "learning_rate": 0.01,
              "min_count": 2, "batch_size": 256}


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """A small generated corpus with its gold table and manifest."""
    out = tmp_path_factory.mktemp("tiny")
    result = generate_corpus(TINY_SYNTH, out)
    return {
        "dir": out,
        "result": result,
        "manifest": read_manifest(result.manifest_path),
    }


@pytest.fixture(scope="session")
def tiny_workspace(tmp_path_factory):
    """Tiny corpus pushed through the pipeline stages up to a trained model,
    for service and CLI tests."""
    import json

    ws = tmp_path_factory.mktemp("tiny_ws")
    generate_corpus(TINY_SYNTH, ws)
    config = {
        "seed": 42,
        "paths": {"workdir": "work", "raw_corpus": "corpus.jsonl",
                  "gold": "gold.csv", "dictionary": "work/dictionary.json"},
        "train": TINY_TRAIN,
    }
    (ws / "config.json").write_text(json.dumps(config), encoding="utf-8")
    for cmd in ("ingest", "normalize", "lexstats", "typos", "phrases", "train"):
        assert cli_main(["--config", str(ws / "config.json"), cmd]) == 0
    return {"dir": ws, "config": ws / "config.json",
            "manifest": read_manifest(ws / "manifest.jsonl")}


def make_micro_streams(n_sentences: int = 400, seed: int = 0) -> list[list[str]]:
    """Token streams where "alpha" and "beta" share an identical context
    distribution, so a trained model must place them close together."""
    rng = random.Random(seed)
    contexts = [f"ctx{i}" for i in range(8)]
    noise = [f"noise{i}" for i in range(15)]
    streams = []
    for i in range(n_sentences):
        word = "alpha" if i % 2 == 0 else "beta"
        streams.append([
            rng.choice(noise), rng.choice(contexts), word,
            rng.choice(contexts), rng.choice(noise),
        ])
    return streams
