import json
from pathlib import Path

import pytest

from textruct.cli import main as cli_main
from textruct.synthgen import generate_corpus

from conftest import TINY_SYNTH, TINY_TRAIN


def make_workspace(root: Path) -> Path:
    generate_corpus(TINY_SYNTH, root)
    config = {
        "seed": 42,
        "paths": {"workdir": "work", "raw_corpus": "corpus.jsonl",
                  "gold": "gold.csv", "dictionary": "work/dictionary.json"},
        "train": TINY_TRAIN,
    }
    (root / "config.json").write_text(json.dumps(config), encoding="utf-8")
    return root / "config.json"


class TestBasics:
    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["frobnicate"])
        assert exc.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["--version"])
        assert exc.value.code == 0
        assert "textruct" in capsys.readouterr().out

    def test_missing_stage_input_names_stage(self, tmp_path, capsys):
        cfg = make_workspace(tmp_path)
        rc = cli_main(["--config", str(cfg), "normalize"])
        assert rc == 1
        assert "normalize" in capsys.readouterr().err

    def test_missing_config_reported(self, capsys):
        rc = cli_main(["--config", "/nonexistent/config.json", "ingest"])
        assert rc == 1
        assert "config" in capsys.readouterr().err


class TestPipeline:
    def test_synth_then_pipeline_produces_report(self, tmp_path, capsys):
        rc = cli_main(["synth", "--out", str(tmp_path / "ws"), "--patients", "12",
                       "--seed", "42"])
        assert rc == 0
        cfg_path = tmp_path / "ws" / "config.json"
        cfg = json.loads(cfg_path.read_text(encoding="utf-8"))
        cfg["train"] = TINY_TRAIN
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        rc = cli_main(["--config", str(cfg_path), "pipeline"])
        assert rc == 0
        out = capsys.readouterr().out
        assert (tmp_path / "ws" / "work" / "report.csv").exists()
        assert "evaluate" in out

    def test_pipeline_deterministic_across_runs(self, tmp_path):
        digests = []
        for name in ("one", "two"):
            ws = tmp_path / name
            ws.mkdir()
            cfg = make_workspace(ws)
            assert cli_main(["--config", str(cfg), "--threads", "1", "pipeline"]) == 0
            work = ws / "work"
            digest = {
                p.name: p.read_bytes()
                for p in sorted(work.iterdir())
                if p.is_file()
            }
            digests.append(digest)
        assert digests[0].keys() == digests[1].keys()
        for name in digests[0]:
            assert digests[0][name] == digests[1][name], f"{name} differs between runs"

    def test_stage_toggles_respected(self, tmp_path, capsys):
        ws = tmp_path / "ws"
        ws.mkdir()
        cfg_path = make_workspace(ws)
        cfg = json.loads(cfg_path.read_text(encoding="utf-8"))
        cfg["stages"] = {"evaluate": False}
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        assert cli_main(["--config", str(cfg_path), "pipeline"]) == 0
        out = capsys.readouterr().out
        assert "evaluate: skipped" in out
        assert not (ws / "work" / "report.csv").exists()

    def test_threads_flag_gives_same_normalized_output(self, tmp_path):
        outputs = []
        for threads, name in (("1", "a"), ("4", "b")):
            ws = tmp_path / name
            ws.mkdir()
            cfg = make_workspace(ws)
            assert cli_main(["--config", str(cfg), "--threads", threads, "ingest"]) == 0
            assert cli_main(["--config", str(cfg), "--threads", threads, "normalize"]) == 0
            outputs.append((ws / "work" / "normalized.jsonl").read_bytes())
        assert outputs[0] == outputs[1]


class TestEvaluateComparison:
    def test_no_augmented_dictionary_reports_both_ratios(self, tmp_path, capsys):
        ws = tmp_path / "ws"
        ws.mkdir()
        cfg = make_workspace(ws)
        assert cli_main(["--config", str(cfg), "pipeline"]) == 0
        capsys.readouterr()
        rc = cli_main(["--config", str(cfg), "evaluate", "--no-augmented-dictionary"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "parsing ratio" in out
        assert "with / without" in out


class TestSuggest:
    def test_round_trip_with_decisions(self, tiny_workspace, tmp_path, monkeypatch,
                                       capsys):
        # point the dictionary at a scratch path so the shared workspace
        # stays pristine; this also exercises the env override
        scratch = tmp_path / "dict.json"
        monkeypatch.setenv("TEXTRUCT_DICTIONARY", str(scratch))
        cfg = str(tiny_workspace["config"])
        assert cli_main(["--config", cfg, "suggest", "--concept", "tumeur"]) == 0
        out = capsys.readouterr().out
        first = [ln.split("\t")[0] for ln in out.splitlines() if "\t" in ln]
        assert first, "first round should propose candidates"
        assert scratch.exists()
        accept, reject = first[0], first[1]
        assert cli_main(["--config", cfg, "suggest", "--concept", "tumeur",
                         "--accept", accept, "--reject", reject]) == 0
        from textruct.syndict import SynonymDictionary

        d = SynonymDictionary.load(scratch)
        assert accept in d.entry("tumeur").accepted
        assert reject in d.entry("tumeur").rejected


class TestEnvOverrides:
    def test_path_override_via_environment(self, tmp_path, monkeypatch, capsys):
        ws = tmp_path / "ws"
        ws.mkdir()
        cfg = make_workspace(ws)
        elsewhere = tmp_path / "elsewhere.jsonl"
        elsewhere.write_text("", encoding="utf-8")
        monkeypatch.setenv("TEXTRUCT_RAW_CORPUS", str(elsewhere))
        rc = cli_main(["--config", str(cfg), "ingest"])
        assert rc == 0
        assert "0 documents" in capsys.readouterr().out
