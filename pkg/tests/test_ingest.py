import json

import pytest

from textruct.ingest import RawDocument, load_corpus, split_sections


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def doc_row(doc_id, text="MOTIF:\nquelques mots utiles", **kw):
    row = {"doc_id": doc_id, "patient_id": "p1", "source_type": "meeting_note",
           "authored_date": "2015-03-01", "text": text}
    row.update(kw)
    return row


class TestLoadCorpus:
    def test_empty_file_gives_empty_list(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text("", encoding="utf-8")
        assert load_corpus(p, "jsonl") == []

    def test_three_lines_in_order(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [doc_row("a"), doc_row("b"), doc_row("c")])
        docs = load_corpus(p, "jsonl")
        assert [d.doc_id for d in docs] == ["a", "b", "c"]

    def test_duplicate_doc_id_names_both_lines(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [doc_row("dup"), doc_row("dup")])
        with pytest.raises(ValueError, match=r"lines 1 and 2"):
            load_corpus(p, "jsonl")

    def test_malformed_line_names_line_number(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text(json.dumps(doc_row("a")) + "\n{broken\n", encoding="utf-8")
        with pytest.raises(ValueError, match="line 2"):
            load_corpus(p, "jsonl")

    def test_unknown_source_type_rejected(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [doc_row("a", source_type="fax")])
        with pytest.raises(ValueError, match="source_type"):
            load_corpus(p, "jsonl")

    def test_empty_text_rejected(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [doc_row("a", text="   ")])
        with pytest.raises(ValueError, match="empty text"):
            load_corpus(p, "jsonl")

    def test_bad_date_rejected(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [doc_row("a", authored_date="03/07/2015")])
        with pytest.raises(ValueError, match="authored_date"):
            load_corpus(p, "jsonl")

    def test_null_date_allowed(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [doc_row("a", authored_date=None)])
        assert load_corpus(p, "jsonl")[0].authored_date is None

    def test_plain_dir(self, tmp_path):
        (tmp_path / "b.txt").write_text("second document", encoding="utf-8")
        (tmp_path / "a.txt").write_text("first document", encoding="utf-8")
        docs = load_corpus(tmp_path, "plain_dir")
        assert [d.doc_id for d in docs] == ["a", "b"]
        assert docs[0].source_type == "meeting_note"

    def test_deterministic(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [doc_row("a"), doc_row("b")])
        first = load_corpus(p, "jsonl")
        second = load_corpus(p, "jsonl")
        assert first == second


class TestSplitSections:
    def test_two_headings(self):
        got = split_sections("ANTECEDENTS:\nfoo\nHISTOLOGIE:\nbar")
        assert got == [("ANTECEDENTS", "foo"), ("HISTOLOGIE", "bar")]

    def test_no_heading_single_section(self):
        assert split_sections("just text") == [("", "just text")]

    def test_blank_line_run_collapses(self):
        got = split_sections("alpha\n\n\n\nbeta")
        assert got == [("", "alpha\n\nbeta")]

    def test_whitespace_runs_collapse(self):
        got = split_sections("un    deux\t\ttrois")
        assert got == [("", "un deux trois")]

    def test_uppercase_line_is_heading(self):
        got = split_sections("CONCLUSION\nle reste du texte")
        assert got == [("CONCLUSION", "le reste du texte")]

    def test_empty_bodies_dropped(self):
        got = split_sections("MOTIF:\nEXAMEN:\ncontenu")
        assert got == [("EXAMEN", "contenu")]

    def test_content_preserved_modulo_whitespace(self, tiny_dataset):
        corpus = tiny_dataset["result"].corpus_path
        docs = load_corpus(corpus, "jsonl")
        raw = [json.loads(l) for l in corpus.read_text(encoding="utf-8").splitlines()]
        for doc, row in zip(docs, raw):
            joined = "\n".join(b for _h, b in doc.sections)
            source_lines = [
                " ".join(l.split()) for l in row["text"].splitlines()
                if l.strip() and not (l.rstrip().endswith(":") and l.strip().isupper())
            ]
            assert " ".join(joined.split()) == " ".join(" ".join(source_lines).split())
