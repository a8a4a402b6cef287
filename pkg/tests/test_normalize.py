import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textruct.normalize import (
    DATE_PLACEHOLDER,
    build_timeline,
    detect_laterality,
    extract_dates,
    fold_accents,
    NormalizedDocument,
    tokenize,
)


class TestFoldAccents:
    def test_moliere(self):
        assert fold_accents("molière") == "moliere"

    def test_unaccented_identity(self):
        assert fold_accents("abc123") == "abc123"

    def test_french_sample(self):
        assert fold_accents("âgée, présentée à l'hôpital") == "agee, presentee a l'hopital"

    @given(st.text(max_size=80))
    @settings(max_examples=200)
    def test_idempotent(self, s):
        assert fold_accents(fold_accents(s)) == fold_accents(s)

    @given(st.text(max_size=80))
    @settings(max_examples=200)
    def test_length_preserved(self, s):
        assert len(fold_accents(s)) == len(s)


class TestTokenize:
    def test_punctuation_split_and_lowercase(self):
        assert tokenize("Carcinome canalaire, grade II.") == [
            "carcinome", "canalaire", "grade", "ii",
        ]

    def test_alphanumeric_mix_kept_whole(self):
        assert tokenize("HER2") == ["her2"]

    def test_empty(self):
        assert tokenize("") == []

    def test_date_shape_kept_whole(self):
        assert tokenize("vu le 06/07/2017.") == ["vu", "le", "06/07/2017"]

    def test_decimal_kept_whole(self):
        assert tokenize("2,2 cm") == ["2,2", "cm"]

    def test_underscore_never_in_tokens(self):
        assert tokenize("a_b c") == ["a", "b", "c"]

    @given(st.text(max_size=120))
    @settings(max_examples=200)
    def test_no_empty_tokens(self, s):
        assert all(tokenize(s))

    def test_commutes_with_fold_on_corpus_text(self, tiny_dataset):
        import json

        lines = tiny_dataset["result"].corpus_path.read_text(encoding="utf-8")
        for line in lines.splitlines()[:40]:
            text = json.loads(line)["text"]
            assert tokenize(fold_accents(text)) == [fold_accents(t) for t in tokenize(text)]


class TestExtractDates:
    def test_numeric_day_first(self):
        toks, mentions = extract_dates(["vu", "le", "06/07/2017"])
        assert toks == ["vu", "le", DATE_PLACEHOLDER]
        assert mentions == [(2, "2017-07-06")]

    def test_month_name_span(self):
        toks, mentions = extract_dates(["6", "juillet", "2017"])
        assert toks == [DATE_PLACEHOLDER]
        assert mentions == [(0, "2017-07-06")]

    def test_no_dates_unchanged(self):
        toks, mentions = extract_dates(["tumeur", "du", "sein"])
        assert toks == ["tumeur", "du", "sein"]
        assert mentions == []

    def test_invalid_month_left_untouched_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="textruct.normalize"):
            toks, mentions = extract_dates(["13/13/2017"])
        assert toks == ["13/13/2017"]
        assert mentions == []
        assert any("ambiguous date" in r.message for r in caplog.records)

    def test_two_digit_year_pivot(self):
        _, m1 = extract_dates(["06/07/99"])
        _, m2 = extract_dates(["06/07/17"])
        assert m1 == [(0, "1999-07-06")]
        assert m2 == [(0, "2017-07-06")]

    def test_premier_day_form(self):
        toks, mentions = extract_dates(["le", "1er", "mars", "2016"])
        assert toks == ["le", DATE_PLACEHOLDER]
        assert mentions == [(1, "2016-03-01")]

    def test_idempotent(self):
        toks, _ = extract_dates(["vu", "06/07/2017", "puis", "8", "mai", "2018"])
        again, mentions = extract_dates(toks)
        assert again == toks
        assert mentions == []

    def test_non_date_multiset_preserved(self):
        from collections import Counter

        tokens = ["a", "06/07/2017", "b", "a", "12", "mars", "2001", "c"]
        out, _ = extract_dates(tokens)
        kept = Counter(t for t in out if t != DATE_PLACEHOLDER)
        assert kept == Counter(["a", "b", "a", "c"])

    def test_mentions_sorted_and_pointing_at_placeholders(self):
        tokens = ["le", "01/02/2003", "et", "le", "04/05/2006"]
        out, mentions = extract_dates(tokens)
        assert [i for i, _ in mentions] == sorted(i for i, _ in mentions)
        assert all(out[i] == DATE_PLACEHOLDER for i, _ in mentions)


class TestLaterality:
    def test_left(self):
        assert detect_laterality(["sein", "gauche"]) == "left"

    def test_bilateral(self):
        assert detect_laterality(["bilaterale"]) == "both"

    def test_unknown(self):
        assert detect_laterality(["tumeur"]) == "unknown"

    def test_both_sides_mentioned(self):
        assert detect_laterality(["sein", "gauche", "et", "sein", "droit"]) == "both"

    def test_right(self):
        assert detect_laterality(["mastectomie", "droite"]) == "right"


def _doc(doc_id, mentions):
    return NormalizedDocument(
        doc_id=doc_id, patient_id="p", source_type="meeting_note",
        authored_date=None, tokens=[DATE_PLACEHOLDER] * 10, date_mentions=mentions,
    )


class TestTimeline:
    def test_sorted_across_docs(self):
        tl = build_timeline([
            _doc("d1", [(0, "2016-01-02")]),
            _doc("d2", [(3, "2015-12-31")]),
        ])
        assert [e[0] for e in tl.entries] == ["2015-12-31", "2016-01-02"]

    def test_empty(self):
        assert build_timeline([_doc("d1", [])]).entries == []

    def test_equal_dates_tie_break(self):
        tl = build_timeline([
            _doc("d2", [(5, "2016-01-02")]),
            _doc("d1", [(7, "2016-01-02"), (2, "2016-01-02")]),
        ])
        assert tl.entries == [
            ("2016-01-02", "d1", 2),
            ("2016-01-02", "d1", 7),
            ("2016-01-02", "d2", 5),
        ]
