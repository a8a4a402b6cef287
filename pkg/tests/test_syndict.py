import numpy as np
import pytest

from textruct.embedding import EmbeddingModel, TrainConfig, train_skip_gram
from textruct.syndict import (
    Candidate,
    Concept,
    SynonymDictionary,
    apply_decisions,
    canonicalize,
    replay_entry,
    run_round,
    start_session,
    suggest,
)

from conftest import make_micro_streams


def dict_with(concept="cancer", canonical="cancer", seeds=()):
    d = SynonymDictionary()
    d.seed_concept(Concept(concept, canonical), list(seeds))
    return d


@pytest.fixture(scope="module")
def micro_model() -> EmbeddingModel:
    cfg = TrainConfig(window=2, dim=12, epochs=25, learning_rate=0.02,
                      seed=1, min_count=2, batch_size=128)
    return train_skip_gram(make_micro_streams(400), cfg)


class TestSeedConcept:
    def test_seeds_join_canonical(self):
        d = dict_with(seeds=["carcinome", "tumeur_maligne"])
        assert d.entry("cancer").accepted == {"cancer", "carcinome", "tumeur_maligne"}

    def test_empty_seed_list(self):
        d = dict_with()
        assert d.entry("cancer").accepted == {"cancer"}

    def test_duplicate_seeds_deduplicated(self):
        d = dict_with(seeds=["carcinome", "carcinome"])
        assert d.entry("cancer").accepted == {"cancer", "carcinome"}

    def test_seeding_a_rejected_token_is_an_error(self):
        d = dict_with()
        d.entry("cancer").rejected.add("benin")
        with pytest.raises(ValueError, match="benin"):
            d.seed_concept(Concept("cancer", "cancer"), ["benin"])


class TestSuggest:
    def test_planted_variant_proposed(self, micro_model):
        d = dict_with("alpha", "alpha")
        session = start_session(d, "alpha")
        cands = suggest(session, micro_model, d, k=5)
        assert "beta" in [c.token for c in cands]

    def test_already_accepted_excluded(self, micro_model):
        d = dict_with("alpha", "alpha", seeds=["beta"])
        session = start_session(d, "alpha")
        cands = suggest(session, micro_model, d, k=5)
        assert "beta" not in [c.token for c in cands]

    def test_rejected_never_reappears(self, micro_model):
        d = dict_with("alpha", "alpha")
        session = start_session(d, "alpha")
        for _ in range(6):
            cands = run_round(session, d, micro_model, 5)
            if not cands:
                break
            assert "beta" not in d.entry("alpha").rejected or all(
                c.token != "beta" for c in cands
            )
            rejects = {c.token for c in cands}
            apply_decisions(session, d, set(), rejects)
            assert not rejects & {c.token for c in d.entry("alpha").pending}

    def test_oov_frontier_warns_and_returns_empty(self, micro_model, caplog):
        import logging

        d = dict_with("ghost", "notinvocab")
        session = start_session(d, "ghost")
        with caplog.at_level(logging.WARNING, logger="textruct.syndict"):
            assert suggest(session, micro_model, d, k=5) == []
        assert any("vocabulary" in r.message for r in caplog.records)

    def test_candidates_sorted_by_similarity(self, micro_model):
        d = dict_with("alpha", "alpha")
        session = start_session(d, "alpha")
        cands = suggest(session, micro_model, d, k=10)
        sims = [c.similarity for c in cands]
        assert sims == sorted(sims, reverse=True)


class TestApplyDecisions:
    def _pending(self, d, tokens):
        d.entry("cancer").pending = [Candidate(t, 0.9, "cancer") for t in tokens]

    def test_bookkeeping(self):
        d = dict_with()
        session = start_session(d, "cancer")
        self._pending(d, ["a", "b", "c", "d", "e"])
        apply_decisions(session, d, {"a", "b"}, set())
        entry = d.entry("cancer")
        assert entry.accepted == {"cancer", "a", "b"}
        assert entry.rejected == set()
        assert entry.pending == []
        assert session.frontier == ["a", "b"]
        assert session.iteration == 1
        assert entry.history[-1].proposed == ["a", "b", "c", "d", "e"]

    def test_accept_nothing_leads_to_fixpoint(self, micro_model):
        d = dict_with("alpha", "alpha")
        session = start_session(d, "alpha")
        cands = run_round(session, d, micro_model, 5)
        apply_decisions(session, d, set(), {c.token for c in cands})
        run_round(session, d, micro_model, 5)
        assert session.fixpoint  # empty frontier proposes nothing

    def test_overlapping_decisions_rejected(self):
        d = dict_with()
        session = start_session(d, "cancer")
        self._pending(d, ["a"])
        with pytest.raises(ValueError, match="both accepted and rejected"):
            apply_decisions(session, d, {"a"}, {"a"})

    def test_non_pending_token_rejected(self):
        d = dict_with()
        session = start_session(d, "cancer")
        self._pending(d, ["a"])
        with pytest.raises(ValueError, match="stray|non-pending"):
            apply_decisions(session, d, {"zz"}, set())

    def test_monotonic_growth_and_replay(self, micro_model):
        d = dict_with("alpha", "alpha")
        session = start_session(d, "alpha")
        sizes = []
        for _ in range(5):
            cands = run_round(session, d, micro_model, 6)
            if not cands:
                break
            entry = d.entry("alpha")
            before = (len(entry.accepted), len(entry.rejected))
            accepts = {cands[0].token}
            apply_decisions(session, d, accepts, {c.token for c in cands[1:]})
            after = (len(entry.accepted), len(entry.rejected))
            assert after[0] >= before[0] and after[1] >= before[1]
            sizes.append(after)
        accepted, rejected = replay_entry(d.entry("alpha"))
        assert accepted == d.entry("alpha").accepted
        assert rejected == d.entry("alpha").rejected


class TestCanonicalize:
    def test_idc_rewrite(self):
        d = SynonymDictionary()
        d.seed_concept(Concept("idc", "idc"),
                       ["invasive_ductal_carcinoma", "infiltrating_ductal_carcinoma"])
        out = canonicalize(["diagnosis", "invasive_ductal_carcinoma", "confirmed"], d)
        assert out == ["diagnosis", "idc", "confirmed"]

    def test_merged_phrase_not_matched_by_component(self):
        d = SynonymDictionary()
        d.seed_concept(Concept("mast", "mastectomy"), [])
        out = canonicalize(["partial_mastectomy", "then", "mastectomy"], d)
        assert out == ["partial_mastectomy", "then", "mastectomy"]

    def test_empty_dictionary_identity(self):
        d = SynonymDictionary()
        toks = ["a", "b"]
        assert canonicalize(toks, d) == toks

    def test_multi_token_span_longest_match(self):
        d = SynonymDictionary()
        d.seed_concept(Concept("idc", "idc"), ["ductal_carcinoma"])
        d.seed_concept(Concept("carc", "carcinoma"), [])
        out = canonicalize(["ductal", "carcinoma", "stage"], d)
        assert out == ["idc", "stage"]

    def test_idempotent(self):
        d = SynonymDictionary()
        d.seed_concept(Concept("idc", "idc"), ["invasive_ductal_carcinoma"])
        once = canonicalize(["invasive_ductal_carcinoma", "seen"], d)
        assert canonicalize(once, d) == once

    def test_cross_concept_conflict_detected_at_validation(self):
        d = SynonymDictionary()
        d.seed_concept(Concept("a", "alpha"), ["shared"])
        d.seed_concept(Concept("b", "beta"), ["shared"])
        with pytest.raises(ValueError, match="shared"):
            canonicalize(["shared"], d)


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        d = dict_with(seeds=["carcinome"])
        entry = d.entry("cancer")
        entry.rejected.add("benin")
        entry.pending = [Candidate("tumeur", 0.8, "cancer")]
        from textruct.syndict import ReviewRound

        entry.history.append(ReviewRound(0, ["tumeur", "benin"], ["carcinome"], ["benin"]))
        path = tmp_path / "dict.json"
        d.save(path)
        back = SynonymDictionary.load(path)
        e = back.entry("cancer")
        assert e.accepted == entry.accepted
        assert e.rejected == entry.rejected
        assert e.pending[0].token == "tumeur"
        assert e.history[0].accepted == ["carcinome"]

    def test_seeds_only_strips_augmentation(self):
        d = dict_with(seeds=["carcinome"])
        d.entry("cancer").accepted.add("discovered")
        seeded = d.seeds_only()
        assert seeded.entry("cancer").accepted == {"cancer", "carcinome"}
        # original untouched
        assert "discovered" in d.entry("cancer").accepted
