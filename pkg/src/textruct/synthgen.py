"""Deterministic generator of French-flavored clinical corpora with planted
ground truth: indicator values, synonym variants with matched contexts,
single-edit typos and phrase collocations, all recorded in a manifest.

The real corpora this pipeline targets are private; every acceptance check
runs against corpora produced here instead.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from .corpusio import write_jsonl, atomic_write_text
from .lexicon import _bounded_edit_distance
from .normalize import fold_accents

# ---------------------------------------------------------------------------
# Planted vocabulary
# ---------------------------------------------------------------------------

# concept -> (canonical, [(variant, weight)]), weights relative to a 0.6
# canonical share. Variants are emitted in exactly the same sentence slots as
# their canonical, so their corpus contexts match by construction.
PLANTED_SYNONYMS: dict[str, tuple[str, list[tuple[str, float]]]] = {
    "tumeur": ("tumeur", [("neoplasie", 0.4)]),
    "grade": ("grade", [("gr", 0.25), ("g", 0.15)]),
    "carcinome": ("carcinome", [("epithelioma", 0.4)]),
    "oestrogenes": ("oestrogenes", [("estrogenes", 0.4)]),
    "progesterone": ("progesterone", [("progest", 0.4)]),
    "her2": ("her2", [("erbb2", 0.4)]),
    "ki67": ("ki67", [("mib1", 0.4)]),
    "ganglions": ("ganglions", [("adenopathies", 0.4)]),
    "positifs": ("positifs", [("pos", 0.4)]),
    "negatifs": ("negatifs", [("neg", 0.4)]),
    "mastectomie": ("mastectomie", [("mammectomie", 0.4)]),
    "chimiotherapie": ("chimiotherapie", [("chimio", 0.4)]),
    # Concepts without planted variants still go through the review loop.
    "histologie": ("histologie", []),
    "recidive": ("recidive", []),
}

PHRASE_BIGRAMS = [("bilan", "preoperatoire"), ("suites", "operatoires")]
PHRASE_TRIGRAM = ("reunion", "concertation", "pluridisciplinaire")
CONTROL_PAIRS = [
    ("surveillance", "reguliere"),
    ("evolution", "favorable"),
    ("consultation", "ulterieure"),
]

SUBTYPES = [("canalaire", 0.4), ("lobulaire", 0.3), ("tubuleux", 0.15), ("mucineux", 0.15)]
SBR = [("i", 0.3), ("ii", 0.45), ("iii", 0.25)]

_VERBS_SG = ["juge", "evalue", "estime", "considere"]
_VERBS_PL = ["juges", "evalues", "estimes", "consideres"]

# Filler pools. The "glue" fillers exist to keep function words (des, aux, la,
# une, par, au, type...) frequent corpus-wide: every token adjacent to an
# extraction anchor must be common enough that the discounted co-occurrence
# score of the pair stays under the merge thresholds.
_GLUE_FILLERS = [
    ["discussion", "des", "resultats", "avec", "la", "patiente"],
    ["relecture", "des", "lames", "par", "une", "equipe", "de", "reference"],
    ["courrier", "adressé", "au", "médecin", "traitant", "et", "aux", "correspondants"],
    ["presentation", "d'un", "dossier", "en", "cours", "de", "suivi"],
    ["resultats", "de", "type", "habituel", "transmis", "aux", "equipes"],
    ["realisation", "d'une", "imagerie", "en", "complement"],
    ["verification", "de", "la", "concordance", "avec", "la", "demande"],
]
_PLAIN_FILLERS = [
    ["examen", "clinique", "normal"],
    ["antécédents", "familiaux", "notés"],
    ["bonne", "tolérance", "du", "traitement"],
]


@dataclass
class SynthConfig:
    n_patients: int = 250
    meeting_notes: int = 4
    hospitalization_letters: int = 2
    discharge_letters: int = 2
    typo_rate: float = 0.02
    split_fraction: float = 0.25       # patients whose her2/ki67 live only in letters
    indicator_presence: float = 0.96   # chance an indicator is documented at all
    phrase_occurrences: int = 160      # per planted bigram
    trigram_occurrences: int = 150
    control_occurrences: int = 24      # per control pair; must stay <= delta
    seed: int = 20240601

    def __post_init__(self):
        for name in ("typo_rate", "split_fraction", "indicator_presence"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")
        if self.n_patients < 1:
            raise ValueError("n_patients must be >= 1")
        n_docs = self.n_patients * (
            self.meeting_notes + self.hospitalization_letters + self.discharge_letters
        )
        budget = max(self.phrase_occurrences, self.trigram_occurrences,
                     self.control_occurrences)
        if budget > n_docs:
            raise ValueError(
                f"scheduled phrase occurrences ({budget}) exceed the document budget ({n_docs})"
            )


@dataclass
class _Doc:
    doc_id: str
    patient_id: str
    source_type: str
    authored: date
    sections: list[tuple[str, list[list[str]]]] = field(default_factory=list)

    def sentences(self):
        for _h, sents in self.sections:
            yield from sents

    def words(self) -> list[str]:
        return [w for s in self.sentences() for w in s]


@dataclass
class SynthResult:
    corpus_path: Path
    gold_path: Path
    manifest_path: Path
    n_documents: int


class _Generator:
    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.docs: list[_Doc] = []
        self.gold: dict[str, dict[str, str]] = {}
        self.variant_counts: dict[str, int] = {}
        self.concept_docs: dict[str, set[str]] = {c: set() for c in PLANTED_SYNONYMS}
        self.typos: list[dict] = []
        self.eligible_typo_instances = 0
        self.typo_instances = 0
        # per-(patient, concept) preferred surface form
        self._prefs: dict[tuple[str, str], str] = {}

    # -- surface form choice ------------------------------------------------

    def _draw_form(self, concept: str) -> str:
        canonical, variants = PLANTED_SYNONYMS[concept]
        population = [canonical] + [v for v, _ in variants]
        weights = [0.6] + [w for _, w in variants]
        return self.rng.choices(population, weights=weights)[0]

    def _pick_form(self, patient_id: str, concept: str) -> str:
        # Writers have a per-patient habit but occasionally switch form.
        key = (patient_id, concept)
        if key not in self._prefs:
            self._prefs[key] = self._draw_form(concept)
        form = self._prefs[key]
        if PLANTED_SYNONYMS[concept][1] and self.rng.random() < 0.15:
            form = self._draw_form(concept)
        return form

    def concept_token(self, doc: _Doc, concept: str) -> str:
        form = self._pick_form(doc.patient_id, concept)
        canonical, _ = PLANTED_SYNONYMS[concept]
        if form != canonical:
            self.variant_counts[form] = self.variant_counts.get(form, 0) + 1
        self.concept_docs[concept].add(doc.doc_id)
        return form

    # -- sentence builders ----------------------------------------------------

    def _date_words(self, d: date) -> list[str]:
        if self.rng.random() < 0.2:
            months = ["janvier", "fevrier", "mars", "avril", "mai", "juin", "juillet",
                      "aout", "septembre", "octobre", "novembre", "decembre"]
            return [str(d.day), months[d.month - 1], str(d.year)]
        return [f"{d.day:02d}/{d.month:02d}/{d.year}"]

    def _verb(self, plural: bool) -> list[str]:
        if self.rng.random() < 0.3:
            return []
        pool = _VERBS_PL if plural else _VERBS_SG
        return [self.rng.choice(pool)]

    def _histology(self, doc: _Doc, values: dict) -> list[str]:
        self.concept_docs["histologie"].add(doc.doc_id)
        article = self.rng.choice(["d'un", "de"])
        out = ["histologie", "en", "faveur", article]
        if values["cancer_type"] == "carcinoma":
            out.append(self.concept_token(doc, "carcinome"))
            out += ["de", "type", values["_subtype_token"]]
        else:
            out.append("sarcome")
        return out

    def _grade(self, doc: _Doc, values: dict) -> list[str]:
        return [
            self.concept_token(doc, "grade"),
            self.rng.choice(_VERBS_SG),
            values["_sbr_token"],
        ]

    def _nodes(self, doc: _Doc, values: dict) -> list[str]:
        sampled = self.rng.randint(10, 15)
        return ["curage", "des", self.concept_token(doc, "ganglions"),
                values["node_count"], "sur", str(sampled)]

    def _ki67(self, doc: _Doc, values: dict) -> list[str]:
        out = [self.concept_token(doc, "ki67"), *self._verb(plural=False),
               "a", values["ki67_percent"]]
        if self.rng.random() < 0.5:
            out += ["pour", "cent"]
        return out

    def _tumor(self, doc: _Doc, values: dict) -> list[str]:
        mm = int(values["tumor_size_mm"])
        if self.rng.random() < 0.25:
            whole, tenth = divmod(mm, 10)
            size = [f"{whole},{tenth}", "cm"] if tenth else [str(whole), "cm"]
        else:
            size = [str(mm), "mm"]
        side = self.rng.choice([
            ["du", "sein", values["_side"]],
            ["au", "sein", values["_side"]],
            ["sur", "le", "sein", values["_side"]],
        ])
        return ["une", self.concept_token(doc, "tumeur"), "de", *size, *side]

    def _receptor(self, doc: _Doc, anchor_concept: str, value: str,
                  lead: list[str]) -> list[str]:
        value_concept = "positifs" if value == "positive" else "negatifs"
        return [*lead, self.concept_token(doc, anchor_concept),
                *self._verb(plural=True), self.concept_token(doc, value_concept)]

    def _her2(self, doc: _Doc, values: dict) -> list[str]:
        value = "positif" if values["her2"] == "positive" else "negatif"
        return [self.concept_token(doc, "her2"), *self._verb(plural=False), value]

    def _recurrence(self, doc: _Doc, values: dict) -> list[str]:
        self.concept_docs["recidive"].add(doc.doc_id)
        if values["recurrence"] == "false":
            return ["pas", "de", "recidive"]
        tail = self.rng.choice(["observee", "suspectee", "confirmee", "notee"])
        return ["recidive", "de", "la", "maladie", tail]

    def _treatment(self, doc: _Doc) -> list[str]:
        lead = self.rng.choice([["prise", "en", "charge", "par"],
                                ["traitement", "chirurgical", "par"]])
        return [*lead, self.concept_token(doc, "mastectomie")]

    def _chemo(self, doc: _Doc) -> list[str]:
        return ["traitement", "par", self.concept_token(doc, "chimiotherapie"),
                "de", "type", "adjuvant"]

    # -- patients and documents ----------------------------------------------

    def _sample_patient(self, idx: int) -> dict:
        rng = self.rng
        pid = f"p{idx:04d}"
        present = lambda: rng.random() < self.cfg.indicator_presence
        values: dict = {"patient_id": pid}
        sbr = rng.choices([s for s, _ in SBR], weights=[w for _, w in SBR])[0]
        values["_sbr_token"] = sbr
        values["sbr_grade"] = sbr.upper() if present() else None
        values["estrogen_receptor"] = (
            ("positive" if rng.random() < 0.7 else "negative") if present() else None
        )
        values["progesterone_receptor"] = (
            ("positive" if rng.random() < 0.6 else "negative") if present() else None
        )
        values["her2"] = ("positive" if rng.random() < 0.2 else "negative") if present() else None
        values["ki67_percent"] = str(rng.choice(range(5, 85, 5))) if present() else None
        values["node_count"] = str(rng.randint(0, 9)) if present() else None
        values["tumor_size_mm"] = str(rng.randint(6, 40)) if present() else None
        if present():
            if rng.random() < 0.92:
                values["cancer_type"] = "carcinoma"
                sub = rng.choices([s for s, _ in SUBTYPES],
                                  weights=[w for _, w in SUBTYPES])[0]
                values["_subtype_token"] = sub
                values["cancer_subtype"] = {
                    "canalaire": "ductal", "lobulaire": "lobular",
                    "tubuleux": "tubular", "mucineux": "mucinous",
                }[sub]
            else:
                values["cancer_type"] = "sarcoma"
                values["cancer_subtype"] = None
        else:
            values["cancer_type"] = None
            values["cancer_subtype"] = None
        r = rng.random()
        values["recurrence"] = "true" if r < 0.2 else ("false" if r < 0.8 else None)
        values["_side"] = rng.choice(["gauche", "droit"])
        return values

    def _meeting_note(self, pid: str, k: int, base: date, values: dict,
                      split: bool) -> _Doc:
        doc = _Doc(
            doc_id=f"{pid}-mn{k}", patient_id=pid, source_type="meeting_note",
            authored=base + timedelta(days=40 * k),
        )
        motif = [["dossier", "présenté", "le", *self._date_words(doc.authored)],
                 ["patiente", "âgée", "de", str(self.rng.randint(32, 84)), "ans"]]
        histo: list[list[str]] = []
        if values["cancer_type"]:
            histo.append(self._histology(doc, values))
        if values["sbr_grade"]:
            histo.append(self._grade(doc, values))
        if values["node_count"]:
            histo.append(self._nodes(doc, values))
        if values["ki67_percent"] and not split:
            histo.append(self._ki67(doc, values))
        examen: list[list[str]] = []
        if values["tumor_size_mm"]:
            examen.append(self._tumor(doc, values))
        if values["estrogen_receptor"]:
            examen.append(self._receptor(doc, "oestrogenes",
                                         values["estrogen_receptor"],
                                         ["recepteurs", "aux"]))
        if values["progesterone_receptor"]:
            examen.append(self._receptor(doc, "progesterone",
                                         values["progesterone_receptor"],
                                         ["recepteurs", "a", "la"]))
        if values["her2"] and not split:
            examen.append(self._her2(doc, values))
        conclusion: list[list[str]] = []
        if values["recurrence"]:
            conclusion.append(self._recurrence(doc, values))
        if self.rng.random() < 0.5:
            conclusion.append(self._treatment(doc))
        if self.rng.random() < 0.3:
            conclusion.append(self._chemo(doc))
        conclusion += [list(s) for s in self.rng.sample(_GLUE_FILLERS, 3)]
        conclusion.append(list(self.rng.choice(_PLAIN_FILLERS)))
        for sentences in (motif, histo, examen, conclusion):
            self.rng.shuffle(sentences)
        doc.sections = [
            ("MOTIF:", motif),
            ("HISTOLOGIE:", histo),
            ("EXAMEN:", examen),
            ("CONCLUSION:", conclusion),
        ]
        return doc

    def _letter(self, pid: str, k: int, base: date, values: dict, split: bool,
                kind: str) -> _Doc:
        source = "hospitalization_letter" if kind == "hosp" else "discharge_letter"
        tag = "hl" if kind == "hosp" else "dl"
        offset = 15 + 30 * k if kind == "hosp" else 70 + 30 * k
        doc = _Doc(doc_id=f"{pid}-{tag}{k}", patient_id=pid, source_type=source,
                   authored=base + timedelta(days=offset))
        sents: list[list[str]] = [
            ["compte", "rendu", "adressé", "au", "médecin", "traitant",
             "le", *self._date_words(doc.authored)],
        ]
        if kind == "hosp":
            sents.append(["intervention", "réalisée", "le",
                          *self._date_words(doc.authored - timedelta(days=3))])
            sents.append(self._treatment(doc))
            if self.rng.random() < 0.4:
                sents.append(self._chemo(doc))
            if values["tumor_size_mm"] and self.rng.random() < 0.6:
                sents.append(self._tumor(doc, values))
        else:
            sents.append(["sortie", "autorisée", "le",
                          *self._date_words(doc.authored + timedelta(days=2))])
            if values["estrogen_receptor"] and self.rng.random() < 0.7:
                sents.append(self._receptor(doc, "oestrogenes",
                                            values["estrogen_receptor"],
                                            ["recepteurs", "aux"]))
            if values["progesterone_receptor"] and self.rng.random() < 0.7:
                sents.append(self._receptor(doc, "progesterone",
                                            values["progesterone_receptor"],
                                            ["recepteurs", "a", "la"]))
        if split:
            if values["her2"]:
                sents.append(self._her2(doc, values))
            if values["ki67_percent"]:
                sents.append(self._ki67(doc, values))
        sents += [list(s) for s in self.rng.sample(_GLUE_FILLERS, 2)]
        sents.append(list(self.rng.choice(_PLAIN_FILLERS)))
        body = sents[1:]
        self.rng.shuffle(body)
        doc.sections = [("", [sents[0], *body])]
        return doc

    # -- scheduled phrase / control sentences ---------------------------------

    def _schedule_extras(self):
        n = len(self.docs)
        schedule: list[tuple[list[str], int]] = []
        for a, b in PHRASE_BIGRAMS:
            sentence = {"bilan": ["bilan", "preoperatoire", "du"],
                        "suites": ["suites", "operatoires"]}[a]
            schedule.append((sentence, self.cfg.phrase_occurrences))
        schedule.append((list(PHRASE_TRIGRAM), self.cfg.trigram_occurrences))
        for pair in CONTROL_PAIRS:
            schedule.append(([pair[0], pair[1], "proposée"], self.cfg.control_occurrences))
        for sentence, count in schedule:
            slots = self.rng.sample(range(n), count)
            for slot in slots:
                doc = self.docs[slot]
                words = list(sentence)
                if words[-1] == "du":  # date-bearing phrase sentence
                    words += self._date_words(doc.authored)
                doc.sections[-1][1].append(words)

    # -- typo corruption -------------------------------------------------------

    def _fold(self, word: str) -> str:
        return fold_accents(word).lower()

    def _corrupt(self, word: str, legit: set[str], frequent: set[str],
                 corrupted_map: dict[str, str], corrupted_counts: dict[str, int]) -> str | None:
        letters = "abcdefghijklmnopqrstuvwxyz"
        for _ in range(20):
            w = list(word)
            op = self.rng.choice(["sub", "ins", "del"])
            if op == "del" and len(w) > 4:
                del w[self.rng.randrange(len(w))]
            elif op == "ins":
                w.insert(self.rng.randrange(len(w) + 1), self.rng.choice(letters))
            else:
                i = self.rng.randrange(len(w))
                c = self.rng.choice(letters)
                if w[i] == c:
                    continue
                w[i] = c
            cand = "".join(w)
            if len(cand) < 4 or cand in legit:
                continue
            if corrupted_map.get(cand, word) != word:
                continue
            if corrupted_counts.get(cand, 0) >= 8:
                continue
            # must not sit at distance 1 from any frequent word other than
            # the original, or the correction target would be ambiguous
            if any(f != word and _bounded_edit_distance(cand, f, 1) <= 1
                   for f in frequent):
                continue
            return cand
        return None

    def _plant_typos(self):
        counts: dict[str, int] = {}
        for doc in self.docs:
            for w in doc.words():
                f = self._fold(w)
                if f.isalpha():
                    counts[f] = counts.get(f, 0) + 1
        legit = set(counts)
        frequent = {w for w, c in counts.items() if c >= 50}
        skip = set()
        for pair in PHRASE_BIGRAMS + CONTROL_PAIRS:
            skip.update(pair)
        skip.update(PHRASE_TRIGRAM)
        remaining = dict(counts)
        corrupted_map: dict[str, str] = {}
        corrupted_counts: dict[str, int] = {}
        for doc in self.docs:
            for _heading, sentences in doc.sections:
                for sentence in sentences:
                    for i, w in enumerate(sentence):
                        f = self._fold(w)
                        if (not f.isalpha() or len(f) < 4 or f in skip
                                or counts.get(f, 0) < 150 or remaining.get(f, 0) < 120):
                            continue
                        self.eligible_typo_instances += 1
                        if self.rng.random() >= self.cfg.typo_rate:
                            continue
                        cand = self._corrupt(f, legit, frequent,
                                             corrupted_map, corrupted_counts)
                        if cand is None:
                            continue
                        sentence[i] = cand
                        remaining[f] -= 1
                        corrupted_map[cand] = f
                        corrupted_counts[cand] = corrupted_counts.get(cand, 0) + 1
                        self.typo_instances += 1
                        self.typos.append(
                            {"kind": "typo", "original": f, "corrupted": cand,
                             "doc_id": doc.doc_id}
                        )

    # -- output ---------------------------------------------------------------

    def _render(self, doc: _Doc) -> str:
        parts = []
        for heading, sentences in doc.sections:
            if not sentences:
                continue
            if heading:
                parts.append(heading)
            parts.append("\n".join(" ".join(s) + "." for s in sentences))
        return "\n".join(parts)

    def _adjacency_counts(self) -> dict[tuple[str, str], int]:
        pairs = set(PHRASE_BIGRAMS + CONTROL_PAIRS)
        pairs.add((PHRASE_TRIGRAM[0], PHRASE_TRIGRAM[1]))
        pairs.add((PHRASE_TRIGRAM[1], PHRASE_TRIGRAM[2]))
        counts = {p: 0 for p in pairs}
        for doc in self.docs:
            words = [self._fold(w) for w in doc.words()]
            for a, b in zip(words, words[1:]):
                if (a, b) in counts:
                    counts[(a, b)] += 1
        return counts

    def run(self, out_dir: Path) -> SynthResult:
        cfg = self.cfg
        n_split = round(cfg.n_patients * cfg.split_fraction)
        split_patients: set[str] = set()
        for idx in range(cfg.n_patients):
            values = self._sample_patient(idx)
            pid = values["patient_id"]
            split = idx < n_split
            if split:
                split_patients.add(pid)
            base = date(2013, 1, 1) + timedelta(days=3 * idx)
            for k in range(cfg.meeting_notes):
                self.docs.append(self._meeting_note(pid, k, base, values, split))
            for k in range(cfg.hospitalization_letters):
                self.docs.append(self._letter(pid, k, base, values, split, "hosp"))
            for k in range(cfg.discharge_letters):
                self.docs.append(self._letter(pid, k, base, values, split, "disch"))
            self.gold[pid] = {
                key: v for key, v in values.items()
                if v is not None and not key.startswith("_") and key != "patient_id"
            }
        self._schedule_extras()
        self._plant_typos()

        out_dir.mkdir(parents=True, exist_ok=True)
        corpus_path = out_dir / "corpus.jsonl"
        gold_path = out_dir / "gold.csv"
        manifest_path = out_dir / "manifest.jsonl"

        write_jsonl(corpus_path, (
            {
                "doc_id": d.doc_id,
                "patient_id": d.patient_id,
                "source_type": d.source_type,
                "authored_date": d.authored.isoformat(),
                "text": self._render(d),
            }
            for d in self.docs
        ))

        indicators = ["sbr_grade", "estrogen_receptor", "progesterone_receptor",
                      "her2", "ki67_percent", "node_count", "tumor_size_mm",
                      "cancer_type", "cancer_subtype", "recurrence"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["patient_id"] + indicators)
        for pid in sorted(self.gold):
            w.writerow([pid] + [self.gold[pid].get(ind, "") for ind in indicators])
        atomic_write_text(gold_path, buf.getvalue())

        adjacency = self._adjacency_counts()
        manifest: list[dict] = [{
            "kind": "summary",
            "n_documents": len(self.docs),
            "n_patients": cfg.n_patients,
            "seed": cfg.seed,
            "typo_rate": cfg.typo_rate,
            "eligible_typo_instances": self.eligible_typo_instances,
            "typo_instances": self.typo_instances,
        }]
        for concept, (canonical, variants) in PLANTED_SYNONYMS.items():
            manifest.append({"kind": "concept", "concept_id": concept,
                             "canonical": canonical, "seeds": []})
            for variant, _w in variants:
                manifest.append({
                    "kind": "synonym", "concept_id": concept, "canonical": canonical,
                    "variant": variant,
                    "occurrences": self.variant_counts.get(variant, 0),
                })
        for a, b in PHRASE_BIGRAMS:
            manifest.append({"kind": "phrase", "tokens": [a, b],
                             "adjacent_count": adjacency[(a, b)]})
        manifest.append({
            "kind": "phrase", "tokens": list(PHRASE_TRIGRAM),
            "adjacent_count": min(
                adjacency[(PHRASE_TRIGRAM[0], PHRASE_TRIGRAM[1])],
                adjacency[(PHRASE_TRIGRAM[1], PHRASE_TRIGRAM[2])],
            ),
        })
        for a, b in CONTROL_PAIRS:
            manifest.append({"kind": "control_pair", "tokens": [a, b],
                             "adjacent_count": adjacency[(a, b)]})
        for concept in sorted(self.concept_docs):
            manifest.append({"kind": "concept_docs", "concept_id": concept,
                             "doc_ids": sorted(self.concept_docs[concept])})
        manifest.extend(self.typos)
        manifest.append({"kind": "split", "indicators": ["her2", "ki67_percent"],
                         "patients": sorted(split_patients)})
        write_jsonl(manifest_path, manifest)
        return SynthResult(
            corpus_path=corpus_path, gold_path=gold_path,
            manifest_path=manifest_path, n_documents=len(self.docs),
        )


def generate_corpus(cfg: SynthConfig, out_dir: str | Path) -> SynthResult:
    """Write corpus.jsonl, gold.csv and manifest.jsonl under out_dir.

    Byte-identical for identical configs: every random draw comes from one
    seeded generator and output ordering is fixed.
    """
    return _Generator(cfg).run(Path(out_dir))


def read_manifest(path: str | Path) -> dict[str, list[dict]]:
    """Group manifest lines by kind."""
    from .corpusio import read_jsonl

    grouped: dict[str, list[dict]] = {}
    for row in read_jsonl(path):
        grouped.setdefault(row["kind"], []).append(row)
    return grouped
