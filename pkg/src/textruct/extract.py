"""Rule engine: canonicalized token streams to per-patient indicator tables.

A rule anchors on a concept's canonical token, then reads a window of
following tokens for a value (presence, number with unit, or a category
lexicon hit). Records from the three source kinds are merged field-wise with
meeting notes taking precedence.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .normalize import NormalizedDocument
from .syndict import SynonymDictionary

logger = logging.getLogger(__name__)

SOURCE_PRECEDENCE = ("meeting_note", "discharge_letter", "hospitalization_letter")

# Simplest cue-window negation: a cue sequence near the mention flips or
# voids it. French defaults; per-rule lists override.
DEFAULT_NEGATION_CUES = [["pas", "de"], ["absence", "de"], ["sans"], ["negatif"], ["negative"]]

NEGATION_LOOKBEHIND = 3  # tokens before the mention scanned for a cue

_NUM_RE = re.compile(r"^\d+(?:[.,]\d+)?$")
_NUM_UNIT_RE = re.compile(r"^(\d+(?:[.,]\d+)?)([a-z%]+)$")


@dataclass
class ExtractionRule:
    indicator: str
    concept_id: str
    kind: str  # "presence" | "numeric" | "category"
    window: int = 10
    units: dict[str, float] = field(default_factory=dict)  # unit -> factor
    lexicon: dict[str, str] = field(default_factory=dict)  # token -> label
    negation_cues: list[list[str]] = field(default_factory=list)
    metric: str = "multiclass"  # evaluation treatment: binary|multiclass|numeric
    positive_label: str | None = None
    anchor_token: str | None = None  # canonical token; defaults to concept_id

    def __post_init__(self):
        if self.kind not in ("presence", "numeric", "category"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.kind == "category" and not self.lexicon:
            raise ValueError(f"category rule {self.indicator} needs a lexicon")

    @property
    def anchor(self) -> str:
        return self.anchor_token or self.concept_id


@dataclass
class Extracted:
    value: object
    doc_id: str
    source_type: str
    token_index: int
    laterality: str = "unknown"


@dataclass
class StructuredRecord:
    """One patient's indicator table; missing fields are simply absent."""

    patient_id: str
    fields: dict[str, Extracted] = field(default_factory=dict)

    def value_map(self) -> dict[str, object]:
        return {k: v.value for k, v in self.fields.items()}


def _parse_number(token: str) -> float | None:
    if _NUM_RE.match(token):
        return float(token.replace(",", "."))
    return None


def _cue_in(cues: list[list[str]], tokens: list[str]) -> bool:
    for cue in cues:
        width = len(cue)
        if width == 0:
            continue
        for i in range(len(tokens) - width + 1):
            if tokens[i : i + width] == cue:
                return True
    return False


def apply_rule(doc: NormalizedDocument, rule: ExtractionRule) -> Extracted | None:
    """Evaluate one rule on one canonicalized document: first mention wins,
    values are read from the token window after it."""
    anchor = rule.anchor
    i = -1
    for pos, tok in enumerate(doc.tokens):
        if tok == anchor:
            i = pos
            break
    if i < 0:
        return None
    window = doc.tokens[i + 1 : i + 1 + rule.window]
    before = doc.tokens[max(0, i - NEGATION_LOOKBEHIND) : i]
    negated = bool(rule.negation_cues) and (
        _cue_in(rule.negation_cues, before) or _cue_in(rule.negation_cues, window)
    )

    if rule.kind == "presence":
        return Extracted(
            value=not negated, doc_id=doc.doc_id, source_type=doc.source_type,
            token_index=i, laterality=doc.laterality,
        )

    if rule.kind == "category":
        if negated:
            return None
        for tok in window:
            label = rule.lexicon.get(tok)
            if label is not None:
                return Extracted(
                    value=label, doc_id=doc.doc_id, source_type=doc.source_type,
                    token_index=i, laterality=doc.laterality,
                )
        return None

    # numeric: first number in the window; a unit must follow (or be glued to
    # the number) when the rule declares units.
    for j, tok in enumerate(window):
        num = _parse_number(tok)
        unit = None
        if num is None:
            m = _NUM_UNIT_RE.match(tok)
            if m:
                num = float(m.group(1).replace(",", "."))
                unit = m.group(2)
        if num is None:
            continue
        factor = 1.0
        if rule.units:
            if unit is None and j + 1 < len(window):
                nxt = window[j + 1]
                if nxt in rule.units:
                    unit = nxt
            if unit is None or unit not in rule.units:
                logger.warning(
                    "%s: number %r without a recognized unit in %s",
                    rule.indicator, tok, doc.doc_id,
                )
                return None
            factor = rule.units[unit]
        value = num * factor
        if abs(value) > 1e9:
            logger.warning("%s: numeric overflow %r in %s", rule.indicator, tok, doc.doc_id)
            return None
        return Extracted(
            value=round(value, 6), doc_id=doc.doc_id, source_type=doc.source_type,
            token_index=i, laterality=doc.laterality,
        )
    return None


def resolve_anchors(
    rules: list[ExtractionRule], dictionary: SynonymDictionary
) -> list[ExtractionRule]:
    """Fill each rule's anchor with its concept's canonical token."""
    for rule in rules:
        if rule.concept_id in dictionary.entries:
            rule.anchor_token = dictionary.entry(rule.concept_id).canonical
    return rules


def extract_records(
    docs: list[NormalizedDocument], rules: list[ExtractionRule]
) -> dict[str, StructuredRecord]:
    """One record per source type for one patient's documents. Within a
    source, later-dated documents win conflicts."""
    if not docs:
        return {}
    patient_ids = {d.patient_id for d in docs}
    if len(patient_ids) != 1:
        raise ValueError(f"documents span multiple patients: {sorted(patient_ids)}")
    patient_id = docs[0].patient_id
    ordered = sorted(docs, key=lambda d: (d.authored_date or "", d.doc_id))
    records: dict[str, StructuredRecord] = {}
    for doc in ordered:
        rec = records.setdefault(doc.source_type, StructuredRecord(patient_id=patient_id))
        for rule in rules:
            got = apply_rule(doc, rule)
            if got is not None:
                rec.fields[rule.indicator] = got
    return records


def merge_sources(
    records: dict[str, StructuredRecord], patient_id: str
) -> StructuredRecord:
    """Field-wise merge: meeting notes, then discharge letters, then
    hospitalization letters. A lower-precedence source only fills holes."""
    merged = StructuredRecord(patient_id=patient_id)
    for source in SOURCE_PRECEDENCE:
        rec = records.get(source)
        if rec is None:
            continue
        for indicator, value in rec.fields.items():
            if indicator not in merged.fields:
                merged.fields[indicator] = value
    return merged


def search_records(
    docs: list[NormalizedDocument], concept_id: str, dictionary: SynonymDictionary
) -> set[str]:
    """Documents mentioning the concept. On a canonicalized corpus the
    canonical token already covers every accepted synonym surface."""
    canonical = dictionary.entry(concept_id).canonical
    return {doc.doc_id for doc in docs if canonical in doc.tokens}


def load_rules(path: str | Path) -> list[ExtractionRule]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    rules = []
    for r in data["rules"]:
        cues = r.get("negation_cues")
        if cues == "default":
            cues = [list(c) for c in DEFAULT_NEGATION_CUES]
        rules.append(
            ExtractionRule(
                indicator=r["indicator"],
                concept_id=r["concept_id"],
                kind=r["kind"],
                window=r.get("window", 10),
                units=r.get("units", {}),
                lexicon=r.get("lexicon", {}),
                negation_cues=cues or [],
                metric=r.get("metric", "multiclass"),
                positive_label=r.get("positive_label"),
            )
        )
    return rules


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return str(value)


def records_csv(records: dict[str, StructuredRecord], rules: list[ExtractionRule],
                meta: str | None = None) -> str:
    """One row per patient, one column per indicator plus provenance columns."""
    indicators = [r.indicator for r in rules]
    buf = io.StringIO()
    if meta:
        buf.write(f"# {meta}\n")
    w = csv.writer(buf, lineterminator="\n")
    header = ["patient_id"]
    for ind in indicators:
        header += [ind, f"{ind}__provenance", f"{ind}__laterality"]
    w.writerow(header)
    for pid in sorted(records):
        rec = records[pid]
        row = [pid]
        for ind in indicators:
            got = rec.fields.get(ind)
            if got is None:
                row += ["", "", ""]
            else:
                row += [
                    _format_value(got.value),
                    f"{got.doc_id}:{got.source_type}:{got.token_index}",
                    got.laterality,
                ]
        w.writerow(row)
    return buf.getvalue()


def read_records_csv(path: str | Path) -> dict[str, dict[str, str]]:
    """Value columns only; provenance columns are ignored on read."""
    out: dict[str, dict[str, str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for row in reader:
        pid = row.pop("patient_id")
        out[pid] = {
            k: v for k, v in row.items()
            if v not in (None, "") and "__" not in k
        }
    return out
