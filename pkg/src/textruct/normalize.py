"""Language-level normalization: accent folding, tokenization, date extraction,
timeline reconstruction and laterality detection.

No stemming or lemmatization is applied anywhere; inflected forms are kept as
distinct tokens on purpose.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .ingest import RawDocument

logger = logging.getLogger(__name__)

DATE_PLACEHOLDER = "<date>"

# Dates written as one token keep their separators so they can be recognized
# later; decimals keep their comma/point; everything else splits on
# punctuation and whitespace. Underscore is reserved for merged phrases.
_TOKEN_RE = re.compile(
    r"\d{1,2}[/.\-]\d{1,2}[/.\-]\d{2,4}"  # 06/07/2017, 6-7-17, 06.07.2017
    r"|\d+[.,]\d+"                        # 2,2  (French decimal) or 2.2
    r"|[^\W_]+",                          # runs of letters/digits
    re.UNICODE,
)

_NUMERIC_DATE_RE = re.compile(r"^(\d{1,2})([/.\-])(\d{1,2})\2(\d{2}|\d{4})$")
_DAY_RE = re.compile(r"^(\d{1,2})(?:er)?$")
_YEAR_RE = re.compile(r"^(?:\d{2}|\d{4})$")

# French month names, accent-folded.
DEFAULT_MONTHS = {
    "janvier": 1, "fevrier": 2, "mars": 3, "avril": 4, "mai": 5, "juin": 6,
    "juillet": 7, "aout": 8, "septembre": 9, "octobre": 10, "novembre": 11,
    "decembre": 12,
}

DEFAULT_LATERALITY_CUES = {
    "left": {"gauche", "gauches"},
    "right": {"droit", "droite", "droits", "droites"},
    "both": {"bilateral", "bilaterale", "bilateraux", "bilaterales"},
}


def fold_accents(text: str) -> str:
    """Replace every accented letter by its base letter.

    Character-by-character so the output has exactly the same length as the
    input: a character whose decomposition is not a single base letter (e.g.
    Hangul syllables, ligatures) is left untouched.
    """
    out = []
    for ch in text:
        decomposed = unicodedata.normalize("NFD", ch)
        base = "".join(c for c in decomposed if not unicodedata.combining(c))
        out.append(base if len(base) == 1 else ch)
    return "".join(out)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation, keeping alphanumeric
    mixes ("her2") and date-shaped or decimal digit groups whole."""
    return _TOKEN_RE.findall(text.lower())


def load_months(path: str | Path | None) -> dict[str, int]:
    """Month-name table, one "name number" pair per line."""
    if path is None:
        return dict(DEFAULT_MONTHS)
    months: dict[str, int] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, num = line.split()
        months[name] = int(num)
    return months


def load_laterality_cues(path: str | Path | None) -> dict[str, set[str]]:
    """Cue lexicon, one "side cue" pair per line (side: left/right/both)."""
    if path is None:
        return {k: set(v) for k, v in DEFAULT_LATERALITY_CUES.items()}
    cues: dict[str, set[str]] = {"left": set(), "right": set(), "both": set()}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        side, cue = line.split()
        cues[side].add(cue)
    return cues


def _pivot_year(y: int) -> int:
    # Two-digit years: 40..99 -> 19xx, 00..39 -> 20xx.
    if y >= 100:
        return y
    return 1900 + y if y >= 40 else 2000 + y


def _try_date(day: int, month: int, year: int) -> date | None:
    try:
        return date(_pivot_year(year), month, day)
    except ValueError:
        return None


def extract_dates(
    tokens: list[str], months: dict[str, int] | None = None
) -> tuple[list[str], list[tuple[int, str]]]:
    """Replace each date-shaped token span by a single placeholder token.

    Recognizes d/m/y numeric forms (day first, ., - or / separators) and the
    three-token "6 juillet 2017" form. Invalid calendar dates are left in
    place with a warning. Returns the rewritten tokens and the (index,
    iso_date) mentions, sorted by index.
    """
    months = months if months is not None else DEFAULT_MONTHS
    out: list[str] = []
    mentions: list[tuple[int, str]] = []
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        m = _NUMERIC_DATE_RE.match(tok)
        if m:
            d = _try_date(int(m.group(1)), int(m.group(3)), int(m.group(4)))
            if d is not None:
                mentions.append((len(out), d.isoformat()))
                out.append(DATE_PLACEHOLDER)
                i += 1
                continue
            logger.warning("ambiguous date token %r left untouched", tok)
            out.append(tok)
            i += 1
            continue
        if i + 2 < n:
            dm = _DAY_RE.match(tok)
            if dm and tokens[i + 1] in months and _YEAR_RE.match(tokens[i + 2]):
                d = _try_date(int(dm.group(1)), months[tokens[i + 1]], int(tokens[i + 2]))
                if d is not None:
                    mentions.append((len(out), d.isoformat()))
                    out.append(DATE_PLACEHOLDER)
                    i += 3
                    continue
                logger.warning(
                    "ambiguous date span %r left untouched", " ".join(tokens[i : i + 3])
                )
        out.append(tok)
        i += 1
    return out, mentions


def detect_laterality(tokens: list[str], cues: dict[str, set[str]] | None = None) -> str:
    """Vote over cue mentions: left / right / both / unknown."""
    cues = cues if cues is not None else DEFAULT_LATERALITY_CUES
    toks = set(tokens)
    if toks & cues["both"]:
        return "both"
    has_left = bool(toks & cues["left"])
    has_right = bool(toks & cues["right"])
    if has_left and has_right:
        return "both"
    if has_left:
        return "left"
    if has_right:
        return "right"
    return "unknown"


@dataclass
class NormalizedDocument:
    """Token stream of one document plus extracted chronology and laterality.

    patient_id and authored_date are carried through from the raw document so
    downstream per-patient grouping does not need a side channel.
    """

    doc_id: str
    patient_id: str
    source_type: str
    authored_date: str | None
    tokens: list[str]
    date_mentions: list[tuple[int, str]] = field(default_factory=list)
    laterality: str = "unknown"

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "patient_id": self.patient_id,
            "source_type": self.source_type,
            "authored_date": self.authored_date,
            "tokens": self.tokens,
            "date_mentions": [[i, d] for i, d in self.date_mentions],
            "laterality": self.laterality,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizedDocument":
        return cls(
            doc_id=d["doc_id"],
            patient_id=d["patient_id"],
            source_type=d["source_type"],
            authored_date=d.get("authored_date"),
            tokens=list(d["tokens"]),
            date_mentions=[(int(i), s) for i, s in d.get("date_mentions", [])],
            laterality=d.get("laterality", "unknown"),
        )


@dataclass
class Timeline:
    """Date mentions of one patient merged across documents, oldest first."""

    entries: list[tuple[str, str, int]]  # (iso_date, doc_id, token_index)


def normalize_document(
    raw: RawDocument,
    months: dict[str, int] | None = None,
    laterality_cues: dict[str, set[str]] | None = None,
) -> NormalizedDocument:
    """Fold, tokenize and annotate one raw document. Section bodies are
    concatenated in order; headings are structural and do not enter the
    token stream."""
    tokens: list[str] = []
    for _heading, body in raw.sections:
        tokens.extend(tokenize(fold_accents(body)))
    tokens, mentions = extract_dates(tokens, months)
    laterality = detect_laterality(tokens, laterality_cues)
    authored = raw.authored_date.isoformat() if raw.authored_date else None
    return NormalizedDocument(
        doc_id=raw.doc_id,
        patient_id=raw.patient_id,
        source_type=raw.source_type,
        authored_date=authored,
        tokens=tokens,
        date_mentions=mentions,
        laterality=laterality,
    )


def normalize_corpus(
    docs: list[RawDocument],
    months: dict[str, int] | None = None,
    laterality_cues: dict[str, set[str]] | None = None,
    threads: int = 1,
) -> list[NormalizedDocument]:
    """Normalize a corpus; documents are independent, so the thread count
    never changes the result."""
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(
                pool.map(lambda d: normalize_document(d, months, laterality_cues), docs)
            )
    return [normalize_document(d, months, laterality_cues) for d in docs]


def build_timeline(docs: list[NormalizedDocument]) -> Timeline:
    """Merge all date mentions, ascending by date; ties break on
    (doc_id, token_index)."""
    entries = [
        (iso, doc.doc_id, idx)
        for doc in docs
        for idx, iso in doc.date_mentions
    ]
    entries.sort()
    return Timeline(entries=entries)
