"""Corpus loading: raw text or jsonl documents into a canonical sectioned model."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path

logger = logging.getLogger(__name__)

SOURCE_TYPES = ("meeting_note", "hospitalization_letter", "discharge_letter")

# A heading is a short line ending in ":" (at most six tokens) or a fully
# uppercase line. The note layouts vary by institution, so the patterns live
# in an editable config file; these are the shipped defaults.
DEFAULT_HEADING_PATTERNS = [
    r"^\s*(?:\S+[ \t]+){0,5}\S+:\s*$",
    r"^\s*[A-ZÀ-ÖØ-Þ][A-ZÀ-ÖØ-Þ0-9 '/\-]{1,60}\s*$",
]


@dataclass
class RawDocument:
    """One source document: identity, provenance and its sections in order."""

    doc_id: str
    patient_id: str
    source_type: str
    authored_date: date | None
    sections: list[tuple[str, str]]

    def text(self) -> str:
        return "\n".join(body for _h, body in self.sections)


def load_heading_patterns(path: str | Path | None) -> list[re.Pattern]:
    lines = (
        DEFAULT_HEADING_PATTERNS
        if path is None
        else [
            ln.strip()
            for ln in Path(path).read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.strip().startswith("#")
        ]
    )
    return [re.compile(p) for p in lines]


def _collapse_line(line: str) -> str:
    return " ".join(line.split())


def split_sections(
    text: str, patterns: list[re.Pattern] | None = None
) -> list[tuple[str, str]]:
    """Split a document into (heading, body) pairs.

    Heading lines start a new section; runs of whitespace collapse to single
    spaces and runs of blank lines collapse to one. Text before the first
    heading (or all of it, if there is none) goes into a section with an
    empty heading.
    """
    if patterns is None:
        patterns = [re.compile(p) for p in DEFAULT_HEADING_PATTERNS]
    sections: list[tuple[str, list[str]]] = []
    current_heading = ""
    current_lines: list[str] = []

    def flush():
        nonlocal current_lines
        body_lines: list[str] = []
        blank_pending = False
        for ln in current_lines:
            collapsed = _collapse_line(ln)
            if not collapsed:
                blank_pending = bool(body_lines)
                continue
            if blank_pending:
                body_lines.append("")
                blank_pending = False
            body_lines.append(collapsed)
        body = "\n".join(body_lines).strip()
        if body:
            sections.append((current_heading, body))
        current_lines = []

    for line in text.splitlines():
        if line.strip() and any(p.match(line) for p in patterns):
            flush()
            current_heading = line.strip().rstrip(":").strip()
        else:
            current_lines.append(line)
    flush()
    return [(h, b) for h, b in sections]


def _parse_date(value, line_no: int) -> date | None:
    if value is None or value == "":
        return None
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise ValueError(f"line {line_no}: bad authored_date {value!r}: {exc}") from exc


def _load_jsonl(path: Path, patterns: list[re.Pattern]) -> list[RawDocument]:
    docs: list[RawDocument] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_no}: invalid json: {exc}") from exc
            missing = [k for k in ("doc_id", "patient_id", "source_type", "text") if k not in obj]
            if missing:
                raise ValueError(f"line {line_no}: missing keys {missing}")
            doc_id = str(obj["doc_id"])
            if doc_id in seen:
                raise ValueError(
                    f"duplicate doc_id {doc_id!r} at lines {seen[doc_id]} and {line_no}"
                )
            seen[doc_id] = line_no
            source_type = obj["source_type"]
            if source_type not in SOURCE_TYPES:
                raise ValueError(
                    f"line {line_no}: unknown source_type {source_type!r} "
                    f"(expected one of {SOURCE_TYPES})"
                )
            text = obj["text"]
            if not isinstance(text, str) or not text.strip():
                raise ValueError(f"line {line_no}: empty text")
            sections = split_sections(text, patterns)
            if not sections:
                raise ValueError(f"line {line_no}: no content after section split")
            docs.append(
                RawDocument(
                    doc_id=doc_id,
                    patient_id=str(obj["patient_id"]),
                    source_type=source_type,
                    authored_date=_parse_date(obj.get("authored_date"), line_no),
                    sections=sections,
                )
            )
    return docs


def _load_plain_dir(path: Path, patterns: list[re.Pattern]) -> list[RawDocument]:
    # Plain directories carry no metadata: the file stem doubles as doc and
    # patient id, and documents are treated as meeting notes.
    docs = []
    for fp in sorted(path.glob("*.txt")):
        text = fp.read_text(encoding="utf-8")
        if not text.strip():
            continue
        sections = split_sections(text, patterns)
        if not sections:
            continue
        docs.append(
            RawDocument(
                doc_id=fp.stem,
                patient_id=fp.stem,
                source_type="meeting_note",
                authored_date=None,
                sections=sections,
            )
        )
    return docs


def load_corpus(
    path: str | Path,
    format: str = "jsonl",
    heading_patterns: list[re.Pattern] | None = None,
) -> list[RawDocument]:
    """Load a corpus in input order. jsonl lines must carry doc_id,
    patient_id, source_type, text and an optional ISO authored_date."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    patterns = heading_patterns or [re.compile(p) for p in DEFAULT_HEADING_PATTERNS]
    if format == "jsonl":
        docs = _load_jsonl(path, patterns)
    elif format == "plain_dir":
        docs = _load_plain_dir(path, patterns)
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    logger.info("loaded %d documents from %s", len(docs), path)
    return docs
