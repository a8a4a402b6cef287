"""Scoring of extracted indicator tables against a gold registry.

Agreement is conditioned on both sides being present; the extraction rate is
reported separately so the two cannot be conflated.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping, Sequence


def round_half_up(x: float, ndigits: int = 1) -> float:
    """Half-up decimal rounding (0.05 -> 0.1), used for report presentation."""
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass
class ConfusionMatrix:
    labels: list[str]
    counts: list[list[int]]  # rows = gold, columns = predicted
    n_missing_gold: int = 0
    n_missing_pred: int = 0

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.labels)))

    def row_sums(self) -> list[int]:
        return [sum(row) for row in self.counts]

    def col_sums(self) -> list[int]:
        return [sum(row[j] for row in self.counts) for j in range(len(self.labels))]


def confusion(
    gold: Sequence[object | None],
    pred: Sequence[object | None],
    labels: list[str] | None = None,
) -> ConfusionMatrix:
    """Tally aligned columns; pairs with a missing side are counted apart and
    excluded from the grid. Values outside a declared label set are an error."""
    if len(gold) != len(pred):
        raise ValueError("gold and pred columns must have the same length")
    pairs = []
    n_missing_gold = 0
    n_missing_pred = 0
    for g, p in zip(gold, pred):
        if g is None:
            n_missing_gold += 1
        if p is None:
            n_missing_pred += 1
        if g is None or p is None:
            continue
        pairs.append((str(g), str(p)))
    if labels is None:
        labels = sorted({v for gp in pairs for v in gp})
    idx = {lab: i for i, lab in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for g, p in pairs:
        if g not in idx:
            raise ValueError(f"gold label {g!r} outside declared set {labels}")
        if p not in idx:
            raise ValueError(f"predicted label {p!r} outside declared set {labels}")
        counts[idx[g]][idx[p]] += 1
    return ConfusionMatrix(
        labels=labels, counts=counts,
        n_missing_gold=n_missing_gold, n_missing_pred=n_missing_pred,
    )


def f1_from(precision: float, sensitivity: float) -> float | None:
    """Harmonic mean of precision and sensitivity, in percent."""
    if precision + sensitivity == 0:
        return None
    return 2 * precision * sensitivity / (precision + sensitivity)


@dataclass
class ScoreSet:
    agreement: float | None
    precision: float | None
    sensitivity: float | None
    f1: float | None


def scores(cm: ConfusionMatrix, positive_label: str | None = None) -> ScoreSet:
    """Agreement for any label count; precision/sensitivity/F1 for the binary
    case against a positive label. Undefined ratios come back as None, the
    way dashes appear in published score tables."""
    total = cm.total
    agreement = 100.0 * cm.trace / total if total else None
    precision = sensitivity = f1 = None
    if positive_label is not None and total and positive_label in cm.labels:
        pi = cm.labels.index(positive_label)
        tp = cm.counts[pi][pi]
        fp = sum(cm.counts[g][pi] for g in range(len(cm.labels)) if g != pi)
        fn = sum(cm.counts[pi][p] for p in range(len(cm.labels)) if p != pi)
        if tp + fp > 0:
            precision = 100.0 * tp / (tp + fp)
        if tp + fn > 0:
            sensitivity = 100.0 * tp / (tp + fn)
        if precision is not None and sensitivity is not None:
            f1 = f1_from(precision, sensitivity)
    return ScoreSet(agreement=agreement, precision=precision,
                    sensitivity=sensitivity, f1=f1)


def cohen_kappa(cm: ConfusionMatrix) -> float | None:
    """Chance-corrected agreement (fraction in [-1, 1]); None when expected
    agreement is 1."""
    total = cm.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    po = cm.trace / total
    rows, cols = cm.row_sums(), cm.col_sums()
    pe = sum(r * c for r, c in zip(rows, cols)) / (total * total)
    if pe == 1.0:
        return None
    return (po - pe) / (1.0 - pe)


def extraction_rate(rows: Sequence[Mapping], indicator: str) -> float:
    """Percent of records in which the indicator was found at all."""
    if not rows:
        raise ValueError("record set must be non-empty")
    found = sum(1 for r in rows if r.get(indicator) is not None)
    return 100.0 * found / len(rows)


@dataclass
class IndicatorSpec:
    name: str
    kind: str  # "binary" | "multiclass" | "numeric"
    labels: list[str] | None = None
    positive_label: str | None = None
    tolerance: float = 0.0

    def __post_init__(self):
        if self.kind not in ("binary", "multiclass", "numeric"):
            raise ValueError(f"unknown indicator kind {self.kind!r}")
        if self.kind == "binary" and not self.positive_label:
            raise ValueError(f"binary indicator {self.name} needs a positive label")


@dataclass
class IndicatorReport:
    indicator: str
    agreement: float | None
    kappa: float | None
    precision: float | None
    sensitivity: float | None
    f1: float | None
    extraction_rate: float
    n_compared: int
    n_missing_gold: int
    n_missing_pred: int


@dataclass
class EvaluationReport:
    rows: list[IndicatorReport]
    unmatched_gold_ids: list[str] = field(default_factory=list)
    unmatched_pred_ids: list[str] = field(default_factory=list)


def _to_number(value: object) -> float:
    return float(str(value).replace(",", "."))


def evaluate(
    gold: Mapping[str, Mapping[str, object]],
    extracted: Mapping[str, Mapping[str, object]],
    specs: Sequence[IndicatorSpec],
) -> EvaluationReport:
    """Score each indicator over patients present on both sides. Numeric
    indicators agree when within the declared tolerance (exact by default);
    kappa is emitted for multi-class indicators only. Unmatched patient ids
    are reported, never silently dropped."""
    shared = sorted(set(gold) & set(extracted))
    unmatched_gold = sorted(set(gold) - set(extracted))
    unmatched_pred = sorted(set(extracted) - set(gold))
    rows: list[IndicatorReport] = []
    all_records = [extracted[pid] for pid in sorted(extracted)]
    for spec in specs:
        er = extraction_rate(all_records, spec.name) if all_records else 0.0
        gold_col = [gold[pid].get(spec.name) for pid in shared]
        pred_col = [extracted[pid].get(spec.name) for pid in shared]
        if spec.kind == "numeric":
            n_missing_gold = sum(1 for g in gold_col if g is None)
            n_missing_pred = sum(1 for p in pred_col if p is None)
            compared = [
                (g, p) for g, p in zip(gold_col, pred_col)
                if g is not None and p is not None
            ]
            agreement = None
            if compared:
                hits = sum(
                    1 for g, p in compared
                    if abs(_to_number(g) - _to_number(p)) <= spec.tolerance
                )
                agreement = 100.0 * hits / len(compared)
            rows.append(IndicatorReport(
                indicator=spec.name, agreement=agreement, kappa=None,
                precision=None, sensitivity=None, f1=None, extraction_rate=er,
                n_compared=len(compared), n_missing_gold=n_missing_gold,
                n_missing_pred=n_missing_pred,
            ))
            continue
        cm = confusion(gold_col, pred_col, labels=spec.labels)
        ss = scores(cm, spec.positive_label if spec.kind == "binary" else None)
        kappa = None
        if spec.kind == "multiclass" and cm.total:
            k = cohen_kappa(cm)
            kappa = None if k is None else 100.0 * k
        rows.append(IndicatorReport(
            indicator=spec.name, agreement=ss.agreement, kappa=kappa,
            precision=ss.precision, sensitivity=ss.sensitivity, f1=ss.f1,
            extraction_rate=er, n_compared=cm.total,
            n_missing_gold=cm.n_missing_gold, n_missing_pred=cm.n_missing_pred,
        ))
    return EvaluationReport(
        rows=rows, unmatched_gold_ids=unmatched_gold, unmatched_pred_ids=unmatched_pred
    )


def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{round_half_up(v, 1):.1f}"


def report_csv(report: EvaluationReport, meta: str | None = None) -> str:
    buf = io.StringIO()
    if meta:
        buf.write(f"# {meta}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["indicator", "A", "kappa", "P", "S", "F1", "ER", "n_compared"])
    for r in report.rows:
        w.writerow([
            r.indicator, _fmt(r.agreement), _fmt(r.kappa), _fmt(r.precision),
            _fmt(r.sensitivity), _fmt(r.f1), _fmt(r.extraction_rate), r.n_compared,
        ])
    return buf.getvalue()


def report_table(report: EvaluationReport) -> str:
    headers = ["indicator", "A", "kappa", "P", "S", "F1", "ER"]
    body = [
        [r.indicator, _fmt(r.agreement), _fmt(r.kappa), _fmt(r.precision),
         _fmt(r.sensitivity), _fmt(r.f1), _fmt(r.extraction_rate)]
        for r in report.rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in body:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))))
    if report.unmatched_gold_ids:
        lines.append(f"unmatched gold patients: {', '.join(report.unmatched_gold_ids)}")
    if report.unmatched_pred_ids:
        lines.append(f"unmatched extracted patients: {', '.join(report.unmatched_pred_ids)}")
    return "\n".join(lines) + "\n"


def read_gold_csv(path: str | Path) -> dict[str, dict[str, str]]:
    """Gold registry: patient_id plus one column per indicator; empty cells
    mean missing."""
    out: dict[str, dict[str, str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for row in reader:
        pid = row.pop("patient_id")
        out[pid] = {k: v for k, v in row.items() if v not in (None, "")}
    return out
