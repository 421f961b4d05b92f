"""Canonical data model and loaders for annotation audit datasets.

One :class:`AnnotationRecord` is a single observed response: an annotator, an
item (a prompt or prompt-response instance), the measurement condition it was
collected under (session, framing variant, presentation position), and the
score. Repeats of the same (annotator, item) tuple are data, not errors; the
audit diagnostics live off exactly those repeats.

The canonical wire format is JSONL with one record per line and field names
equal to the dataclass fields. CSV is accepted with the identical header
contract. Scores are stored raw on their native scale; conversion to the
common 0-100 scale happens only inside consumers that need it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import DataFormatError

SCALE_CONTINUOUS = "continuous_0_100"
SCALE_LIKERT = "likert_5"
SCALE_BINARY = "binary_pair"
SCALE_KINDS = (SCALE_CONTINUOUS, SCALE_LIKERT, SCALE_BINARY)

CONTENT_TYPES = ("A1_generic", "A2_factual", "A3_subjective", "A4_value_laden", "A5_task_based")
RESPONSE_QUALITIES = ("B1_good", "B2_bad", "B3_mixed", "B4_subjective")
EVAL_COMPLEXITIES = ("D1_uni", "D2_multi_aligned", "D3_multi_conflicting")
PLAUSIBLE_PREFS = ("E1_implausible", "E2_moderate", "E3_plausible")

# Presentation-order markers for binary comparisons, carried in condition_tag.
ORDER_TAG_AB = "order:AB"
ORDER_TAG_BA = "order:BA"

Score = Union[float, str]


@dataclass(frozen=True)
class AnnotationRecord:
    """One (annotator, item, condition, score) observation."""

    record_id: str
    annotator_id: str
    item_id: str
    prompt_text: str
    score: Score
    scale_kind: str
    response_text: Optional[str] = None
    model_id: Optional[str] = None
    session_id: Optional[str] = None
    timestamp: Optional[int] = None
    position_index: Optional[int] = None
    framing_id: Optional[str] = None
    condition_tag: Optional[str] = None

    def __post_init__(self):
        if self.scale_kind not in SCALE_KINDS:
            raise DataFormatError(f"unknown scale_kind {self.scale_kind!r}")
        _check_score(self.score, self.scale_kind)
        if self.position_index is not None and self.position_index < 0:
            raise DataFormatError(f"position_index must be >= 0, got {self.position_index}")


def _check_score(score: Score, scale_kind: str) -> None:
    if scale_kind == SCALE_BINARY:
        if score not in ("A", "B"):
            raise DataFormatError(f"binary_pair score must be 'A' or 'B', got {score!r}")
        return
    if isinstance(score, str):
        raise DataFormatError(f"{scale_kind} score must be numeric, got {score!r}")
    if not np.isfinite(score):
        raise DataFormatError(f"score must be finite, got {score!r}")
    lo, hi = (0.0, 100.0) if scale_kind == SCALE_CONTINUOUS else (1.0, 5.0)
    if not lo <= float(score) <= hi:
        raise DataFormatError(f"score {score} outside [{lo:g}, {hi:g}] for {scale_kind}")


def score_value(record: AnnotationRecord) -> float:
    """Numeric view of a score: binary choices map to A=0, B=1."""
    if record.scale_kind == SCALE_BINARY:
        return 0.0 if record.score == "A" else 1.0
    return float(record.score)


def common_scale_score(record: AnnotationRecord) -> float:
    """Score mapped onto the common 0-100 scale.

    Likert 1-5 maps linearly via (s - 1) * 25. Binary choices have no
    position on a magnitude scale and raise.
    """
    if record.scale_kind == SCALE_CONTINUOUS:
        return float(record.score)
    if record.scale_kind == SCALE_LIKERT:
        return (float(record.score) - 1.0) * 25.0
    raise DataFormatError("binary_pair scores have no common-scale magnitude")


def default_tau(scale_kind: str) -> float:
    """Scale-relative default consistency tolerance: 15 / 1 / exact."""
    return {SCALE_CONTINUOUS: 15.0, SCALE_LIKERT: 1.0, SCALE_BINARY: 0.0}[scale_kind]


@dataclass
class EmbeddingTable:
    """item_id -> dense vector, uniform dimension, all finite."""

    dimension: int
    entries: dict[str, np.ndarray]

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, Iterable[float]]]) -> "EmbeddingTable":
        entries: dict[str, np.ndarray] = {}
        dimension = None
        for item_id, vector in rows:
            vec = np.asarray(list(vector), dtype=float)
            if vec.ndim != 1 or vec.size == 0:
                raise DataFormatError(f"embedding for {item_id!r} must be a nonempty vector")
            if not np.all(np.isfinite(vec)):
                raise DataFormatError(f"embedding for {item_id!r} contains a non-finite entry")
            if dimension is None:
                dimension = vec.size
            elif vec.size != dimension:
                raise DataFormatError(
                    f"dimension mismatch: {item_id!r} has {vec.size}, expected {dimension}"
                )
            entries[item_id] = vec
        if dimension is None:
            raise DataFormatError("no embedding rows")
        return cls(dimension=int(dimension), entries=entries)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.entries

    def __getitem__(self, item_id: str) -> np.ndarray:
        return self.entries[item_id]


@dataclass(frozen=True)
class ItemMetadata:
    """Analyst- or model-assigned codes for one item."""

    item_id: str
    content_type: Optional[str] = None
    response_quality: Optional[str] = None
    eval_complexity: Optional[str] = None
    plausible_pref: Optional[str] = None
    theme_labels: frozenset[str] = frozenset()
    value_dimension: Optional[str] = None

    def __post_init__(self):
        for value, allowed, name in (
            (self.content_type, CONTENT_TYPES, "content_type"),
            (self.response_quality, RESPONSE_QUALITIES, "response_quality"),
            (self.eval_complexity, EVAL_COMPLEXITIES, "eval_complexity"),
            (self.plausible_pref, PLAUSIBLE_PREFS, "plausible_pref"),
        ):
            if value is not None and value not in allowed:
                raise DataFormatError(f"unknown {name} code {value!r}")
        object.__setattr__(self, "theme_labels", frozenset(self.theme_labels))


@dataclass(frozen=True)
class RejectedRow:
    line_no: int
    reason: str
    raw: str


@dataclass(eq=False)
class Dataset:
    """Immutable-by-convention bundle of records, embeddings, and metadata.

    Indexes are computed lazily and cached; do not mutate ``records`` after
    construction.
    """

    records: list[AnnotationRecord]
    scale_kind: str
    embeddings: Optional[EmbeddingTable] = None
    metadata: dict[str, ItemMetadata] = field(default_factory=dict)
    rejected: list[RejectedRow] = field(default_factory=list, repr=False)

    @cached_property
    def by_annotator(self) -> dict[str, list[AnnotationRecord]]:
        out: dict[str, list[AnnotationRecord]] = {}
        for rec in self.records:
            out.setdefault(rec.annotator_id, []).append(rec)
        return out

    @cached_property
    def by_item(self) -> dict[str, list[AnnotationRecord]]:
        out: dict[str, list[AnnotationRecord]] = {}
        for rec in self.records:
            out.setdefault(rec.item_id, []).append(rec)
        return out

    @property
    def annotator_ids(self) -> list[str]:
        return sorted(self.by_annotator)

    @property
    def item_ids(self) -> list[str]:
        return sorted(self.by_item)

    def ratings(self, annotator_id: str, item_id: str) -> list[AnnotationRecord]:
        return [r for r in self.by_annotator.get(annotator_id, []) if r.item_id == item_id]

    @cached_property
    def repeat_groups(self) -> dict[tuple[str, str, Optional[str]], list[AnnotationRecord]]:
        """(annotator, item, framing) groups holding two or more ratings."""
        groups: dict[tuple[str, str, Optional[str]], list[AnnotationRecord]] = {}
        for rec in self.records:
            groups.setdefault((rec.annotator_id, rec.item_id, rec.framing_id), []).append(rec)
        return {key: recs for key, recs in groups.items() if len(recs) >= 2}

    def item_text(self, item_id: str, attr: str) -> Optional[str]:
        recs = self.by_item.get(item_id)
        if not recs:
            return None
        return getattr(recs[0], attr)


_RECORD_FIELDS = [f.name for f in fields(AnnotationRecord)]
_INT_FIELDS = {"timestamp", "position_index"}


def record_to_obj(record: AnnotationRecord) -> dict:
    """Record as a plain dict; absent optionals are omitted, never sentinels."""
    out = {}
    for name in _RECORD_FIELDS:
        value = getattr(record, name)
        if value is not None:
            out[name] = value
    return out


def _record_from_obj(obj: dict, scale_kind: Optional[str]) -> AnnotationRecord:
    data = dict(obj)
    unknown = set(data) - set(_RECORD_FIELDS)
    if unknown:
        raise DataFormatError(f"unknown fields: {sorted(unknown)}")
    for key in ("record_id", "annotator_id", "item_id", "prompt_text", "score"):
        if key not in data or data[key] is None:
            raise DataFormatError(f"missing required field {key!r}")
    kind = data.get("scale_kind") or scale_kind
    if kind is None:
        raise DataFormatError("record carries no scale_kind and no dataset-level default given")
    data["scale_kind"] = kind
    if kind != SCALE_BINARY:
        try:
            data["score"] = float(data["score"])
        except (TypeError, ValueError):
            raise DataFormatError(f"non-numeric score {data['score']!r}") from None
    for key in _INT_FIELDS:
        if data.get(key) is not None:
            data[key] = int(data[key])
    for key in _RECORD_FIELDS:
        if key not in data:
            data[key] = None
    return AnnotationRecord(**{k: data[k] for k in _RECORD_FIELDS})


def _csv_cell_to_value(name: str, cell: str):
    if cell == "":
        return None
    if name in _INT_FIELDS:
        return int(cell)
    return cell


def records_from_rows(
    rows: Iterable[tuple[int, dict]],
    scale_kind: Optional[str] = None,
    strict: bool = False,
) -> tuple[list[AnnotationRecord], list[RejectedRow], str]:
    """Build records from (line_no, raw dict) pairs.

    Lenient mode collects malformed rows; strict mode raises on the first.
    The dataset scale is ``scale_kind`` if given, else the first valid row's.
    Rows on a different scale than the dataset's are malformed.
    """
    records: list[AnnotationRecord] = []
    rejects: list[RejectedRow] = []
    effective_scale = scale_kind
    for line_no, obj in rows:
        try:
            rec = _record_from_obj(obj, effective_scale)
            if effective_scale is None:
                effective_scale = rec.scale_kind
            elif rec.scale_kind != effective_scale:
                raise DataFormatError(
                    f"scale_kind {rec.scale_kind!r} differs from dataset scale {effective_scale!r}"
                )
            records.append(rec)
        except DataFormatError as exc:
            if strict:
                raise DataFormatError(f"line {line_no}: {exc}") from exc
            rejects.append(RejectedRow(line_no, str(exc), json.dumps(obj, sort_keys=True)))
    if not records:
        raise DataFormatError("zero valid rows")
    return records, rejects, effective_scale or SCALE_CONTINUOUS


def load_records(
    path: str | Path,
    fmt: str = "jsonl",
    scale_kind: Optional[str] = None,
    strict: bool = False,
    embeddings: Optional[EmbeddingTable] = None,
    metadata: Optional[dict[str, ItemMetadata]] = None,
) -> Dataset:
    """Load a dataset from a JSONL or CSV export."""
    path = Path(path)
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"format must be 'jsonl' or 'csv', got {fmt!r}")
    rows: list[tuple[int, dict]] = []
    pre_rejects: list[RejectedRow] = []
    with path.open(newline="" if fmt == "csv" else None, encoding="utf-8") as fh:
        if fmt == "jsonl":
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    if strict:
                        raise DataFormatError(f"line {line_no}: invalid JSON: {exc}") from exc
                    pre_rejects.append(RejectedRow(line_no, f"invalid JSON: {exc}", line))
                    continue
                if not isinstance(obj, dict):
                    if strict:
                        raise DataFormatError(f"line {line_no}: row is not an object")
                    pre_rejects.append(RejectedRow(line_no, "row is not an object", line))
                    continue
                rows.append((line_no, obj))
        else:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DataFormatError("empty CSV file")
            unknown = set(reader.fieldnames) - set(_RECORD_FIELDS)
            if unknown:
                raise DataFormatError(f"unknown CSV columns: {sorted(unknown)}")
            for line_no, row in enumerate(reader, start=2):
                try:
                    obj = {k: _csv_cell_to_value(k, v) for k, v in row.items() if v is not None}
                except ValueError as exc:
                    if strict:
                        raise DataFormatError(f"line {line_no}: {exc}") from exc
                    pre_rejects.append(RejectedRow(line_no, str(exc), json.dumps(row)))
                    continue
                rows.append((line_no, {k: v for k, v in obj.items() if v is not None}))
    records, rejects, effective_scale = records_from_rows(rows, scale_kind, strict)
    if strict:
        _check_timestamp_order(records, raise_on_violation=True)
    dataset = Dataset(
        records=records,
        scale_kind=effective_scale,
        embeddings=embeddings,
        metadata=metadata or {},
        rejected=sorted(pre_rejects + rejects, key=lambda r: r.line_no),
    )
    _check_embedding_references(dataset)
    return dataset


def _check_embedding_references(dataset: Dataset) -> None:
    if dataset.embeddings is None:
        return
    missing = [iid for iid in dataset.by_item if iid not in dataset.embeddings]
    if missing:
        raise DataFormatError(f"items without embeddings: {sorted(missing)[:5]} (total {len(missing)})")


def _check_timestamp_order(records: list[AnnotationRecord], raise_on_violation: bool) -> list[str]:
    last: dict[tuple[str, Optional[str]], int] = {}
    violations = []
    for rec in records:
        if rec.timestamp is None or rec.session_id is None:
            continue
        key = (rec.annotator_id, rec.session_id)
        if key in last and rec.timestamp < last[key]:
            msg = (
                f"timestamp decreases within session {rec.session_id!r} "
                f"for annotator {rec.annotator_id!r} (record {rec.record_id!r})"
            )
            if raise_on_violation:
                raise DataFormatError(msg)
            violations.append(msg)
        last[key] = rec.timestamp
    return violations


def save_records(dataset: Dataset, path: str | Path, fmt: str = "jsonl") -> int:
    """Write records back out in the canonical schema. Returns the row count."""
    path = Path(path)
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for rec in dataset.records:
                fh.write(json.dumps(record_to_obj(rec), sort_keys=True) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=_RECORD_FIELDS)
            writer.writeheader()
            for rec in dataset.records:
                row = {name: getattr(rec, name) for name in _RECORD_FIELDS}
                writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    else:
        raise ValueError(f"format must be 'jsonl' or 'csv', got {fmt!r}")
    return len(dataset.records)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load a JSONL embedding table: one {"item_id": ..., "vector": [...]} per line."""
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"line {line_no}: invalid JSON: {exc}") from exc
            if "item_id" not in obj or "vector" not in obj:
                raise DataFormatError(f"line {line_no}: row needs item_id and vector")
            rows.append((obj["item_id"], obj["vector"]))
    return EmbeddingTable.from_rows(rows)


_METADATA_FIELDS = [f.name for f in fields(ItemMetadata)]


def load_metadata(path: str | Path) -> dict[str, ItemMetadata]:
    """Load item metadata codes from JSONL keyed by item_id."""
    out: dict[str, ItemMetadata] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"line {line_no}: invalid JSON: {exc}") from exc
            unknown = set(obj) - set(_METADATA_FIELDS)
            if unknown:
                raise DataFormatError(f"line {line_no}: unknown fields {sorted(unknown)}")
            if "item_id" not in obj:
                raise DataFormatError(f"line {line_no}: missing item_id")
            if "theme_labels" in obj and obj["theme_labels"] is not None:
                obj["theme_labels"] = frozenset(obj["theme_labels"])
            else:
                obj.pop("theme_labels", None)
            out[obj["item_id"]] = ItemMetadata(**obj)
    return out


def metadata_to_obj(meta: ItemMetadata) -> dict:
    out = {}
    for name in _METADATA_FIELDS:
        value = getattr(meta, name)
        if name == "theme_labels":
            if value:
                out[name] = sorted(value)
        elif value is not None:
            out[name] = value
    return out


@dataclass
class ValidationReport:
    """Report-only summary of what diagnostics the dataset can support."""

    n_records: int
    n_annotators: int
    n_items: int
    n_repeat_groups: int
    n_framing_pairs: int
    n_sessions: int
    framing_coverage_pct: float
    warnings: list[str]

    def as_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_annotators": self.n_annotators,
            "n_items": self.n_items,
            "n_repeat_groups": self.n_repeat_groups,
            "n_framing_pairs": self.n_framing_pairs,
            "n_sessions": self.n_sessions,
            "framing_coverage_pct": self.framing_coverage_pct,
            "warnings": list(self.warnings),
        }


def validate(dataset: Dataset) -> ValidationReport:
    """Pure, side-effect-free audit of dataset structure.

    Flags records lacking the fields each downstream diagnostic needs; never
    raises on content (structural problems were already handled at load).
    """
    warnings: list[str] = []
    n_records = len(dataset.records)
    n_items = len(dataset.by_item)
    n_repeat_groups = len(dataset.repeat_groups)
    sessions = {r.session_id for r in dataset.records if r.session_id is not None}

    framed_items = {r.item_id for r in dataset.records if r.framing_id is not None}
    variants: dict[str, set[str]] = {}
    for rec in dataset.records:
        if rec.framing_id is not None:
            variants.setdefault(rec.item_id, set()).add(rec.framing_id)
    n_framing_pairs = sum(1 for ids in variants.values() if len(ids) >= 2)
    coverage = 100.0 * len(framed_items) / n_items if n_items else 0.0

    if n_records == 0:
        warnings.append("empty dataset")
    if n_repeat_groups == 0 and n_records:
        warnings.append("temporal diagnostics unavailable: no repeated (annotator, item, framing) groups")
    elif n_repeat_groups and not sessions and not any(r.timestamp is not None for r in dataset.records):
        warnings.append("repeats present but no session or timestamp info; temporal pairing cannot qualify them")
    if n_framing_pairs == 0 and n_records:
        warnings.append("framing diagnostics unavailable: no item carries two framing variants")
    if dataset.scale_kind == SCALE_BINARY and n_records:
        order_tags = {r.condition_tag for r in dataset.records if r.condition_tag in (ORDER_TAG_AB, ORDER_TAG_BA)}
        if len(order_tags) < 2:
            warnings.append("order diagnostics unavailable: no items presented under both orders")
    themed = sum(1 for m in dataset.metadata.values() if m.theme_labels)
    if n_records and themed == 0:
        warnings.append("inconsistency-ratio diagnostics unavailable: no theme labels in metadata")
    warnings.extend(_check_timestamp_order(dataset.records, raise_on_violation=False))

    return ValidationReport(
        n_records=n_records,
        n_annotators=len(dataset.by_annotator),
        n_items=n_items,
        n_repeat_groups=n_repeat_groups,
        n_framing_pairs=n_framing_pairs,
        n_sessions=len(sessions),
        framing_coverage_pct=coverage,
        warnings=warnings,
    )
