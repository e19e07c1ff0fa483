"""Annotation records and their canonical newline-delimited serialization.

One record per line, each line a flat JSON object with a fixed key order.
This format is the ingestion contract for the statistics stage and the
export format of the annotation service.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Iterator

from .labels import (
    KIND_ORDER,
    ItemKind,
    Label,
    LabelParseError,
    parse_item_kind,
    parse_label,
)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True, slots=True)
class AnnotationRecord:
    """One labeling decision by a human annotator or a model judge."""

    annotator: str
    recipe: str
    document_id: str
    item_kind: ItemKind
    item_ordinal: int
    label: Label
    timestamp: datetime

    @property
    def key(self) -> tuple[str, str, str, ItemKind, int]:
        return (
            self.annotator,
            self.recipe,
            self.document_id,
            self.item_kind,
            self.item_ordinal,
        )

    @property
    def item_key(self) -> tuple[str, str, ItemKind, int]:
        """Identity of the annotated item, independent of annotator."""
        return (self.recipe, self.document_id, self.item_kind, self.item_ordinal)

    def to_dict(self) -> dict:
        return {
            "annotator": self.annotator,
            "recipe": self.recipe,
            "document_id": self.document_id,
            "item_kind": self.item_kind.value,
            "item_ordinal": self.item_ordinal,
            "label": self.label.value,
            "timestamp": self.timestamp.isoformat(),
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))


class RecordFormatError(ValueError):
    """A canonical record line is malformed."""


def record_from_dict(data: dict) -> AnnotationRecord:
    try:
        kind = parse_item_kind(data["item_kind"])
        label = parse_label(kind, data["label"])
        ts = datetime.fromisoformat(data["timestamp"])
        if ts.tzinfo is None:
            raise RecordFormatError(f"timestamp {data['timestamp']!r} is not UTC-aware")
        return AnnotationRecord(
            annotator=str(data["annotator"]),
            recipe=str(data["recipe"]),
            document_id=str(data["document_id"]),
            item_kind=kind,
            item_ordinal=int(data["item_ordinal"]),
            label=label,
            timestamp=ts,
        )
    except KeyError as exc:
        raise RecordFormatError(f"record missing field {exc}") from None
    except LabelParseError as exc:
        raise RecordFormatError(str(exc)) from None


def record_from_json_line(line: str) -> AnnotationRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"invalid record line: {exc}") from None
    if not isinstance(data, dict):
        raise RecordFormatError("record line is not an object")
    return record_from_dict(data)


def read_records(lines: Iterable[str]) -> Iterator[AnnotationRecord]:
    """Parse canonical record lines, skipping blank lines only."""
    for line in lines:
        line = line.strip()
        if line:
            yield record_from_json_line(line)


def record_sort_key(record: AnnotationRecord):
    return (
        record.annotator,
        record.recipe,
        record.document_id,
        KIND_ORDER[record.item_kind],
        record.item_ordinal,
    )
