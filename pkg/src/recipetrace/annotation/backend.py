"""Annotation task queue and append-only record persistence.

The store is an event log: nothing is ever mutated or deleted.  The one
sanctioned amendment, upgrading a Not found ingredient to Implied during the
document's open session, appends a superseding event; exports materialize
the current view.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from ..core import (
    KIND_ORDER,
    AnnotationRecord,
    GeneratedRecipe,
    IngredientLabel,
    IngredientListLabel,
    ItemKind,
    Label,
    TaskLabel,
    ToolLabel,
    record_from_dict,
    record_sort_key,
    utc_now,
)
from ..core.labels import LABEL_ENUMS
from .assignments import Assignment


class RecordConflict(ValueError):
    """A submission clashes with an existing record for the same key."""

    def __init__(self, message: str, existing: AnnotationRecord):
        super().__init__(message)
        self.existing = existing


class UnknownItem(ValueError):
    """The submitted key does not match any item assigned to the annotator."""


HUMAN_CHOICES: dict[ItemKind, tuple[Label, ...]] = {
    kind: tuple(
        label
        for label in enum
        if label.value != "Not filled in"  # never directly selectable
    )
    for kind, enum in LABEL_ENUMS.items()
}


@dataclass(frozen=True, slots=True)
class PendingItem:
    annotator: str
    recipe: str
    document_id: str
    document_url: str
    item_kind: ItemKind
    item_ordinal: int
    item_text: str
    allowed_labels: tuple[str, ...]
    # Context shown to the annotator: the generated lists.
    generated_ingredients: tuple[str, ...]
    generated_tasks: tuple[str, ...]


@dataclass
class EventStore:
    """Append-only JSONL event log with a materialized current view."""

    path: Path
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    current: dict[tuple, AnnotationRecord] = field(default_factory=dict)
    auto_keys: set[tuple] = field(default_factory=set)
    open_sessions: dict[str, tuple[str, str]] = field(default_factory=dict)
    closed_sessions: set[tuple[str, str, str]] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.path = Path(self.path)
        if self.path.is_file():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._apply(json.loads(line))

    def _append(self, event: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, separators=(",", ":")) + "\n")

    def _apply(self, event: dict) -> None:
        kind = event.get("event")
        if kind in ("record", "upgrade"):
            record = record_from_dict(event)
            self.current[record.key] = record
            if event.get("auto"):
                self.auto_keys.add(record.key)
        elif kind == "open_session":
            self.open_sessions[event["annotator"]] = (
                event["recipe"],
                event["document_id"],
            )
        elif kind == "close_session":
            session = (event["annotator"], event["recipe"], event["document_id"])
            self.closed_sessions.add(session)
            if self.open_sessions.get(event["annotator"]) == (
                event["recipe"],
                event["document_id"],
            ):
                del self.open_sessions[event["annotator"]]
        else:
            raise ValueError(f"unknown event type {kind!r}")

    def emit(self, event: dict) -> None:
        with self._lock:
            self._append(event)
            self._apply(event)

    def session_open(self, annotator: str, recipe: str, document_id: str) -> bool:
        return self.open_sessions.get(annotator) == (recipe, document_id)

    def session_closed(self, annotator: str, recipe: str, document_id: str) -> bool:
        return (annotator, recipe, document_id) in self.closed_sessions


def _record_event(record: AnnotationRecord, kind: str = "record", auto: bool = False) -> dict:
    event = record.to_dict()
    event["event"] = kind
    if auto:
        event["auto"] = True
    return event


class AnnotationBackend:
    """Serves pending items and stores decisions for a set of assignments."""

    def __init__(
        self,
        recipes: list[GeneratedRecipe],
        document_urls: dict[str, dict[str, str]],  # recipe -> doc id -> url
        assignments: list[Assignment],
        store: EventStore,
    ):
        self.recipes = {r.name.text: r for r in recipes}
        self.document_urls = document_urls
        self.assignments = assignments
        self.by_annotator: dict[str, list[Assignment]] = {}
        for assignment in assignments:
            self.by_annotator.setdefault(assignment.annotator_id, []).append(assignment)
        for queue in self.by_annotator.values():
            queue.sort(key=lambda a: a.recipe)
        self.store = store
        self._write_lock = threading.Lock()
        self._auto_resolve_structural()

    # -- item universe ----------------------------------------------------

    def _doc_items(self, recipe: GeneratedRecipe) -> list[tuple[ItemKind, int]]:
        items: list[tuple[ItemKind, int]] = [
            (ItemKind.INGREDIENT, m.ordinal) for m in recipe.ingredients
        ]
        for task in recipe.tasks:
            items.append((ItemKind.TASK_NAME, task.ordinal))
            items.append((ItemKind.TOOL, task.ordinal))
            items.append((ItemKind.INGREDIENT_LIST, task.ordinal))
        return items

    def item_universe(self, annotator: str) -> list[tuple]:
        """Every (annotator, recipe, doc, kind, ordinal) key the annotator owns."""
        keys = []
        for assignment in self.by_annotator.get(annotator, []):
            recipe = self.recipes[assignment.recipe]
            for doc_id in assignment.document_ids:
                for kind, ordinal in self._doc_items(recipe):
                    keys.append((annotator, assignment.recipe, doc_id, kind, ordinal))
        return keys

    def _auto_resolve_structural(self) -> None:
        """Fields with nothing to annotate become Not filled in up front.

        Idempotent across restarts: existing records short-circuit.
        """
        for assignment in self.assignments:
            recipe = self.recipes[assignment.recipe]
            for doc_id in assignment.document_ids:
                for task in recipe.tasks:
                    if not task.tools:
                        self._auto_record(
                            assignment.annotator_id,
                            assignment.recipe,
                            doc_id,
                            ItemKind.TOOL,
                            task.ordinal,
                            ToolLabel.NOT_FILLED_IN,
                        )
                    if not task.ingredients:
                        self._auto_record(
                            assignment.annotator_id,
                            assignment.recipe,
                            doc_id,
                            ItemKind.INGREDIENT_LIST,
                            task.ordinal,
                            IngredientListLabel.NOT_FILLED_IN,
                        )

    def _auto_record(
        self,
        annotator: str,
        recipe: str,
        doc_id: str,
        kind: ItemKind,
        ordinal: int,
        label: Label,
    ) -> None:
        key = (annotator, recipe, doc_id, kind, ordinal)
        if key in self.store.current:
            return
        record = AnnotationRecord(
            annotator=annotator,
            recipe=recipe,
            document_id=doc_id,
            item_kind=kind,
            item_ordinal=ordinal,
            label=label,
            timestamp=utc_now(),
        )
        self.store.emit(_record_event(record, auto=True))

    # -- queue -------------------------------------------------------------

    def next_pending(self, annotator: str) -> PendingItem | None:
        """First unanswered item in reading order, or None when exhausted.

        Order: per assignment (recipe), documents in assignment order; within
        a document all ingredients by ordinal, then each task triple's name,
        tool and ingredient-list fields.
        """
        if annotator not in self.by_annotator:
            raise UnknownItem(f"unknown annotator {annotator!r}")
        for assignment in self.by_annotator[annotator]:
            recipe = self.recipes[assignment.recipe]
            for doc_id in assignment.document_ids:
                for kind, ordinal in self._doc_items(recipe):
                    key = (annotator, assignment.recipe, doc_id, kind, ordinal)
                    if key in self.store.current:
                        continue
                    return self._pending_item(annotator, recipe, doc_id, kind, ordinal)
        return None

    def _pending_item(
        self,
        annotator: str,
        recipe: GeneratedRecipe,
        doc_id: str,
        kind: ItemKind,
        ordinal: int,
    ) -> PendingItem:
        if kind is ItemKind.INGREDIENT:
            item_text = recipe.ingredients[ordinal].name
        else:
            task = recipe.tasks[ordinal]
            if kind is ItemKind.TASK_NAME:
                item_text = task.action
            elif kind is ItemKind.TOOL:
                item_text = ", ".join(t.name for t in task.tools)
            else:
                item_text = ", ".join(task.ingredients)
        url = self.document_urls.get(recipe.name.text, {}).get(doc_id, "")
        return PendingItem(
            annotator=annotator,
            recipe=recipe.name.text,
            document_id=doc_id,
            document_url=url,
            item_kind=kind,
            item_ordinal=ordinal,
            item_text=item_text,
            allowed_labels=tuple(l.value for l in HUMAN_CHOICES[kind]),
            generated_ingredients=tuple(m.name for m in recipe.ingredients),
            generated_tasks=tuple(
                f"{t.action} | tools: {', '.join(n.name for n in t.tools) or '-'} | "
                f"ingredients: {', '.join(t.ingredients) or '-'}"
                for t in recipe.tasks
            ),
        )

    # -- recording ---------------------------------------------------------

    def record(self, record: AnnotationRecord) -> tuple[str, AnnotationRecord, list[AnnotationRecord]]:
        """Store one decision.

        Returns (status, stored record, auto-resolved dependents).  Status is
        "stored", "duplicate" (identical resubmission) or "upgraded".
        Submitting a different label for an existing key raises
        RecordConflict carrying the original, except for the sanctioned
        NotFound->Implied upgrade during the open document session.
        """
        with self._write_lock:
            key = record.key
            if key not in set(self.item_universe(record.annotator)):
                raise UnknownItem(
                    f"no pending item for {record.recipe}/{record.document_id}/"
                    f"{record.item_kind.value}#{record.item_ordinal}"
                )
            if record.label.value == "Not filled in":
                raise ValueError("Not filled in is assigned by the server, not submitted")
            if record.label not in HUMAN_CHOICES[record.item_kind]:
                raise ValueError(
                    f"label {record.label.value!r} not allowed for {record.item_kind.value}"
                )

            existing = self.store.current.get(key)
            if existing is not None:
                if existing.label == record.label:
                    return "duplicate", existing, []
                if (
                    record.item_kind is ItemKind.INGREDIENT
                    and existing.label is IngredientLabel.NOT_FOUND
                    and record.label is IngredientLabel.IMPLIED
                    and self.store.session_open(
                        record.annotator, record.recipe, record.document_id
                    )
                ):
                    self.store.emit(_record_event(record, kind="upgrade"))
                    return "upgraded", record, []
                raise RecordConflict(
                    f"item already recorded as {existing.label.value!r}", existing
                )

            self._manage_sessions(record)
            self.store.emit(_record_event(record))
            resolved = self._resolve_dependents(record)
            return "stored", record, resolved

    def _manage_sessions(self, record: AnnotationRecord) -> None:
        annotator = record.annotator
        current = self.store.open_sessions.get(annotator)
        target = (record.recipe, record.document_id)
        if current == target:
            return
        if current is not None:
            self.store.emit(
                {
                    "event": "close_session",
                    "annotator": annotator,
                    "recipe": current[0],
                    "document_id": current[1],
                    "timestamp": utc_now().isoformat(),
                }
            )
        self.store.emit(
            {
                "event": "open_session",
                "annotator": annotator,
                "recipe": record.recipe,
                "document_id": record.document_id,
                "timestamp": utc_now().isoformat(),
            }
        )

    def _resolve_dependents(self, record: AnnotationRecord) -> list[AnnotationRecord]:
        if record.item_kind is not ItemKind.TASK_NAME:
            return []
        if record.label is not TaskLabel.TASK_NOT_FOUND:
            return []
        resolved = []
        for kind, label in (
            (ItemKind.TOOL, ToolLabel.NOT_FILLED_IN),
            (ItemKind.INGREDIENT_LIST, IngredientListLabel.NOT_FILLED_IN),
        ):
            key = (record.annotator, record.recipe, record.document_id, kind, record.item_ordinal)
            if key in self.store.current:
                continue
            auto = AnnotationRecord(
                annotator=record.annotator,
                recipe=record.recipe,
                document_id=record.document_id,
                item_kind=kind,
                item_ordinal=record.item_ordinal,
                label=label,
                timestamp=utc_now(),
            )
            self.store.emit(_record_event(auto, auto=True))
            resolved.append(auto)
        return resolved

    def close_document(self, annotator: str, recipe: str, document_id: str) -> None:
        """Freeze the document's records; further upgrades are rejected."""
        self.store.emit(
            {
                "event": "close_session",
                "annotator": annotator,
                "recipe": recipe,
                "document_id": document_id,
                "timestamp": utc_now().isoformat(),
            }
        )

    # -- export and progress ------------------------------------------------

    def export_records(self) -> Iterator[AnnotationRecord]:
        """Current records in deterministic order; byte-stable between writes."""
        yield from sorted(self.store.current.values(), key=record_sort_key)

    def export_lines(self) -> str:
        return "".join(record.to_json_line() + "\n" for record in self.export_records())

    def progress(self, annotator: str) -> dict[str, int]:
        universe = self.item_universe(annotator)
        recorded = 0
        auto = 0
        for key in universe:
            if key in self.store.current:
                if key in self.store.auto_keys:
                    auto += 1
                else:
                    recorded += 1
        total = len(universe)
        return {
            "total": total,
            "recorded": recorded,
            "auto_resolved": auto,
            "pending": total - recorded - auto,
        }
