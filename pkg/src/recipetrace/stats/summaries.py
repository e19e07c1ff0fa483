"""Selection summaries, never-found listings and the creativity report."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable

from ..core import AnnotationRecord, ItemKind, Label
from ..core.labels import LABEL_ENUMS


@dataclass(frozen=True, slots=True)
class SelectionRow:
    label: Label
    count: int
    percentage: float  # rounded to 2 decimals


@dataclass(frozen=True, slots=True)
class SelectionSummary:
    item_kind: ItemKind
    rows: tuple[SelectionRow, ...]
    total: int


def selection_summary(
    records: Iterable[AnnotationRecord], item_kind: ItemKind
) -> SelectionSummary:
    """Counts and percentages per label value, in taxonomy declaration order.

    Labels with zero selections keep a row only if another label was used;
    an empty record set yields an empty table.
    """
    counts: Counter[Label] = Counter(
        rec.label for rec in records if rec.item_kind == item_kind
    )
    total = sum(counts.values())
    rows = []
    if total:
        for label in LABEL_ENUMS[item_kind]:
            count = counts.get(label, 0)
            rows.append(
                SelectionRow(
                    label=label,
                    count=count,
                    percentage=round(100.0 * count / total, 2),
                )
            )
    return SelectionSummary(item_kind=item_kind, rows=tuple(rows), total=total)


ItemNamer = Callable[[str, ItemKind, int], str]


def _default_namer(recipe: str, kind: ItemKind, ordinal: int) -> str:
    return f"{kind.value}#{ordinal}"


@dataclass(frozen=True, slots=True)
class NeverFoundItem:
    recipe: str
    item: str
    item_ordinal: int
    label_counts: dict[Label, int]


def never_found_items(
    records: Iterable[AnnotationRecord],
    item_kind: ItemKind,
    top_label: Label,
    item_names: ItemNamer | None = None,
) -> list[NeverFoundItem]:
    """Items that no annotator marked with the top label in any document.

    The full per-label count breakdown across documents and annotators is
    returned for each such item.
    """
    namer = item_names or _default_namer
    counts: dict[tuple[str, int], Counter] = defaultdict(Counter)
    for rec in records:
        if rec.item_kind == item_kind:
            counts[(rec.recipe, rec.item_ordinal)][rec.label] += 1

    out = []
    for (recipe, ordinal), label_counts in sorted(counts.items()):
        if label_counts.get(top_label, 0) == 0:
            out.append(
                NeverFoundItem(
                    recipe=recipe,
                    item=namer(recipe, item_kind, ordinal),
                    item_ordinal=ordinal,
                    label_counts=dict(label_counts),
                )
            )
    return out


@dataclass(frozen=True, slots=True)
class CreativityItem:
    recipe: str
    item: str
    item_ordinal: int
    status: str  # creative | found | nonsense
    found_documents: tuple[str, ...]
    label_counts: dict[Label, int]


@dataclass(frozen=True, slots=True)
class CreativityReport:
    item_kind: ItemKind
    items: tuple[CreativityItem, ...]

    def creative_items(self) -> tuple[CreativityItem, ...]:
        return tuple(i for i in self.items if i.status == "creative")


def creativity_report(
    judge_records: Iterable[AnnotationRecord],
    item_kind: ItemKind,
    found_predicate: set[Label],
    nonsense_items: set[tuple[str, int]],
    item_names: ItemNamer | None = None,
) -> CreativityReport:
    """Classify every item as creative, found somewhere, or nonsense.

    An item is creative when no document (including targeted re-search
    documents present in the record stream) yields a found-family label and
    the screening stage did not flag the item as nonsensical.  Items found
    anywhere carry the citing document ids as evidence.
    """
    namer = item_names or _default_namer
    counts: dict[tuple[str, int], Counter] = defaultdict(Counter)
    found_docs: dict[tuple[str, int], set[str]] = defaultdict(set)
    for rec in judge_records:
        if rec.item_kind != item_kind:
            continue
        counts[(rec.recipe, rec.item_ordinal)][rec.label] += 1
        if rec.label in found_predicate:
            found_docs[(rec.recipe, rec.item_ordinal)].add(rec.document_id)

    items = []
    for (recipe, ordinal), label_counts in sorted(counts.items()):
        docs = tuple(sorted(found_docs.get((recipe, ordinal), ())))
        if docs:
            status = "found"
        elif (recipe, ordinal) in nonsense_items:
            status = "nonsense"
        else:
            status = "creative"
        items.append(
            CreativityItem(
                recipe=recipe,
                item=namer(recipe, item_kind, ordinal),
                item_ordinal=ordinal,
                status=status,
                found_documents=docs,
                label_counts=dict(label_counts),
            )
        )
    return CreativityReport(item_kind=item_kind, items=tuple(items))
