"""Inter-annotator agreement: Cohen's kappa per recipe-annotator pair."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..core import KIND_ORDER, AnnotationRecord, ItemKind, Label


def cohens_kappa(labels_a: Sequence[Label], labels_b: Sequence[Label]) -> float:
    """Unweighted Cohen's kappa with marginals taken from the two sequences.

    Chance agreement of exactly 1 can only occur when both sequences are a
    single shared category, i.e. full agreement; kappa is defined as 1 there.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError(
            f"sequences must align: {len(labels_a)} vs {len(labels_b)} labels"
        )
    n = len(labels_a)
    if n == 0:
        raise ValueError("cannot compute kappa on empty sequences")

    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    marg_a = Counter(labels_a)
    marg_b = Counter(labels_b)
    expected = sum(
        (marg_a[cat] / n) * (marg_b[cat] / n) for cat in marg_a.keys() | marg_b.keys()
    )
    if expected == 1.0:
        if observed == 1.0:
            return 1.0
        raise ValueError("chance agreement is 1 but sequences disagree")
    return (observed - expected) / (1.0 - expected)


@dataclass(frozen=True, slots=True)
class PairKappa:
    recipe: str
    annotator_a: str
    annotator_b: str
    item_count: int
    kappa: float


@dataclass(frozen=True, slots=True)
class AgreementReport:
    pairs: tuple[PairKappa, ...]
    macro_kappa: float

    @property
    def pair_count(self) -> int:
        return len(self.pairs)


def doubly_annotated_items(
    records: Iterable[AnnotationRecord], kinds: set[ItemKind]
) -> dict[tuple[str, str, str], list[tuple]]:
    """Group shared items by (recipe, annotator_a, annotator_b), a < b.

    Each value is a list of (sort_key, label_a, label_b) for items the pair
    both annotated.  Items seen by a single annotator, or more than two, do
    not form pairs.
    """
    by_item: dict[tuple, dict[str, Label]] = defaultdict(dict)
    for rec in records:
        if rec.item_kind in kinds:
            by_item[rec.item_key][rec.annotator] = rec.label

    grouped: dict[tuple[str, str, str], list[tuple]] = defaultdict(list)
    for (recipe, document_id, kind, ordinal), labels in by_item.items():
        if len(labels) != 2:
            continue
        (ann_a, label_a), (ann_b, label_b) = sorted(labels.items())
        sort_key = (document_id, KIND_ORDER[kind], ordinal)
        grouped[(recipe, ann_a, ann_b)].append((sort_key, label_a, label_b))
    return grouped


def macro_kappa(
    records: Iterable[AnnotationRecord], kinds: set[ItemKind]
) -> AgreementReport:
    """Kappa per (recipe, annotator pair) over shared items, macro-averaged.

    For task agreement, pass all three triple field kinds: their labels are
    concatenated into one sequence per pair so each field contributes equally.
    """
    grouped = doubly_annotated_items(records, kinds)
    if not grouped:
        raise ValueError("no doubly-annotated items for the requested kinds")

    pairs = []
    for (recipe, ann_a, ann_b), items in sorted(grouped.items()):
        items.sort(key=lambda entry: entry[0])
        labels_a = [label_a for _, label_a, _ in items]
        labels_b = [label_b for _, _, label_b in items]
        pairs.append(
            PairKappa(
                recipe=recipe,
                annotator_a=ann_a,
                annotator_b=ann_b,
                item_count=len(items),
                kappa=cohens_kappa(labels_a, labels_b),
            )
        )
    macro = sum(p.kappa for p in pairs) / len(pairs)
    return AgreementReport(pairs=tuple(pairs), macro_kappa=macro)
