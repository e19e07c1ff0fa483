"""Macro accuracy between annotator pairs and between a model and humans."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from ..core import (
    AnnotationRecord,
    IngredientScheme,
    ItemKind,
    Label,
    TaskScheme,
    merge_for_kind,
)
from .agreement import doubly_annotated_items


@dataclass(frozen=True, slots=True)
class RecipeRatio:
    recipe: str
    matched: int
    total: int

    @property
    def ratio(self) -> float:
        return self.matched / self.total


@dataclass(frozen=True, slots=True)
class PairAccuracy:
    annotator_a: str
    annotator_b: str
    recipes: tuple[RecipeRatio, ...]
    value: float


@dataclass(frozen=True, slots=True)
class AccuracyReport:
    kind: str  # "human_macro" or "model_macro"
    annotator: str | None
    per_recipe: tuple[RecipeRatio, ...]
    pairs: tuple[PairAccuracy, ...]
    value: float


def human_macro_accuracy(
    records: Iterable[AnnotationRecord], kinds: set[ItemKind]
) -> AccuracyReport:
    """Mean over annotator pairs of the mean over recipes of agreement ratios.

    A recipe enters a pair's inner mean only when that pair shares at least
    one item of the requested kinds in it.
    """
    grouped = doubly_annotated_items(records, kinds)
    if not grouped:
        raise ValueError("no annotator pair shares any items")

    per_pair: dict[tuple[str, str], list[RecipeRatio]] = defaultdict(list)
    for (recipe, ann_a, ann_b), items in sorted(grouped.items()):
        matched = sum(1 for _, label_a, label_b in items if label_a == label_b)
        per_pair[(ann_a, ann_b)].append(
            RecipeRatio(recipe=recipe, matched=matched, total=len(items))
        )

    pairs = []
    for (ann_a, ann_b), ratios in sorted(per_pair.items()):
        inner = sum(r.ratio for r in ratios) / len(ratios)
        pairs.append(
            PairAccuracy(
                annotator_a=ann_a, annotator_b=ann_b, recipes=tuple(ratios), value=inner
            )
        )
    value = sum(p.value for p in pairs) / len(pairs)
    return AccuracyReport(
        kind="human_macro", annotator=None, per_recipe=(), pairs=tuple(pairs), value=value
    )


def model_accuracy(
    judge_records: Iterable[AnnotationRecord],
    human_records: Iterable[AnnotationRecord],
    kinds: set[ItemKind],
    ingredient_scheme: IngredientScheme = IngredientScheme.THREE_CLASS,
    task_scheme: TaskScheme = TaskScheme.FOUR_CLASS,
) -> AccuracyReport:
    """Mean over recipes of the model's per-recipe human-match ratio.

    An item annotated by two humans counts as matched when the model agrees
    with either of them, and contributes exactly once to the recipe total.
    Labels on both sides are compared after the configured class merges.
    """

    def merged(kind: ItemKind, label: Label) -> Label:
        return merge_for_kind(kind, label, ingredient_scheme, task_scheme)

    human_labels: dict[tuple, set[Label]] = defaultdict(set)
    for rec in human_records:
        if rec.item_kind in kinds:
            human_labels[rec.item_key].add(merged(rec.item_kind, rec.label))

    model_ids = set()
    judged: dict[tuple, Label] = {}
    for rec in judge_records:
        if rec.item_kind in kinds:
            model_ids.add(rec.annotator)
            judged[rec.item_key] = merged(rec.item_kind, rec.label)
    if len(model_ids) > 1:
        raise ValueError(
            f"model_accuracy expects records of one model, got {sorted(model_ids)}"
        )

    per_recipe_counts: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for item_key, label in judged.items():
        humans = human_labels.get(item_key)
        if not humans:
            continue
        recipe = item_key[0]
        per_recipe_counts[recipe][1] += 1
        if label in humans:
            per_recipe_counts[recipe][0] += 1

    if not per_recipe_counts:
        raise ValueError("judge and human records share no items")
    ratios = tuple(
        RecipeRatio(recipe=recipe, matched=matched, total=total)
        for recipe, (matched, total) in sorted(per_recipe_counts.items())
    )
    value = sum(r.ratio for r in ratios) / len(ratios)
    return AccuracyReport(
        kind="model_macro",
        annotator=model_ids.pop() if model_ids else None,
        per_recipe=ratios,
        pairs=(),
        value=value,
    )
