"""Exhaustivity curves: found coverage over combinations of n documents."""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from math import comb
from typing import Iterable

from ..core import AnnotationRecord, ItemKind, Label


class IncompleteCoverageError(ValueError):
    """Some (item, document) pair carries no annotation."""

    def __init__(self, missing: list[tuple[str, int, str]]):
        self.missing = missing
        shown = ", ".join(
            f"{recipe}/{ordinal} vs {doc}" for recipe, ordinal, doc in missing[:5]
        )
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        super().__init__(f"items lack annotations against documents: {shown}{more}")


@dataclass(frozen=True, slots=True)
class SaturationCurve:
    item_kind: ItemKind
    found_predicate: frozenset[Label]
    points: tuple[tuple[int, float], ...]  # (n, percentage in [0, 100])
    mode: str  # "exact" or "sampled(count,seed)"


def _per_recipe_coverage(
    records: Iterable[AnnotationRecord], item_kind: ItemKind, found_predicate: set[Label]
) -> dict[str, tuple[list[str], dict[int, set[str]], dict[tuple[int, str], bool]]]:
    """Per recipe: its document list, per-item annotated docs, and found flags.

    The found flag for (item, document) is true when any annotator's record
    for that pair carries a label in the predicate.
    """
    docs: dict[str, set[str]] = defaultdict(set)
    items: dict[str, set[int]] = defaultdict(set)
    annotated: dict[str, dict[int, set[str]]] = defaultdict(lambda: defaultdict(set))
    found: dict[str, dict[tuple[int, str], bool]] = defaultdict(dict)
    for rec in records:
        if rec.item_kind != item_kind:
            continue
        recipe = rec.recipe
        docs[recipe].add(rec.document_id)
        items[recipe].add(rec.item_ordinal)
        annotated[recipe][rec.item_ordinal].add(rec.document_id)
        key = (rec.item_ordinal, rec.document_id)
        found[recipe][key] = found[recipe].get(key, False) or (
            rec.label in found_predicate
        )

    out = {}
    missing: list[tuple[str, int, str]] = []
    for recipe in sorted(docs):
        doc_list = sorted(docs[recipe])
        for ordinal in sorted(items[recipe]):
            for doc in doc_list:
                if doc not in annotated[recipe][ordinal]:
                    missing.append((recipe, ordinal, doc))
        out[recipe] = (doc_list, dict(annotated[recipe]), dict(found[recipe]))
    if missing:
        raise IncompleteCoverageError(missing)
    return out


def saturation_curve(
    records: Iterable[AnnotationRecord],
    item_kind: ItemKind,
    found_predicate: set[Label],
    mode: str = "exact",
    sample_count: int = 1000,
    seed: int = 0,
) -> SaturationCurve:
    """Coverage percentage over document subsets of each size n.

    For a subset, an item counts as covered when at least one subset document
    carries a found-family label for it.  Exact mode averages over all
    subsets of size n, which reduces to a hypergeometric closed form: an item
    found in k of the recipe's N documents is covered by
    1 - C(N-k, n) / C(N, n) of the subsets.  Sampled mode draws subsets
    uniformly with a fixed seed.  Per-recipe fractions are averaged
    arithmetically across recipes.
    """
    per_recipe = _per_recipe_coverage(records, item_kind, found_predicate)
    if not per_recipe:
        raise ValueError(f"no records of kind {item_kind.value}")
    # Curves are only comparable across the shared range of subset sizes.
    max_n = min(len(entry[0]) for entry in per_recipe.values())

    rng = random.Random(seed)
    points = []
    for n in range(1, max_n + 1):
        recipe_fractions = []
        for recipe, (doc_list, annotated, found) in sorted(per_recipe.items()):
            ordinals = sorted(annotated.keys())
            if not ordinals:
                continue
            total_docs = len(doc_list)
            if mode == "exact":
                acc = 0.0
                for ordinal in ordinals:
                    k = sum(1 for doc in doc_list if found[(ordinal, doc)])
                    acc += 1.0 - comb(total_docs - k, n) / comb(total_docs, n)
                recipe_fractions.append(acc / len(ordinals))
            elif mode == "sampled":
                covered_fraction = 0.0
                for _ in range(sample_count):
                    subset = rng.sample(doc_list, n)
                    covered = sum(
                        1
                        for ordinal in ordinals
                        if any(found[(ordinal, doc)] for doc in subset)
                    )
                    covered_fraction += covered / len(ordinals)
                recipe_fractions.append(covered_fraction / sample_count)
            else:
                raise ValueError(f"unknown saturation mode: {mode!r}")
        points.append((n, 100.0 * sum(recipe_fractions) / len(recipe_fractions)))

    mode_tag = "exact" if mode == "exact" else f"sampled({sample_count},{seed})"
    return SaturationCurve(
        item_kind=item_kind,
        found_predicate=frozenset(found_predicate),
        points=tuple(points),
        mode=mode_tag,
    )
