"""Deterministic generation of annotator-document assignments with overlap."""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Assignment:
    annotator_id: str
    recipe: str
    document_ids: tuple[str, ...]
    # document id -> other annotators sharing it (empty tuple for solo docs)
    overlap_partners: dict[str, tuple[str, ...]]


class AssignmentError(ValueError):
    pass


def annotators_needed(n_docs: int, per_annotator: int, overlap: int) -> int:
    """Smallest annotator count covering n_docs at the requested overlap.

    Each annotator contributes per_annotator slots of which overlap are
    shared; two shared slots cover one document twice, so A annotators cover
    A * (per_annotator - overlap/2) distinct documents.
    """
    if overlap > per_annotator:
        raise AssignmentError(f"overlap {overlap} cannot exceed documents per annotator {per_annotator}")
    coverage_each = per_annotator - overlap / 2
    if coverage_each <= 0:
        raise AssignmentError("overlap leaves no coverage per annotator")
    needed = n_docs / coverage_each
    if needed != int(needed):
        raise AssignmentError(
            f"{n_docs} documents cannot be covered exactly with "
            f"{per_annotator} per annotator and overlap {overlap}"
        )
    needed = int(needed)
    if overlap > 0 and needed < 2:
        raise AssignmentError("overlap requires at least two annotators per recipe")
    if needed > 2 and overlap % 2 != 0:
        # The pair cycle hands each annotator two shared slots per round; an
        # odd overlap cannot come out uniform except in the two-annotator case.
        raise AssignmentError(
            f"odd overlap {overlap} is only constructible with two annotators per recipe"
        )
    return needed


def generate_assignments(
    annotators: list[str],
    documents_per_recipe: dict[str, list[str]],
    per_annotator: int,
    overlap: int,
    seed: int,
) -> list[Assignment]:
    """Per recipe: every chosen annotator gets exactly per_annotator documents,
    overlap of them shared with peers, and every document is covered.

    Deterministic for a fixed seed.  Annotators rotate across recipes so the
    workload spreads over the whole pool.
    """
    if overlap > per_annotator:
        raise AssignmentError(f"overlap {overlap} cannot exceed documents per annotator {per_annotator}")
    assignments: list[Assignment] = []
    rotation = 0
    for recipe in sorted(documents_per_recipe):
        docs = list(documents_per_recipe[recipe])
        needed = annotators_needed(len(docs), per_annotator, overlap)
        if needed > len(annotators):
            raise AssignmentError(
                f"recipe {recipe!r} needs {needed} annotators, only {len(annotators)} available"
            )
        chosen = [annotators[(rotation + i) % len(annotators)] for i in range(needed)]
        if len(set(chosen)) != needed:
            raise AssignmentError(
                f"annotator pool too small to choose {needed} distinct annotators"
            )
        rotation += needed

        rng = random.Random(f"{seed}:{recipe}")
        shuffled = rng.sample(docs, len(docs))
        n_double = needed * overlap // 2
        double_docs = shuffled[:n_double]
        single_docs = shuffled[n_double:]

        per_docs: dict[str, list[str]] = {a: [] for a in chosen}
        partners: dict[str, dict[str, list[str]]] = {a: {} for a in chosen}

        # Shared documents follow the pair cycle (a0,a1), (a1,a2), ...,
        # (a_{n-1},a0), giving every annotator exactly `overlap` shared slots
        # after overlap/2 full cycles (or one repeated pair for two annotators).
        if needed == 2:
            pair_cycle = [(chosen[0], chosen[1])]
        else:
            pair_cycle = [
                (chosen[i], chosen[(i + 1) % needed]) for i in range(needed)
            ]
        for index, doc in enumerate(double_docs):
            first, second = pair_cycle[index % len(pair_cycle)]
            per_docs[first].append(doc)
            per_docs[second].append(doc)
            partners[first][doc] = [second]
            partners[second][doc] = [first]

        solo_quota = per_annotator - overlap
        cursor = 0
        for annotator in chosen:
            for _ in range(solo_quota):
                doc = single_docs[cursor]
                cursor += 1
                per_docs[annotator].append(doc)
                partners[annotator][doc] = []
        if cursor != len(single_docs):
            raise AssignmentError(
                f"recipe {recipe!r}: {len(single_docs) - cursor} documents left uncovered"
            )

        for annotator in chosen:
            assignments.append(
                Assignment(
                    annotator_id=annotator,
                    recipe=recipe,
                    document_ids=tuple(per_docs[annotator]),
                    overlap_partners={
                        doc: tuple(p) for doc, p in partners[annotator].items()
                    },
                )
            )
    return assignments
