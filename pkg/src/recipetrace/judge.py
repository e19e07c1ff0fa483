"""Automated annotation via multiple-choice continuation scoring.

For each item and document, N prompts are built that share one byte-identical
prefix (the annotated item, the document's extracted list, and the question)
and differ only in the final choice text.  The backend scores each choice
continuation and the argmax wins, ties resolved by taxonomy choice order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from .core import (
    AnnotationRecord,
    parse_label,
    GeneratedRecipe,
    IngredientLabel,
    IngredientListLabel,
    ItemKind,
    Label,
    TaskLabel,
    TaskScheme,
    ToolLabel,
    merge_task_label,
    record_from_dict,
    utc_now,
)
from .docextract import ExtractedDocument
from .gateway import GatewayError, LlmGateway, ScoreRequest


@dataclass(frozen=True, slots=True)
class Taxonomy:
    item_kind: ItemKind
    choices: tuple[tuple[Label, str], ...]  # (label, choice text), ordered

    def __post_init__(self) -> None:
        if len(self.choices) < 2:
            raise ValueError("a taxonomy needs at least 2 choices")
        texts = [text for _, text in self.choices]
        if len(set(texts)) != len(texts):
            raise ValueError("choice texts must be pairwise distinct")
        labels = [label for label, _ in self.choices]
        if len(set(labels)) != len(labels):
            raise ValueError("choice labels must be distinct")

    def labels(self) -> tuple[Label, ...]:
        return tuple(label for label, _ in self.choices)


def _verbatim(labels: Iterable[Label]) -> tuple[tuple[Label, str], ...]:
    return tuple((label, label.value) for label in labels)


# The judge's ingredient taxonomy is three-class: the Implied option is
# folded into Not found by omitting it from the choices entirely.
INGREDIENT_TAXONOMY_3 = Taxonomy(
    ItemKind.INGREDIENT,
    _verbatim(
        [
            IngredientLabel.FOUND,
            IngredientLabel.FOUND_NOT_PERFECT,
            IngredientLabel.NOT_FOUND,
        ]
    ),
)

TASK_TAXONOMY_4 = Taxonomy(
    ItemKind.TASK_NAME,
    _verbatim(
        [
            TaskLabel.TASK_FOUND,
            TaskLabel.TASK_FOUND_NOT_EXACT_WORDING,
            TaskLabel.TASK_FOUND_WRONG_CONTEXT,
            TaskLabel.TASK_NOT_FOUND,
        ]
    ),
)

# Two-class variant: representatives of the found / not-found families.
TASK_TAXONOMY_2 = Taxonomy(
    ItemKind.TASK_NAME,
    _verbatim([TaskLabel.TASK_FOUND, TaskLabel.TASK_NOT_FOUND]),
)

TOOL_TAXONOMY = Taxonomy(
    ItemKind.TOOL,
    _verbatim(
        [
            ToolLabel.FOUND,
            ToolLabel.FOUND_NOT_EXACT,
            ToolLabel.NOT_FOUND,
            ToolLabel.TOOL_IMPLIED,
        ]
    ),
)

INGREDIENT_LIST_TAXONOMY = Taxonomy(
    ItemKind.INGREDIENT_LIST,
    _verbatim(
        [
            IngredientListLabel.INGREDIENTS_MATCH,
            IngredientListLabel.MOST_INGREDIENTS_MATCH,
            IngredientListLabel.SOME_INGREDIENTS_MATCH,
            IngredientListLabel.NO_INGREDIENTS_MATCH,
            IngredientListLabel.INGREDIENTS_IMPLIED,
        ]
    ),
)


def default_taxonomies(task_classes: int = 4) -> dict[ItemKind, Taxonomy]:
    return {
        ItemKind.INGREDIENT: INGREDIENT_TAXONOMY_3,
        ItemKind.TASK_NAME: TASK_TAXONOMY_2 if task_classes == 2 else TASK_TAXONOMY_4,
        ItemKind.TOOL: TOOL_TAXONOMY,
        ItemKind.INGREDIENT_LIST: INGREDIENT_LIST_TAXONOMY,
    }


def _bullet_list(entries: Iterable[str]) -> str:
    return "\n".join(f"- {entry}" for entry in entries)


def _task_line(task) -> str:
    parts = [task.action]
    if task.tools:
        parts.append(f"(tools: {', '.join(t.name for t in task.tools)})")
    if task.ingredients:
        parts.append(f"(ingredients: {', '.join(task.ingredients)})")
    return " ".join(parts)


_QUESTIONS = {
    ItemKind.INGREDIENT: (
        "Generated ingredient: {item}",
        "ingredient list extracted from the document",
        "Is the generated ingredient present in the document's ingredient list, "
        "exactly, approximately, or not at all?",
    ),
    ItemKind.TASK_NAME: (
        "Generated cooking step: {item}",
        "steps extracted from the document",
        "Is this step performed in the document's instructions, with the same "
        "wording, different wording, a different context, or not at all?",
    ),
    ItemKind.TOOL: (
        "Tool used in the generated step: {item}",
        "steps and tools extracted from the document",
        "Is this tool used for the matching step in the document, exactly, "
        "approximately, implicitly, or not at all?",
    ),
    ItemKind.INGREDIENT_LIST: (
        "Ingredients involved in the generated step: {item}",
        "steps and their ingredients extracted from the document",
        "Do the ingredients of the matching step in the document correspond to "
        "this list entirely, mostly, partly, or not at all?",
    ),
}


def render_item(kind: ItemKind, item) -> str:
    if kind is ItemKind.INGREDIENT:
        return f'"{item}"'
    if kind is ItemKind.TASK_NAME:
        return f'"{item.action}"'
    if kind is ItemKind.TOOL:
        return f'"{item}"'
    return ", ".join(item.ingredients) if item.ingredients else "(none)"


def build_choice_prompts(
    item,
    item_kind: ItemKind,
    extracted: ExtractedDocument,
    taxonomy: Taxonomy,
) -> list[tuple[str, str]]:
    """N (prompt, continuation) pairs sharing one byte-identical prefix."""
    if not extracted.valid:
        raise ValueError(f"document {extracted.document_id} is not valid for judging")
    if taxonomy.item_kind is not item_kind:
        raise ValueError(
            f"taxonomy is for {taxonomy.item_kind.value}, item is {item_kind.value}"
        )

    item_line_tpl, list_name, question = _QUESTIONS[item_kind]
    if item_kind is ItemKind.INGREDIENT:
        listing = _bullet_list(extracted.ingredients)
    else:
        listing = _bullet_list(_task_line(t) for t in extracted.tasks)

    prefix = (
        "You are annotating whether an element of a model-generated recipe "
        "also appears in a web document.\n\n"
        f"The {list_name}:\n{listing}\n\n"
        f"{item_line_tpl.format(item=render_item(item_kind, item))}\n\n"
        f"{question}\nAnswer:"
    )
    return [(prefix, f" {text}") for _, text in taxonomy.choices]


@dataclass(frozen=True, slots=True)
class JudgeDecision:
    record: AnnotationRecord
    scores: tuple[tuple[Label, float], ...]  # taxonomy order
    margin: float | None
    extraction_model: str | None = None

    def __post_init__(self) -> None:
        if self.scores:
            best = max(self.scores, key=lambda pair: pair[1])[1]
            winners = [label for label, score in self.scores if score == best]
            if self.record.label not in winners:
                raise ValueError("decision label must be an argmax of its scores")

    def to_json_line(self) -> str:
        data = self.record.to_dict()
        data["scores"] = {label.value: score for label, score in self.scores}
        data["margin"] = self.margin
        data["extraction_model"] = self.extraction_model
        return json.dumps(data, ensure_ascii=False, separators=(",", ":"))


def decision_from_json_line(line: str) -> JudgeDecision:
    data = json.loads(line)
    record = record_from_dict(data)
    scores = tuple(
        (parse_label(record.item_kind, key), value)
        for key, value in data.get("scores", {}).items()
    )
    return JudgeDecision(
        record=record,
        scores=scores,
        margin=data.get("margin"),
        extraction_model=data.get("extraction_model"),
    )


def classify(
    item,
    item_kind: ItemKind,
    item_ordinal: int,
    recipe: str,
    extracted: ExtractedDocument,
    taxonomy: Taxonomy,
    gateway: LlmGateway,
    model_id: str,
) -> JudgeDecision:
    """Score every choice and pick the argmax; first choice wins exact ties."""
    pairs = build_choice_prompts(item, item_kind, extracted, taxonomy)
    scores: list[tuple[Label, float]] = []
    for (label, _), (prompt, continuation) in zip(taxonomy.choices, pairs):
        score = gateway.score_continuation(
            ScoreRequest(prompt=prompt, continuation=continuation, model_id=model_id)
        )
        scores.append((label, score))

    best_label, best_score = scores[0]
    for label, score in scores[1:]:
        if score > best_score:
            best_label, best_score = label, score
    sorted_scores = sorted((s for _, s in scores), reverse=True)
    margin = sorted_scores[0] - sorted_scores[1]

    record = AnnotationRecord(
        annotator=model_id,
        recipe=recipe,
        document_id=extracted.document_id,
        item_kind=item_kind,
        item_ordinal=item_ordinal,
        label=best_label,
        timestamp=utc_now(),
    )
    return JudgeDecision(
        record=record,
        scores=tuple(scores),
        margin=margin,
        extraction_model=extracted.extraction_model,
    )


def _not_filled_in(
    recipe: str,
    extracted: ExtractedDocument,
    kind: ItemKind,
    ordinal: int,
    model_id: str,
) -> JudgeDecision:
    label = (
        ToolLabel.NOT_FILLED_IN
        if kind is ItemKind.TOOL
        else IngredientListLabel.NOT_FILLED_IN
    )
    record = AnnotationRecord(
        annotator=model_id,
        recipe=recipe,
        document_id=extracted.document_id,
        item_kind=kind,
        item_ordinal=ordinal,
        label=label,
        timestamp=utc_now(),
    )
    return JudgeDecision(
        record=record, scores=(), margin=None, extraction_model=extracted.extraction_model
    )


@dataclass
class JudgeRunSummary:
    decisions: int = 0
    skipped_documents: list[tuple[str, str, str]] = None  # (recipe, doc, reason)
    failures: list[tuple[str, str, str, str]] = None  # (recipe, doc, item, error)

    def __post_init__(self):
        if self.skipped_documents is None:
            self.skipped_documents = []
        if self.failures is None:
            self.failures = []


def judge_study(
    recipes: list[GeneratedRecipe],
    documents: dict[str, list[ExtractedDocument]],
    taxonomies: dict[ItemKind, Taxonomy],
    model_ids: list[str],
    gateway: LlmGateway,
) -> tuple[list[JudgeDecision], JudgeRunSummary]:
    """One decision per (model, recipe, document, item, field).

    When a model judges a triple's task as absent, the triple's tool and
    ingredient-list fields become Not filled in without any scoring calls;
    the same applies to structurally empty tool/ingredient lists.  A failed
    scoring call records a failure and emits no decision, never a default
    label.
    """
    decisions: list[JudgeDecision] = []
    summary = JudgeRunSummary()
    not_found_family = {
        merge_task_label(TaskLabel.TASK_NOT_FOUND, TaskScheme.FOUR_CLASS),
        TaskLabel.TASK_NOT_FOUND,
    }

    for model_id in model_ids:
        for recipe in recipes:
            recipe_docs = documents.get(recipe.name.text, [])
            for doc in recipe_docs:
                if not doc.valid:
                    summary.skipped_documents.append(
                        (recipe.name.text, doc.document_id, doc.invalid_reason or "invalid")
                    )
                    continue
                for mention in recipe.ingredients:
                    try:
                        decisions.append(
                            classify(
                                mention.name,
                                ItemKind.INGREDIENT,
                                mention.ordinal,
                                recipe.name.text,
                                doc,
                                taxonomies[ItemKind.INGREDIENT],
                                gateway,
                                model_id,
                            )
                        )
                    except GatewayError as exc:
                        summary.failures.append(
                            (recipe.name.text, doc.document_id, f"ingredient#{mention.ordinal}", str(exc))
                        )
                for task in recipe.tasks:
                    try:
                        task_decision = classify(
                            task,
                            ItemKind.TASK_NAME,
                            task.ordinal,
                            recipe.name.text,
                            doc,
                            taxonomies[ItemKind.TASK_NAME],
                            gateway,
                            model_id,
                        )
                    except GatewayError as exc:
                        summary.failures.append(
                            (recipe.name.text, doc.document_id, f"task#{task.ordinal}", str(exc))
                        )
                        continue
                    decisions.append(task_decision)
                    task_absent = task_decision.record.label in not_found_family

                    if task_absent or not task.tools:
                        decisions.append(
                            _not_filled_in(
                                recipe.name.text, doc, ItemKind.TOOL, task.ordinal, model_id
                            )
                        )
                    else:
                        # The tool field covers the triple's whole tool list,
                        # mirroring the single per-triple drop-down.
                        try:
                            decisions.append(
                                classify(
                                    ", ".join(t.name for t in task.tools),
                                    ItemKind.TOOL,
                                    task.ordinal,
                                    recipe.name.text,
                                    doc,
                                    taxonomies[ItemKind.TOOL],
                                    gateway,
                                    model_id,
                                )
                            )
                        except GatewayError as exc:
                            summary.failures.append(
                                (recipe.name.text, doc.document_id, f"tool#{task.ordinal}", str(exc))
                            )

                    if task_absent or not task.ingredients:
                        decisions.append(
                            _not_filled_in(
                                recipe.name.text,
                                doc,
                                ItemKind.INGREDIENT_LIST,
                                task.ordinal,
                                model_id,
                            )
                        )
                    else:
                        try:
                            decisions.append(
                                classify(
                                    task,
                                    ItemKind.INGREDIENT_LIST,
                                    task.ordinal,
                                    recipe.name.text,
                                    doc,
                                    taxonomies[ItemKind.INGREDIENT_LIST],
                                    gateway,
                                    model_id,
                                )
                            )
                        except GatewayError as exc:
                            summary.failures.append(
                                (
                                    recipe.name.text,
                                    doc.document_id,
                                    f"ingredient-list#{task.ordinal}",
                                    str(exc),
                                )
                            )
    summary.decisions = len(decisions)
    return decisions, summary
