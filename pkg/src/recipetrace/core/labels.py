"""Label taxonomies for annotation decisions.

Enum values are the exact display strings used by the annotation sheets,
the judge choice texts and the canonical record serialization.  The
enumerations are closed: parsing an unknown string is a hard error, never
a silent default.
"""

from __future__ import annotations

import enum


class ItemKind(str, enum.Enum):
    INGREDIENT = "Ingredient"
    TASK_NAME = "TaskName"
    TOOL = "Tool"
    INGREDIENT_LIST = "IngredientList"


class IngredientLabel(str, enum.Enum):
    FOUND = "Found"
    FOUND_NOT_PERFECT = "Found (not perfect)"
    NOT_FOUND = "Not found"
    IMPLIED = "Implied"


class TaskLabel(str, enum.Enum):
    TASK_FOUND = "Task Found"
    TASK_FOUND_NOT_EXACT_WORDING = "Task Found (Not Exact Wording)"
    TASK_FOUND_WRONG_CONTEXT = "Task Found (Wrong Context)"
    TASK_NOT_FOUND = "Task Not Found"


class ToolLabel(str, enum.Enum):
    FOUND = "Found"
    FOUND_NOT_EXACT = "Found (Not Exact)"
    NOT_FOUND = "Not Found"
    TOOL_IMPLIED = "Tool Implied"
    NO_TOOL_INVOLVED = "No Tool Involved"
    NOT_FILLED_IN = "Not filled in"


class IngredientListLabel(str, enum.Enum):
    INGREDIENTS_MATCH = "Ingredients Match"
    MOST_INGREDIENTS_MATCH = "Most Ingredients Match"
    SOME_INGREDIENTS_MATCH = "Some Ingredients Match"
    NO_INGREDIENTS_MATCH = "No Ingredients Match"
    INGREDIENTS_IMPLIED = "Ingredients Implied"
    NO_INGREDIENTS_USED = "No Ingredients Used"
    NOT_FILLED_IN = "Not filled in"


Label = IngredientLabel | TaskLabel | ToolLabel | IngredientListLabel

LABEL_ENUMS: dict[ItemKind, type] = {
    ItemKind.INGREDIENT: IngredientLabel,
    ItemKind.TASK_NAME: TaskLabel,
    ItemKind.TOOL: ToolLabel,
    ItemKind.INGREDIENT_LIST: IngredientListLabel,
}

# Deterministic field order used by queues, exports and kappa alignment:
# ingredients first, then the per-task triple fields.
KIND_ORDER: dict[ItemKind, int] = {
    ItemKind.INGREDIENT: 0,
    ItemKind.TASK_NAME: 1,
    ItemKind.TOOL: 2,
    ItemKind.INGREDIENT_LIST: 3,
}


class LabelParseError(ValueError):
    """An annotation label string is outside its closed enumeration."""


def parse_item_kind(value: str) -> ItemKind:
    try:
        return ItemKind(value)
    except ValueError:
        raise LabelParseError(f"unknown item kind: {value!r}") from None


def parse_label(kind: ItemKind, value: str) -> Label:
    """Parse a label display string for the given item kind."""
    try:
        return LABEL_ENUMS[kind](value)
    except ValueError:
        raise LabelParseError(
            f"unknown label {value!r} for item kind {kind.value}"
        ) from None


class IngredientScheme(enum.Enum):
    FOUR_CLASS = 4
    THREE_CLASS = 3


class TaskScheme(enum.Enum):
    FOUR_CLASS = 4
    TWO_CLASS = 2


def merge_label(label: IngredientLabel, scheme: IngredientScheme) -> IngredientLabel:
    """Collapse the ingredient taxonomy: three-class folds Implied into Not found."""
    if scheme is IngredientScheme.THREE_CLASS and label is IngredientLabel.IMPLIED:
        return IngredientLabel.NOT_FOUND
    return label


_TASK_TWO_CLASS = {
    TaskLabel.TASK_FOUND: TaskLabel.TASK_FOUND,
    TaskLabel.TASK_FOUND_NOT_EXACT_WORDING: TaskLabel.TASK_FOUND,
    TaskLabel.TASK_FOUND_WRONG_CONTEXT: TaskLabel.TASK_NOT_FOUND,
    TaskLabel.TASK_NOT_FOUND: TaskLabel.TASK_NOT_FOUND,
}


def merge_task_label(label: TaskLabel, scheme: TaskScheme) -> TaskLabel:
    """Collapse the task taxonomy: two-class keeps only the found/not-found split.

    Found-family representative is Task Found; the wrong-context class counts
    as not found, mirroring how partial context matches are treated as
    non-matches in the ingredient analysis.
    """
    if scheme is TaskScheme.TWO_CLASS:
        return _TASK_TWO_CLASS[label]
    return label


def merge_for_kind(
    kind: ItemKind,
    label: Label,
    ingredient_scheme: IngredientScheme = IngredientScheme.THREE_CLASS,
    task_scheme: TaskScheme = TaskScheme.FOUR_CLASS,
) -> Label:
    """Apply the configured class merge for whichever kind the label belongs to."""
    if kind is ItemKind.INGREDIENT:
        return merge_label(label, ingredient_scheme)
    if kind is ItemKind.TASK_NAME:
        return merge_task_label(label, task_scheme)
    return label
