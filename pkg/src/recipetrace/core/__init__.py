from .labels import (
    KIND_ORDER,
    IngredientLabel,
    IngredientListLabel,
    IngredientScheme,
    ItemKind,
    Label,
    LabelParseError,
    TaskLabel,
    TaskScheme,
    ToolLabel,
    merge_for_kind,
    merge_label,
    merge_task_label,
    parse_item_kind,
    parse_label,
)
from .records import (
    AnnotationRecord,
    RecordFormatError,
    read_records,
    record_from_dict,
    record_from_json_line,
    record_sort_key,
    utc_now,
)
from .types import (
    GeneratedRecipe,
    IngredientMention,
    RecipeName,
    TaskTriple,
    ToolUse,
    slugify,
    validate_recipe,
)

__all__ = [
    "KIND_ORDER",
    "AnnotationRecord",
    "GeneratedRecipe",
    "IngredientLabel",
    "IngredientListLabel",
    "IngredientMention",
    "IngredientScheme",
    "ItemKind",
    "Label",
    "LabelParseError",
    "RecipeName",
    "RecordFormatError",
    "TaskLabel",
    "TaskScheme",
    "TaskTriple",
    "ToolLabel",
    "ToolUse",
    "merge_for_kind",
    "merge_label",
    "merge_task_label",
    "parse_item_kind",
    "parse_label",
    "read_records",
    "record_from_dict",
    "record_from_json_line",
    "record_sort_key",
    "slugify",
    "utc_now",
    "validate_recipe",
]
