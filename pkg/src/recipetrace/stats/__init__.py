from .accuracy import AccuracyReport, PairAccuracy, RecipeRatio, human_macro_accuracy, model_accuracy
from .agreement import AgreementReport, PairKappa, cohens_kappa, doubly_annotated_items, macro_kappa
from .saturation import IncompleteCoverageError, SaturationCurve, saturation_curve
from .summaries import (
    CreativityItem,
    CreativityReport,
    NeverFoundItem,
    SelectionRow,
    SelectionSummary,
    creativity_report,
    never_found_items,
    selection_summary,
)

# Default found-label predicates per item kind.  The strict predicate counts
# only the perfect-match label; the broad predicate also counts the
# not-exact-wording family, which is what makes near-full coverage at five
# combined documents plausible.
from ..core import IngredientLabel, IngredientListLabel, ItemKind, TaskLabel, ToolLabel

STRICT_FOUND: dict[ItemKind, set] = {
    ItemKind.INGREDIENT: {IngredientLabel.FOUND},
    ItemKind.TASK_NAME: {TaskLabel.TASK_FOUND},
    ItemKind.TOOL: {ToolLabel.FOUND},
    ItemKind.INGREDIENT_LIST: {IngredientListLabel.INGREDIENTS_MATCH},
}

BROAD_FOUND: dict[ItemKind, set] = {
    ItemKind.INGREDIENT: {IngredientLabel.FOUND, IngredientLabel.FOUND_NOT_PERFECT},
    ItemKind.TASK_NAME: {TaskLabel.TASK_FOUND, TaskLabel.TASK_FOUND_NOT_EXACT_WORDING},
    ItemKind.TOOL: {ToolLabel.FOUND, ToolLabel.FOUND_NOT_EXACT, ToolLabel.TOOL_IMPLIED},
    ItemKind.INGREDIENT_LIST: {
        IngredientListLabel.INGREDIENTS_MATCH,
        IngredientListLabel.MOST_INGREDIENTS_MATCH,
    },
}

__all__ = [
    "BROAD_FOUND",
    "STRICT_FOUND",
    "AccuracyReport",
    "AgreementReport",
    "CreativityItem",
    "CreativityReport",
    "IncompleteCoverageError",
    "NeverFoundItem",
    "PairAccuracy",
    "PairKappa",
    "RecipeRatio",
    "SaturationCurve",
    "SelectionRow",
    "SelectionSummary",
    "cohens_kappa",
    "creativity_report",
    "doubly_annotated_items",
    "human_macro_accuracy",
    "macro_kappa",
    "model_accuracy",
    "never_found_items",
    "saturation_curve",
    "selection_summary",
]
