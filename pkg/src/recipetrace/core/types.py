"""Immutable domain types shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True, slots=True)
class RecipeName:
    """Name of a dish, unique within a study."""

    text: str
    origin_tag: str | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("recipe name must be non-empty")

    @property
    def slug(self) -> str:
        return slugify(self.text)


def slugify(text: str) -> str:
    out = []
    prev_dash = True
    for ch in text.lower():
        if ch.isalnum():
            out.append(ch)
            prev_dash = False
        elif not prev_dash:
            out.append("-")
            prev_dash = True
    return "".join(out).strip("-") or "item"


@dataclass(frozen=True, slots=True)
class IngredientMention:
    """One entry of a generated recipe's ingredient list."""

    name: str
    ordinal: int


@dataclass(frozen=True, slots=True)
class ToolUse:
    """A tool attached to a task, possibly carried over from an earlier task."""

    name: str
    propagated: bool = False


@dataclass(frozen=True, slots=True)
class TaskTriple:
    """A single recipe action: its name, the tools and the ingredients involved."""

    action: str
    tools: tuple[ToolUse, ...]
    ingredients: tuple[str, ...]
    ordinal: int

    def tool_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tools)


@dataclass(frozen=True, slots=True)
class GeneratedRecipe:
    """A parsed model-generated recipe tied to its generation parameters."""

    name: RecipeName
    raw_text: str
    ingredients: tuple[IngredientMention, ...]
    tasks: tuple[TaskTriple, ...]
    generator_id: str
    prompt_type: int
    variant: int

    def with_tasks(self, tasks: tuple[TaskTriple, ...]) -> "GeneratedRecipe":
        return replace(self, tasks=tasks)


def _check_ordinals(ordinals: list[int], what: str, report: list[str]) -> None:
    seen: set[int] = set()
    duplicated = False
    for o in ordinals:
        if o in seen:
            report.append(f"duplicate {what} ordinal {o}")
            duplicated = True
        seen.add(o)
    if duplicated:
        # A duplicate already implies a gap; one violation names the cause.
        return
    expected = set(range(len(ordinals)))
    missing = expected - seen
    extra = seen - expected
    if missing or extra:
        report.append(
            f"{what} ordinals not contiguous: missing {sorted(missing)}, "
            f"unexpected {sorted(extra)}"
        )


def validate_recipe(recipe: GeneratedRecipe, require_items: bool = True) -> list[str]:
    """Check every structural invariant; violations are data, not failures.

    require_items enforces non-empty ingredient and task lists, which holds
    for recipes that passed screening but not necessarily for raw parses.
    """
    report: list[str] = []
    if not recipe.name.text.strip():
        report.append("recipe name is empty")
    if not 1 <= recipe.prompt_type <= 5:
        report.append(f"prompt_type {recipe.prompt_type} outside 1..5")
    if recipe.variant < 1:
        report.append(f"variant {recipe.variant} must be >= 1")
    if require_items and not recipe.ingredients:
        report.append("ingredient list is empty")
    if require_items and not recipe.tasks:
        report.append("task list is empty")

    for ing in recipe.ingredients:
        if not ing.name.strip():
            report.append(f"ingredient at ordinal {ing.ordinal} has empty name")
    _check_ordinals([i.ordinal for i in recipe.ingredients], "ingredient", report)

    for task in recipe.tasks:
        if not task.action.strip():
            report.append(f"task at ordinal {task.ordinal} has empty action")
    _check_ordinals([t.ordinal for t in recipe.tasks], "task", report)

    # A propagated tool must occur verbatim in an earlier triple.
    by_ordinal = sorted(recipe.tasks, key=lambda t: t.ordinal)
    seen_tools: set[str] = set()
    for task in by_ordinal:
        for tool in task.tools:
            if tool.propagated and tool.name not in seen_tools:
                report.append(
                    f"task ordinal {task.ordinal} marks tool {tool.name!r} as "
                    "propagated but no earlier task mentions it"
                )
        seen_tools.update(t.name for t in task.tools)
    return report
