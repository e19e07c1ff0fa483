"""Structured extraction of a recipe into the shared XML schema.

Schema (element names are a wire contract, reused for document extraction):
root ``recipe``; child ``ingredients`` with repeated ``ingredient`` (text
content is the name); child ``tasks`` with repeated ``task``, each holding
one ``name``, optional repeated ``tool`` and optional repeated
``ingredient``.  Recipe metadata rides on root attributes, and a carried
``source`` child preserves the original generation text.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .core import (
    GeneratedRecipe,
    IngredientMention,
    RecipeName,
    TaskTriple,
    ToolUse,
)
from .gateway import GenerationRequest, LlmGateway

REPAIR_ATTEMPTS = 2


class RecipeXmlError(ValueError):
    """The XML violates the recipe schema; the message names the element."""


@dataclass(frozen=True, slots=True)
class RecipeXml:
    """A schema-validated XML document; construction enforces well-formedness."""

    raw_xml: str

    def __post_init__(self) -> None:
        validate_recipe_xml(self.raw_xml)

    def root(self) -> ET.Element:
        return ET.fromstring(self.raw_xml)


def validate_recipe_xml(raw_xml: str) -> None:
    try:
        root = ET.fromstring(raw_xml)
    except ET.ParseError as exc:
        raise RecipeXmlError(f"not well-formed XML: {exc}") from None
    if root.tag != "recipe":
        raise RecipeXmlError(f"root element must be 'recipe', got '{root.tag}'")
    ingredients = root.findall("ingredients")
    if len(ingredients) != 1:
        raise RecipeXmlError(
            f"expected exactly one 'ingredients' block, found {len(ingredients)}"
        )
    tasks = root.findall("tasks")
    if len(tasks) != 1:
        raise RecipeXmlError(f"expected exactly one 'tasks' block, found {len(tasks)}")
    for index, task in enumerate(tasks[0].findall("task")):
        names = task.findall("name")
        if len(names) != 1 or not (names[0].text or "").strip():
            raise RecipeXmlError(f"task {index} must have exactly one non-empty 'name'")


def parse_recipe_xml(
    xml: RecipeXml,
    raw_text: str | None = None,
    name: str | None = None,
    generator_id: str | None = None,
    prompt_type: int | None = None,
    variant: int | None = None,
) -> GeneratedRecipe:
    """Build a recipe from schema XML; explicit arguments override attributes.

    Ordinals follow document order.  Absent tool/ingredient elements become
    empty lists; a summarizing word like "mixture" stays a single entry.
    Tools are read with their propagation marker, so parsing a serialized
    recipe restores it exactly; extraction XML simply never carries the
    marker.
    """
    root = xml.root()
    name = name if name is not None else root.get("name")
    if not name:
        raise RecipeXmlError("recipe name missing: no attribute and no override")
    generator_id = generator_id if generator_id is not None else root.get("generator", "")
    prompt_type = (
        prompt_type if prompt_type is not None else int(root.get("prompt_type", "1"))
    )
    variant = variant if variant is not None else int(root.get("variant", "1"))
    if raw_text is None:
        source = root.find("source")
        raw_text = source.text or "" if source is not None else ""

    ingredients = []
    for ordinal, element in enumerate(root.find("ingredients").findall("ingredient")):
        text = (element.text or "").strip()
        if not text:
            raise RecipeXmlError(f"ingredient {ordinal} is empty")
        ingredients.append(IngredientMention(name=text, ordinal=ordinal))

    tasks = []
    for ordinal, element in enumerate(root.find("tasks").findall("task")):
        action = element.find("name").text.strip()
        tools = tuple(
            ToolUse(
                name=(tool.text or "").strip(),
                propagated=tool.get("propagated") == "true",
            )
            for tool in element.findall("tool")
            if (tool.text or "").strip()
        )
        task_ingredients = tuple(
            (ing.text or "").strip()
            for ing in element.findall("ingredient")
            if (ing.text or "").strip()
        )
        tasks.append(
            TaskTriple(action=action, tools=tools, ingredients=task_ingredients, ordinal=ordinal)
        )

    return GeneratedRecipe(
        name=RecipeName(name),
        raw_text=raw_text,
        ingredients=tuple(ingredients),
        tasks=tuple(tasks),
        generator_id=generator_id,
        prompt_type=prompt_type,
        variant=variant,
    )


def serialize_recipe(recipe: GeneratedRecipe) -> RecipeXml:
    """Emit schema XML such that parsing it restores the recipe exactly."""
    lines = [
        '<recipe name="{}" generator="{}" prompt_type="{}" variant="{}">'.format(
            escape(recipe.name.text, {'"': "&quot;"}),
            escape(recipe.generator_id, {'"': "&quot;"}),
            recipe.prompt_type,
            recipe.variant,
        )
    ]
    lines.append("  <ingredients>")
    for mention in sorted(recipe.ingredients, key=lambda m: m.ordinal):
        lines.append(f"    <ingredient>{escape(mention.name)}</ingredient>")
    lines.append("  </ingredients>")
    lines.append("  <tasks>")
    for task in sorted(recipe.tasks, key=lambda t: t.ordinal):
        lines.append("    <task>")
        lines.append(f"      <name>{escape(task.action)}</name>")
        for tool in task.tools:
            marker = ' propagated="true"' if tool.propagated else ""
            lines.append(f"      <tool{marker}>{escape(tool.name)}</tool>")
        for ingredient in task.ingredients:
            lines.append(f"      <ingredient>{escape(ingredient)}</ingredient>")
        lines.append("    </task>")
    lines.append("  </tasks>")
    if recipe.raw_text:
        lines.append(f"  <source>{escape(recipe.raw_text)}</source>")
    lines.append("</recipe>")
    return RecipeXml("\n".join(lines))


EXTRACTION_PROMPT = """Convert the recipe below into XML. Use exactly this structure:
<recipe>
  <ingredients>
    <ingredient>flour</ingredient>
  </ingredients>
  <tasks>
    <task>
      <name>whisk</name>
      <tool>bowl</tool>
      <ingredient>flour</ingredient>
      <ingredient>salt</ingredient>
    </task>
  </tasks>
</recipe>

Rules: one <ingredient> per entry of the ingredient list. One <task> per
action, in order. The <name> is the action verb in infinitive form, keeping
its preposition ("whisk", "pour in"). Omit <tool> when no tool is used. When
a step works on several combined ingredients, reuse the recipe's own
summarizing word (for example "mixture") as a single <ingredient>. Reply
with XML only.

Recipe:
{recipe}

XML:"""

REPAIR_PROMPT = """{original}

Your previous reply could not be parsed: {error}
Reply again with corrected XML only."""


class ExtractionError(RuntimeError):
    """The model failed to produce schema-valid XML within the repair budget."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


def extract_structured(
    recipe_text: str,
    gateway: LlmGateway,
    model_id: str,
    repair_attempts: int = REPAIR_ATTEMPTS,
    max_tokens: int = 2048,
) -> tuple[RecipeXml, int]:
    """LLM extraction with a repair loop; returns the XML and the repair count.

    Each repair re-prompts with the parser error appended.  After
    repair_attempts failed repairs the extraction fails loudly for this
    recipe rather than skewing the study silently.
    """
    if not recipe_text.strip():
        raise ValueError("recipe text must be non-empty")
    base_prompt = EXTRACTION_PROMPT.format(recipe=recipe_text)
    prompt = base_prompt
    last_error = ""
    for attempt in range(repair_attempts + 1):
        reply = gateway.complete(
            GenerationRequest(
                prompt=prompt, max_tokens=max_tokens, temperature=0.0, model_id=model_id
            )
        )
        try:
            return RecipeXml(strip_to_xml(reply.text)), attempt
        except RecipeXmlError as exc:
            last_error = str(exc)
            prompt = REPAIR_PROMPT.format(original=base_prompt, error=last_error)
    raise ExtractionError(
        f"no schema-valid XML after {repair_attempts + 1} attempts: {last_error}",
        attempts=repair_attempts + 1,
    )


def strip_to_xml(reply: str) -> str:
    """Cut any chatter around the first XML document in a model reply."""
    text = reply.strip()
    if text.startswith("```"):
        text = text.strip("`")
        if text.startswith("xml"):
            text = text[3:]
        text = text.strip()
    start = text.find("<recipe")
    end = text.rfind("</recipe>")
    if start != -1 and end != -1:
        return text[start : end + len("</recipe>")]
    return text


def _tool_category(tool_name: str) -> str:
    """Coarse tool family used to decide when a later tool replaces an earlier one."""
    words = [w for w in tool_name.lower().split() if w.isalpha()]
    return words[-1] if words else tool_name.lower()


def propagate_tools(tasks: tuple[TaskTriple, ...]) -> tuple[TaskTriple, ...]:
    """Carry an introduced tool into later tasks that share its ingredients.

    The chain follows the ingredient overlap with the introducing task and
    ends when a later task introduces another tool of the same category
    (that task keeps its replacement and does not inherit).  Explicit tool
    lists are never removed, and already-propagated copies are never treated
    as introductions, so the operation is idempotent.
    """
    ordered = sorted(tasks, key=lambda t: t.ordinal)
    extra: dict[int, list[ToolUse]] = {t.ordinal: [] for t in ordered}

    for i, origin in enumerate(ordered):
        origin_ingredients = {s.lower() for s in origin.ingredients}
        for tool in origin.tools:
            if tool.propagated:
                continue
            category = _tool_category(tool.name)
            for later in ordered[i + 1 :]:
                introduced = [t for t in later.tools if not t.propagated]
                if any(
                    _tool_category(t.name) == category and t.name != tool.name
                    for t in introduced
                ):
                    break
                later_ingredients = {s.lower() for s in later.ingredients}
                if origin_ingredients & later_ingredients:
                    present = {t.name for t in later.tools} | {
                        t.name for t in extra[later.ordinal]
                    }
                    if tool.name not in present:
                        extra[later.ordinal].append(ToolUse(tool.name, propagated=True))

    result = []
    for task in ordered:
        if extra[task.ordinal]:
            result.append(
                TaskTriple(
                    action=task.action,
                    tools=task.tools + tuple(extra[task.ordinal]),
                    ingredients=task.ingredients,
                    ordinal=task.ordinal,
                )
            )
        else:
            result.append(task)
    return tuple(result)
