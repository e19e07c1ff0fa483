"""Prompt templates for recipe generation.

Five template types with increasing/decreasing detail plus a freestyle type.
Each type carries several phrasing variants so a K-way generation can use K
distinct prompts of the same type.  The default variants ship as
templates.json next to this module; studies may point at their own file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..core import RecipeName

PLACEHOLDER = "[recipe name]"


class TemplateError(ValueError):
    """A template file violates the placeholder contract."""


@dataclass(frozen=True, slots=True)
class PromptTemplate:
    type_id: int
    variants: tuple[str, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.type_id <= 5:
            raise TemplateError(f"template type {self.type_id} outside 1..5")
        if not self.variants:
            raise TemplateError(f"template type {self.type_id} has no variants")
        for variant in self.variants:
            if variant.count(PLACEHOLDER) != 1:
                raise TemplateError(
                    f"template type {self.type_id} variant {variant!r} must "
                    f"contain {PLACEHOLDER!r} exactly once"
                )


def _parse_templates(data: dict) -> dict[int, PromptTemplate]:
    templates = {}
    for key, variants in data.items():
        type_id = int(key)
        templates[type_id] = PromptTemplate(type_id=type_id, variants=tuple(variants))
    return templates


def default_templates() -> dict[int, PromptTemplate]:
    data = json.loads(
        resources.files(__package__).joinpath("templates.json").read_text("utf-8")
    )
    return _parse_templates(data)


def load_templates(path: str | Path) -> dict[int, PromptTemplate]:
    """Load a template file: JSON mapping of type id to variant list."""
    return _parse_templates(json.loads(Path(path).read_text(encoding="utf-8")))


def render_prompt(template: PromptTemplate, name: RecipeName, variant_index: int) -> str:
    """Substitute the recipe name into one variant, verbatim and nothing else."""
    if not 0 <= variant_index < len(template.variants):
        raise IndexError(
            f"variant index {variant_index} outside 0..{len(template.variants) - 1}"
        )
    return template.variants[variant_index].replace(PLACEHOLDER, name.text)
