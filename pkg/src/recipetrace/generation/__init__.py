from .pipeline import (
    Candidate,
    GenerationFailure,
    GenerationOutcome,
    StageError,
    StudyConfig,
    generate_k,
    select_best_of_k,
)
from .prompts import (
    PLACEHOLDER,
    PromptTemplate,
    TemplateError,
    default_templates,
    load_templates,
    render_prompt,
)
from .screening import (
    DEFAULT_REPETITION_THRESHOLD,
    RepetitionResult,
    ScreenVerdict,
    detect_misunderstanding,
    detect_repetition,
    parse_wrongness_notes,
    screen_recipe,
)

__all__ = [
    "DEFAULT_REPETITION_THRESHOLD",
    "PLACEHOLDER",
    "Candidate",
    "GenerationFailure",
    "GenerationOutcome",
    "PromptTemplate",
    "RepetitionResult",
    "ScreenVerdict",
    "StageError",
    "StudyConfig",
    "TemplateError",
    "default_templates",
    "detect_misunderstanding",
    "detect_repetition",
    "generate_k",
    "load_templates",
    "parse_wrongness_notes",
    "render_prompt",
    "screen_recipe",
    "select_best_of_k",
]
