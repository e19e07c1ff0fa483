"""Nonsense screening: repetition loops, prompt misunderstanding, wrong steps.

The repetition and misunderstanding checks are deterministic text rules; the
objective-wrongness check asks an LLM classifier to list flawed steps or
ingredients with reasoning.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..gateway import GenerationRequest, LlmGateway

DEFAULT_REPETITION_THRESHOLD = 6

_BULLET = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")
_NUMBERY = re.compile(r"\d")
_WORD = re.compile(r"^[a-zA-Z][a-zA-Z'-]*$")

# Openers typical of a reply that continues the prompt instead of answering
# it, or that reads like correspondence.
_MISUNDERSTANDING_OPENERS = (
    "i don't know",
    "i do not know",
    "i'm not sure",
    "i am not sure",
    "i would like",
    "i have never",
    "could you",
    "can you",
    "please send",
    "please provide",
    "dear ",
    "hi ",
    "hello ",
    "to whom it may concern",
)
_LETTER_MARKERS = ("sincerely,", "best regards", "kind regards", "yours truly")


def _line_template(line: str) -> str | None:
    """Reduce a line to its repeated scaffold.

    Quantity tokens are masked and the trailing noun phrase (the final run of
    plain words) is stripped, so lines differing only in amounts and the
    ending item collapse to one template.  A stripped scaffold shorter than
    three tokens is too generic to treat as a loop signature (it would match
    ordinary ingredient lists), so such lines fall back to the full masked
    line and only collapse when literally identical.
    """
    stripped = _BULLET.sub("", line).strip().lower()
    if not stripped:
        return None
    stripped = stripped.rstrip(".!?:;,")
    tokens = ["#" if _NUMBERY.search(tok) else tok for tok in stripped.split()]
    if not tokens:
        return None
    keep = len(tokens)
    while keep > 2 and _WORD.match(tokens[keep - 1]):
        keep -= 1
    if keep < 3:
        return " ".join(tokens)
    return " ".join(tokens[:keep])


@dataclass(frozen=True, slots=True)
class RepetitionResult:
    flagged: bool
    span: tuple[int, int] | None  # inclusive 0-based line indices
    line_count: int


def detect_repetition(
    text: str, threshold: int = DEFAULT_REPETITION_THRESHOLD
) -> RepetitionResult:
    """Flag runs of at least `threshold` consecutive lines sharing a template."""
    lines = text.splitlines()
    best: tuple[int, int] | None = None
    run_start = None
    run_template = None

    def close_run(end_index: int) -> None:
        nonlocal best
        if run_start is None:
            return
        length = end_index - run_start + 1
        if length >= threshold:
            if best is None or length > (best[1] - best[0] + 1):
                best = (run_start, end_index)

    for idx, line in enumerate(lines):
        template = _line_template(line)
        if template is not None and template == run_template:
            continue
        close_run(idx - 1)
        run_start = idx if template is not None else None
        run_template = template
    close_run(len(lines) - 1)

    if best is None:
        return RepetitionResult(flagged=False, span=None, line_count=0)
    return RepetitionResult(flagged=True, span=best, line_count=best[1] - best[0] + 1)


def detect_misunderstanding(text: str) -> bool:
    """True when the reply treats the prompt as a prefix or reads as a letter."""
    head = text.strip().lower()[:200]
    if any(head.startswith(opener) for opener in _MISUNDERSTANDING_OPENERS):
        return True
    lowered = text.lower()
    return any(marker in lowered for marker in _LETTER_MARKERS)


@dataclass(frozen=True, slots=True)
class ScreenVerdict:
    candidate_id: str
    repetition_flag: bool
    repetition_span: tuple[int, int] | None
    misunderstanding_flag: bool
    wrongness_notes: tuple[str, ...]
    overall: str  # "Pass" | "Reject"

    def __post_init__(self) -> None:
        if self.repetition_flag and self.overall != "Reject":
            raise ValueError("a repetition-flagged candidate must be rejected")


CLASSIFIER_PROMPT = """You are reviewing a generated cooking recipe for objective mistakes.
List every objectively wrong step or ingredient, one per line, in the form
"step: <quote> - <why it is wrong>" or "ingredient: <name> - <why it is wrong>".
If there are none, reply with the single word NONE.

Recipe:
{recipe}

Flaws:"""


def parse_wrongness_notes(reply: str) -> tuple[str, ...]:
    notes = []
    for line in reply.splitlines():
        line = line.strip()
        if not line or line.upper() == "NONE":
            continue
        notes.append(line)
    return tuple(notes)


def screen_recipe(
    candidate_id: str,
    text: str,
    gateway: LlmGateway,
    model_id: str,
    repetition_threshold: int = DEFAULT_REPETITION_THRESHOLD,
    classifier_max_tokens: int = 512,
) -> ScreenVerdict:
    """Combine the deterministic checks with the LLM wrongness classifier.

    Candidates are rejected on repetition or misunderstanding; wrongness
    notes do not reject on their own, they rank candidates in the best-of-K
    selection.
    """
    if not text.strip():
        raise ValueError("candidate text must be non-empty")
    repetition = detect_repetition(text, threshold=repetition_threshold)
    misunderstanding = detect_misunderstanding(text)

    notes: tuple[str, ...] = ()
    if not repetition.flagged and not misunderstanding:
        reply = gateway.complete(
            GenerationRequest(
                prompt=CLASSIFIER_PROMPT.format(recipe=text),
                max_tokens=classifier_max_tokens,
                temperature=0.0,
                model_id=model_id,
            )
        )
        notes = parse_wrongness_notes(reply.text)

    overall = "Reject" if (repetition.flagged or misunderstanding) else "Pass"
    return ScreenVerdict(
        candidate_id=candidate_id,
        repetition_flag=repetition.flagged,
        repetition_span=repetition.span,
        misunderstanding_flag=misunderstanding,
        wrongness_notes=notes,
        overall=overall,
    )
