"""K-way recipe generation and best-of-K selection."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..core import RecipeName
from ..gateway import (
    FinishReason,
    GatewayError,
    GenerationRequest,
    LlmGateway,
)
from .prompts import PromptTemplate, render_prompt
from .screening import ScreenVerdict


@dataclass(frozen=True)
class StudyConfig:
    """Names under study plus the generation parameters."""

    recipe_names: tuple[str, ...]
    selected: tuple[str, ...]
    k: int = 5
    prompt_type: int = 2
    seed: int = 0
    # Sampling temperature for the K generations; the original study did not
    # document its setting, so this default is a choice, not a reproduction.
    temperature: float = 0.7
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("K must be >= 1")
        if not 1 <= self.prompt_type <= 5:
            raise ValueError("prompt_type must be in 1..5")
        pool = set(self.recipe_names)
        missing = [name for name in self.selected if name not in pool]
        if missing:
            raise ValueError(f"selected names missing from the pool: {missing}")


@dataclass(frozen=True, slots=True)
class Candidate:
    recipe: str
    variant: int  # 1-based
    prompt: str
    text: str
    finish_reason: FinishReason

    @property
    def candidate_id(self) -> str:
        return f"{self.recipe}#v{self.variant}"


@dataclass(frozen=True, slots=True)
class GenerationFailure:
    recipe: str
    variant: int
    error: str


@dataclass
class GenerationOutcome:
    candidates: list[Candidate] = field(default_factory=list)
    failures: list[GenerationFailure] = field(default_factory=list)


class StageError(RuntimeError):
    pass


def generate_k(
    name: RecipeName,
    cfg: StudyConfig,
    template: PromptTemplate,
    gateway: LlmGateway,
    model_id: str,
) -> GenerationOutcome:
    """Produce K candidates using K distinct prompt variants of one type.

    Failed calls are recorded per variant, never silently dropped; only a
    recipe whose every call failed aborts (that recipe alone).
    """
    outcome = GenerationOutcome()

    def run_one(variant: int) -> Candidate:
        prompt = render_prompt(template, name, (variant - 1) % len(template.variants))
        completion = gateway.complete(
            GenerationRequest(
                prompt=prompt,
                max_tokens=cfg.max_tokens,
                temperature=cfg.temperature,
                model_id=model_id,
                seed=cfg.seed + variant,
            )
        )
        return Candidate(
            recipe=name.text,
            variant=variant,
            prompt=prompt,
            text=completion.text,
            finish_reason=completion.finish_reason,
        )

    with ThreadPoolExecutor(max_workers=min(cfg.k, 8)) as pool:
        futures = {variant: pool.submit(run_one, variant) for variant in range(1, cfg.k + 1)}
        for variant in range(1, cfg.k + 1):
            try:
                outcome.candidates.append(futures[variant].result())
            except GatewayError as exc:
                outcome.failures.append(
                    GenerationFailure(recipe=name.text, variant=variant, error=str(exc))
                )

    if not outcome.candidates:
        raise StageError(
            f"all {cfg.k} generation calls failed for recipe {name.text!r}"
        )
    return outcome


PAIRWISE_PROMPT = """Two candidate recipes for "{recipe}" are shown below.
Considering correctness first and overall quality second, which candidate is
better? Answer with the single letter A or B.

Candidate A:
{a}

Candidate B:
{b}

Answer:"""


def _pairwise_preference(
    gateway: LlmGateway, model_id: str, recipe: str, a: Candidate, b: Candidate
) -> str | None:
    reply = gateway.complete(
        GenerationRequest(
            prompt=PAIRWISE_PROMPT.format(recipe=recipe, a=a.text, b=b.text),
            max_tokens=4,
            temperature=0.0,
            model_id=model_id,
        )
    )
    answer = reply.text.strip().upper()
    if answer.startswith("A"):
        return "A"
    if answer.startswith("B"):
        return "B"
    return None


def select_best_of_k(
    candidates: list[Candidate],
    verdicts: dict[str, ScreenVerdict],
    gateway: LlmGateway,
    model_id: str,
) -> Candidate:
    """Pick the passing candidate with the fewest flaws.

    Ties go to a pairwise preference judgment; an unparseable or indifferent
    judgment keeps the lower variant index.  The result depends only on the
    candidate set, never on its input order.
    """
    passing = sorted(
        (c for c in candidates if verdicts[c.candidate_id].overall == "Pass"),
        key=lambda c: c.variant,
    )
    if not passing:
        raise StageError("no candidate passed screening")

    fault_count = {
        c.candidate_id: len(verdicts[c.candidate_id].wrongness_notes) for c in passing
    }
    best_count = min(fault_count.values())
    tied = [c for c in passing if fault_count[c.candidate_id] == best_count]

    winner = tied[0]
    for challenger in tied[1:]:
        preference = _pairwise_preference(
            gateway, model_id, winner.recipe, winner, challenger
        )
        if preference == "B":
            winner = challenger
    return winner
