"""Study configuration: one JSON file validated by pydantic models.

Relative paths resolve against the study directory, so a study stays a
single archivable folder.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from pydantic import BaseModel, Field, field_validator

from ..core import RecipeName
from ..gateway import GatewayConfig, LlmGateway, gateway_from_config, load_mock_fixture
from ..retrieval import (
    DirectoryTransport,
    FetchTransport,
    FixtureEngine,
    HttpJsonEngine,
    HttpTransport,
    SearchEngine,
)

# Default dish list for a study; pool and selection coincide until a wider
# candidate pool is configured.  A name may carry a parenthesized region
# label, kept as the origin tag.
DEFAULT_RECIPE_NAMES = [
    "orange chicken",
    "beef wellington",
    "garlic bread",
    "fish and chips",
    "fettuccine alfredo",
    "tzatziki",
    "thai green curry",
    "paella",
    "pastel da nata",
    "chilli con carne",
    "leberkäse",
    "kaiserschmarrn",
    "buttermilk fried chicken",
    "koshari (Egyptian cuisine)",
    "lagman (Uzbek cuisine)",
    "pita bread",
    "chocolate mousse",
    "gyoza",
    "pan-fried dumplings",
    "coleslaw",
]

_ORIGIN_LABEL = re.compile(r"^(?P<text>.+?)\s*\((?P<tag>[^()]+)\)\s*$")


def parse_recipe_label(label: str) -> RecipeName:
    """Split an optional trailing parenthesized region tag off a config name."""
    match = _ORIGIN_LABEL.match(label)
    if match:
        return RecipeName(text=match.group("text"), origin_tag=match.group("tag"))
    return RecipeName(text=label.strip())


class GatewaySettings(BaseModel):
    kind: str = "http"  # http | mock
    endpoint_url: str = ""
    api_key_env: str | None = None
    max_concurrency: int = 4
    retry_count: int = 3
    retry_backoff_ms: int = 250
    mock_fixture: str | None = None
    mock_hashed_fallback: bool = False


class EngineSettings(BaseModel):
    id: str
    kind: str = "http"  # http | fixture
    endpoint: str = ""
    api_key_env: str | None = None
    fixture_file: str | None = None


class TransportSettings(BaseModel):
    kind: str = "http"  # http | directory
    root: str | None = None
    politeness_delay_s: float = 2.0


class RetrievalSettings(BaseModel):
    engines: list[EngineSettings] = Field(default_factory=list)
    per_engine_count: int = 6
    n_d: int = 18
    transport: TransportSettings = Field(default_factory=TransportSettings)


class JudgeSettings(BaseModel):
    models: list[str] = Field(default_factory=list)
    ingredient_classes: int = 3
    task_classes: int = 4

    @field_validator("ingredient_classes")
    @classmethod
    def _check_ing(cls, v):
        if v not in (3, 4):
            raise ValueError("ingredient_classes must be 3 or 4")
        return v

    @field_validator("task_classes")
    @classmethod
    def _check_task(cls, v):
        if v not in (2, 4):
            raise ValueError("task_classes must be 2 or 4")
        return v


class AnnotationSettings(BaseModel):
    annotators: list[str] = Field(default_factory=list)
    per_annotator: int = 9
    overlap: int = 6


class StudySettings(BaseModel):
    study_id: str = "study"
    recipe_names: list[str] = Field(default_factory=lambda: list(DEFAULT_RECIPE_NAMES))
    selected: list[str] = Field(default_factory=lambda: list(DEFAULT_RECIPE_NAMES))
    k: int = 5
    prompt_type: int = 2
    seed: int = 0
    temperature: float = 0.7
    max_tokens: int = 1024
    generator_model: str = "generator"
    screen_model: str = ""
    extraction_model: str = "extractor"
    templates_file: str | None = None
    repetition_threshold: int = 6
    gateway: GatewaySettings = Field(default_factory=GatewaySettings)
    retrieval: RetrievalSettings = Field(default_factory=RetrievalSettings)
    judge: JudgeSettings = Field(default_factory=JudgeSettings)
    annotation: AnnotationSettings = Field(default_factory=AnnotationSettings)

    @field_validator("prompt_type")
    @classmethod
    def _check_prompt_type(cls, v):
        if not 1 <= v <= 5:
            raise ValueError("prompt_type must be in 1..5")
        return v

    def model_post_init(self, __context) -> None:
        pool = set(self.recipe_names)
        missing = [n for n in self.selected if n not in pool]
        if missing:
            raise ValueError(f"selected names missing from the pool: {missing}")
        texts = [parse_recipe_label(n).text for n in self.selected]
        if len(set(texts)) != len(texts):
            raise ValueError("recipe names must be unique within a study")


def load_settings(path: Path) -> StudySettings:
    return StudySettings.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


def save_settings(settings: StudySettings, path: Path) -> None:
    Path(path).write_text(
        json.dumps(settings.model_dump(), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def build_gateway(settings: StudySettings, base_dir: Path) -> LlmGateway:
    gw = settings.gateway
    if gw.kind == "mock":
        if not gw.mock_fixture:
            raise ValueError("mock gateway requires mock_fixture")
        backend = load_mock_fixture(
            _resolve(base_dir, gw.mock_fixture), hashed_fallback=gw.mock_hashed_fallback
        )
        return LlmGateway(
            backend,
            max_concurrency=gw.max_concurrency,
            retry_count=gw.retry_count,
            retry_backoff_ms=gw.retry_backoff_ms,
        )
    return gateway_from_config(
        GatewayConfig(
            endpoint_url=gw.endpoint_url,
            api_key_env=gw.api_key_env,
            max_concurrency=gw.max_concurrency,
            retry_count=gw.retry_count,
            retry_backoff_ms=gw.retry_backoff_ms,
        )
    )


def build_engines(settings: StudySettings, base_dir: Path) -> list[SearchEngine]:
    engines: list[SearchEngine] = []
    for engine in settings.retrieval.engines:
        if engine.kind == "fixture":
            if not engine.fixture_file:
                raise ValueError(f"fixture engine {engine.id} requires fixture_file")
            engines.append(
                FixtureEngine.from_file(engine.id, _resolve(base_dir, engine.fixture_file))
            )
        else:
            engines.append(
                HttpJsonEngine(
                    engine_id=engine.id,
                    endpoint=engine.endpoint,
                    api_key_env=engine.api_key_env,
                )
            )
    return engines


def build_transport(settings: StudySettings, base_dir: Path) -> FetchTransport:
    transport = settings.retrieval.transport
    if transport.kind == "directory":
        if not transport.root:
            raise ValueError("directory transport requires root")
        return DirectoryTransport(_resolve(base_dir, transport.root))
    return HttpTransport(delay_s=transport.politeness_delay_s)


def _resolve(base_dir: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else Path(base_dir) / path
