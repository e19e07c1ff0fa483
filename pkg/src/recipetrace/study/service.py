"""Service facade over one study directory.

Every consumer goes through this layer: the CLI binds it in-process and the
HTTP service wraps it, so pipeline behavior is identical either way.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..annotation import AnnotationBackend, EventStore, generate_assignments
from ..annotation.assignments import Assignment
from .config import StudySettings, load_settings, save_settings
from .manifest import (
    STAGE_DEPENDENCIES,
    STAGES,
    OrderingError,
    StudyLock,
    StudyManifest,
    digest_json,
)
from .stages import (
    StageOverrides,
    document_urls,
    effective_settings,
    load_parsed_recipes,
    run_extract,
    run_generate,
    run_judge,
    run_parse,
    run_retrieve,
    run_stats,
)

_STAGE_RUNNERS = {
    "generate": lambda study, settings, overrides: run_generate(study, settings),
    "parse": lambda study, settings, overrides: run_parse(study, settings),
    "retrieve": lambda study, settings, overrides: run_retrieve(study, settings),
    "extract": lambda study, settings, overrides: run_extract(study, settings),
    "judge": lambda study, settings, overrides: run_judge(study, settings),
    "stats": run_stats,
}

# Config fields that feed each stage's input fingerprint.
_STAGE_CONFIG_KEYS = {
    "generate": (
        "recipe_names", "selected", "k", "prompt_type", "seed", "temperature",
        "max_tokens", "generator_model", "screen_model", "templates_file",
        "repetition_threshold", "gateway",
    ),
    "parse": ("extraction_model", "gateway"),
    "retrieve": ("retrieval",),
    "extract": ("extraction_model", "retrieval", "gateway"),
    "judge": ("judge", "extraction_model", "gateway"),
    "stats": ("judge", "extraction_model"),
}


class StudyService:
    def __init__(self, study_dir: str | Path, config_path: str | Path | None = None):
        self.study_dir = Path(study_dir)
        self.study_dir.mkdir(parents=True, exist_ok=True)
        self.config_path = (
            Path(config_path) if config_path else self.study_dir / "config.json"
        )
        if self.config_path.is_file():
            self.settings = load_settings(self.config_path)
        else:
            self.settings = StudySettings()
            save_settings(self.settings, self.config_path)
        self.manifest = StudyManifest(self.study_dir)

    # -- pipeline ----------------------------------------------------------

    def _input_digest(self, stage: str, settings: StudySettings, upstream: dict) -> str:
        config_slice = {
            key: settings.model_dump()[key] for key in _STAGE_CONFIG_KEYS[stage]
        }
        return digest_json({"config": config_slice, "upstream": upstream})

    def run_stage(
        self,
        stage: str,
        force: bool = False,
        overrides: StageOverrides | None = None,
    ) -> dict:
        """Run one pipeline stage under the study lock.

        Completed, non-stale stages are no-ops unless forced.  A stats run
        over explicit record files is standalone: it bypasses ordering and
        leaves the manifest untouched.
        """
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
        if stage == "serve":
            raise ValueError("serve is started via the CLI serve command or ASGI app")
        overrides = overrides or StageOverrides()
        settings = effective_settings(self.settings, overrides)

        standalone_stats = stage == "stats" and (
            overrides.records_files or overrides.judge_files
        )
        with StudyLock(self.study_dir):
            if standalone_stats:
                details = run_stats(self.study_dir, settings, overrides)
                return {"stage": stage, "status": "completed", "details": details}

            upstream = self.manifest.check_upstream(stage)
            input_digest = self._input_digest(stage, settings, upstream)
            if not force and self.manifest.is_fresh(stage, input_digest):
                return {"stage": stage, "status": "skipped", "details": {}}
            details = _STAGE_RUNNERS[stage](self.study_dir, settings, overrides)
            self.manifest.record_completion(stage, input_digest)
            return {"stage": stage, "status": "completed", "details": details}

    # -- annotation service -------------------------------------------------

    def check_serve_ready(self) -> None:
        for upstream in STAGE_DEPENDENCIES["serve"]:
            if self.manifest.marker(upstream) is None:
                raise OrderingError("serve", upstream)

    def _assignment_documents(self) -> dict[str, list[str]]:
        """First n_d usable documents per recipe, in retrieval rank order."""
        urls = document_urls(self.study_dir)
        results = json.loads(
            (self.study_dir / "retrieval" / "results.json").read_text(encoding="utf-8")
        )
        docs = {}
        for recipe, info in results.items():
            usable = [
                row["document_id"] for row in info["documents"] if not row["excluded"]
            ]
            docs[recipe] = usable[: self.settings.retrieval.n_d]
        return docs

    def load_assignments(self) -> list[Assignment]:
        """Generate (or reload) the deterministic assignment set."""
        path = self.study_dir / "annotation" / "assignments.json"
        if path.is_file():
            data = json.loads(path.read_text(encoding="utf-8"))
            return [
                Assignment(
                    annotator_id=row["annotator_id"],
                    recipe=row["recipe"],
                    document_ids=tuple(row["document_ids"]),
                    overlap_partners={
                        k: tuple(v) for k, v in row["overlap_partners"].items()
                    },
                )
                for row in data
            ]
        annotation = self.settings.annotation
        if not annotation.annotators:
            raise ValueError("no annotators configured")
        assignments = generate_assignments(
            annotation.annotators,
            self._assignment_documents(),
            annotation.per_annotator,
            annotation.overlap,
            seed=self.settings.seed,
        )
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(
                [
                    {
                        "annotator_id": a.annotator_id,
                        "recipe": a.recipe,
                        "document_ids": list(a.document_ids),
                        "overlap_partners": {
                            k: list(v) for k, v in a.overlap_partners.items()
                        },
                    }
                    for a in assignments
                ],
                ensure_ascii=False,
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        return assignments

    def build_annotation_backend(self) -> AnnotationBackend:
        self.check_serve_ready()
        recipes = load_parsed_recipes(self.study_dir)
        return AnnotationBackend(
            recipes=recipes,
            document_urls=document_urls(self.study_dir),
            assignments=self.load_assignments(),
            store=EventStore(self.study_dir / "annotation" / "events.jsonl"),
        )
