"""FastAPI application over one study: annotation API plus stage control."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..annotation import AnnotationBackend, RecordConflict, UnknownItem
from ..core import AnnotationRecord, LabelParseError, record_from_dict, utc_now
from ..study import OrderingError, StalenessError, StudyLocked, StudyService
from ..study.stages import StageOverrides
from .models import (
    CloseDocumentRequest,
    PendingItemModel,
    PendingResponse,
    ProgressModel,
    RecordModel,
    RecordRequest,
    RecordResponse,
    StageRunRequest,
    StageRunResponse,
    StudyInfoModel,
)

_FALLBACK_INDEX = """<!doctype html>
<html><head><title>recipetrace</title></head>
<body>
<h1>recipetrace annotation service</h1>
<p>No UI bundle is installed. The JSON API lives under <code>/api</code>.</p>
</body></html>"""


def _record_model(record: AnnotationRecord) -> RecordModel:
    return RecordModel(**record.to_dict())


def create_app(
    study_dir: str | Path,
    config_path: str | Path | None = None,
    ui_dist: str | Path | None = None,
) -> FastAPI:
    service = StudyService(study_dir, config_path)
    app = FastAPI(title="recipetrace", version="0.1.0")
    state: dict[str, AnnotationBackend | None] = {"backend": None}

    def backend() -> AnnotationBackend:
        if state["backend"] is None:
            try:
                state["backend"] = service.build_annotation_backend()
            except OrderingError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
        return state["backend"]

    @app.get("/api/study", response_model=StudyInfoModel)
    def study_info():
        manifest = service.manifest.load()
        return StudyInfoModel(
            study_id=service.settings.study_id,
            recipes=list(service.settings.selected),
            stages_completed=sorted(manifest.get("stages", {})),
        )

    @app.get("/api/pending", response_model=PendingResponse)
    def pending(annotator: str = Query(...)):
        try:
            item = backend().next_pending(annotator)
            progress = backend().progress(annotator)
        except UnknownItem as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return PendingResponse(
            item=PendingItemModel.from_item(item) if item else None,
            progress=ProgressModel(**progress),
        )

    @app.get("/api/progress", response_model=ProgressModel)
    def progress(annotator: str = Query(...)):
        return ProgressModel(**backend().progress(annotator))

    @app.post("/api/record", response_model=RecordResponse)
    def record(request: RecordRequest):
        data = request.model_dump()
        if not data.get("timestamp"):
            data["timestamp"] = utc_now().isoformat()
        try:
            parsed = record_from_dict(data)
        except (LabelParseError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            status, stored, resolved = backend().record(parsed)
        except RecordConflict as exc:
            raise HTTPException(
                status_code=409,
                detail={
                    "message": str(exc),
                    "existing": exc.existing.to_dict(),
                },
            ) from exc
        except UnknownItem as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return RecordResponse(
            status=status,
            record=_record_model(stored),
            auto_resolved=[_record_model(r) for r in resolved],
        )

    @app.post("/api/close_document")
    def close_document(request: CloseDocumentRequest):
        backend().close_document(request.annotator, request.recipe, request.document_id)
        return {"status": "closed"}

    @app.get("/api/export")
    def export(study: str | None = None):
        if study is not None and study != service.settings.study_id:
            raise HTTPException(
                status_code=404,
                detail=f"this service hosts study {service.settings.study_id!r}",
            )
        return PlainTextResponse(
            backend().export_lines(), media_type="application/x-ndjson"
        )

    @app.post("/api/stages/{stage}", response_model=StageRunResponse)
    def run_stage(stage: str, request: StageRunRequest):
        overrides = StageOverrides(
            seed=request.seed,
            nd=request.nd,
            k=request.k,
            prompt_type=request.prompt_type,
            models=request.models,
            ingredient_classes=request.ingredient_classes,
            task_classes=request.task_classes,
            figures=request.figures,
        )
        try:
            result = service.run_stage(stage, force=request.force, overrides=overrides)
        except OrderingError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except StalenessError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except StudyLocked as exc:
            raise HTTPException(status_code=423, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if stage in ("generate", "parse", "retrieve", "extract", "judge"):
            # New pipeline outputs invalidate the cached annotation view.
            state["backend"] = None
        return StageRunResponse(**result)

    dist = Path(ui_dist) if ui_dist else Path(study_dir) / "ui"
    if dist.is_dir() and (dist / "index.html").is_file():
        app.mount("/", StaticFiles(directory=dist, html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_INDEX

    return app
