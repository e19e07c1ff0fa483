"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..annotation import PendingItem


class PendingItemModel(BaseModel):
    annotator: str
    recipe: str
    document_id: str
    document_url: str
    item_kind: str
    item_ordinal: int
    item_text: str
    allowed_labels: list[str]
    generated_ingredients: list[str]
    generated_tasks: list[str]

    @classmethod
    def from_item(cls, item: PendingItem) -> "PendingItemModel":
        return cls(
            annotator=item.annotator,
            recipe=item.recipe,
            document_id=item.document_id,
            document_url=item.document_url,
            item_kind=item.item_kind.value,
            item_ordinal=item.item_ordinal,
            item_text=item.item_text,
            allowed_labels=list(item.allowed_labels),
            generated_ingredients=list(item.generated_ingredients),
            generated_tasks=list(item.generated_tasks),
        )


class ProgressModel(BaseModel):
    total: int
    recorded: int
    auto_resolved: int
    pending: int


class PendingResponse(BaseModel):
    item: PendingItemModel | None
    progress: ProgressModel


class RecordRequest(BaseModel):
    annotator: str
    recipe: str
    document_id: str
    item_kind: str
    item_ordinal: int
    label: str
    timestamp: str | None = None  # server-assigned when omitted


class RecordModel(BaseModel):
    annotator: str
    recipe: str
    document_id: str
    item_kind: str
    item_ordinal: int
    label: str
    timestamp: str


class RecordResponse(BaseModel):
    status: str  # stored | duplicate | upgraded
    record: RecordModel
    auto_resolved: list[RecordModel] = Field(default_factory=list)


class CloseDocumentRequest(BaseModel):
    annotator: str
    recipe: str
    document_id: str


class StageRunRequest(BaseModel):
    force: bool = False
    seed: int | None = None
    nd: int | None = None
    k: int | None = None
    prompt_type: int | None = None
    models: list[str] = Field(default_factory=list)
    ingredient_classes: int | None = None
    task_classes: int | None = None
    figures: bool = False


class StageRunResponse(BaseModel):
    stage: str
    status: str
    details: dict


class StudyInfoModel(BaseModel):
    study_id: str
    recipes: list[str]
    stages_completed: list[str]
