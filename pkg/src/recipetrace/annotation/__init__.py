from .assignments import Assignment, AssignmentError, annotators_needed, generate_assignments
from .backend import (
    HUMAN_CHOICES,
    AnnotationBackend,
    EventStore,
    PendingItem,
    RecordConflict,
    UnknownItem,
)

__all__ = [
    "HUMAN_CHOICES",
    "AnnotationBackend",
    "Assignment",
    "AssignmentError",
    "EventStore",
    "PendingItem",
    "RecordConflict",
    "UnknownItem",
    "annotators_needed",
    "generate_assignments",
]
