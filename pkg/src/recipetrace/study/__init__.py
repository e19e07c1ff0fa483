from .config import (
    DEFAULT_RECIPE_NAMES,
    StudySettings,
    build_engines,
    build_gateway,
    build_transport,
    load_settings,
    save_settings,
)
from .manifest import (
    STAGE_DEPENDENCIES,
    STAGES,
    OrderingError,
    StalenessError,
    StudyLock,
    StudyLocked,
    StudyManifest,
)
from .service import StudyService
from .stages import StageOverrides

__all__ = [
    "DEFAULT_RECIPE_NAMES",
    "STAGES",
    "STAGE_DEPENDENCIES",
    "OrderingError",
    "StageOverrides",
    "StalenessError",
    "StudyLock",
    "StudyLocked",
    "StudyManifest",
    "StudyService",
    "StudySettings",
    "build_engines",
    "build_gateway",
    "build_transport",
    "load_settings",
    "save_settings",
]
