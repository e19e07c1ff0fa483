"""Study manifest: stage completion markers with content hashes.

The manifest alone is enough to resume an interrupted study: a stage may
only run when its upstream markers exist, and recorded output digests catch
upstream edits made after completion.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

STAGES = ("generate", "parse", "retrieve", "extract", "judge", "serve", "stats")

STAGE_DEPENDENCIES: dict[str, tuple[str, ...]] = {
    "generate": (),
    "parse": ("generate",),
    "retrieve": ("generate",),
    "extract": ("retrieve",),
    "judge": ("parse", "extract"),
    "serve": ("parse", "retrieve"),
    "stats": ("judge",),
}

STAGE_OUTPUT_DIRS: dict[str, tuple[str, ...]] = {
    "generate": ("generation",),
    "parse": ("parsed",),
    "retrieve": ("snapshots", "retrieval"),
    "extract": ("extracted",),
    "judge": ("judge",),
    "serve": ("annotation",),
    "stats": ("reports",),
}


class OrderingError(RuntimeError):
    def __init__(self, stage: str, missing: str):
        super().__init__(
            f"stage '{stage}' requires stage '{missing}' to be completed first"
        )
        self.missing = missing


class StalenessError(RuntimeError):
    def __init__(self, stage: str, upstream: str, recorded: str, current: str):
        super().__init__(
            f"stage '{stage}' found stale upstream '{upstream}': outputs were "
            f"{recorded[:12]} at completion but are {current[:12]} now; rerun "
            f"'{upstream}' or pass --force"
        )
        self.upstream = upstream
        self.recorded = recorded
        self.current = current


class StudyLocked(RuntimeError):
    pass


def digest_tree(paths: list[Path], base: Path) -> str:
    """Content digest over a sorted file tree; empty tree hashes to a constant."""
    digest = hashlib.sha256()
    entries = []
    for path in paths:
        if path.is_file():
            entries.append(path)
        elif path.is_dir():
            entries.extend(p for p in path.rglob("*") if p.is_file())
    for path in sorted(entries, key=lambda p: str(p.relative_to(base))):
        digest.update(str(path.relative_to(base)).encode("utf-8"))
        digest.update(b"\x00")
        digest.update(hashlib.sha256(path.read_bytes()).digest())
    return digest.hexdigest()


def digest_json(data) -> str:
    return hashlib.sha256(
        json.dumps(data, sort_keys=True, ensure_ascii=False).encode("utf-8")
    ).hexdigest()


@dataclass
class StudyManifest:
    study_dir: Path

    @property
    def path(self) -> Path:
        return Path(self.study_dir) / "manifest.json"

    def load(self) -> dict:
        if self.path.is_file():
            return json.loads(self.path.read_text(encoding="utf-8"))
        return {"stages": {}}

    def save(self, data: dict) -> None:
        self.path.write_text(
            json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def stage_outputs_digest(self, stage: str) -> str:
        base = Path(self.study_dir)
        paths = [base / d for d in STAGE_OUTPUT_DIRS[stage]]
        return digest_tree(paths, base)

    def marker(self, stage: str) -> dict | None:
        return self.load()["stages"].get(stage)

    def check_upstream(self, stage: str) -> dict[str, str]:
        """Raise on missing or stale upstream; return upstream output digests."""
        data = self.load()
        digests = {}
        for upstream in STAGE_DEPENDENCIES[stage]:
            marker = data["stages"].get(upstream)
            if marker is None:
                raise OrderingError(stage, upstream)
            current = self.stage_outputs_digest(upstream)
            if current != marker["output_digest"]:
                raise StalenessError(stage, upstream, marker["output_digest"], current)
            digests[upstream] = marker["output_digest"]
        return digests

    def is_fresh(self, stage: str, input_digest: str) -> bool:
        marker = self.marker(stage)
        return (
            marker is not None
            and marker.get("input_digest") == input_digest
            and self.stage_outputs_digest(stage) == marker.get("output_digest")
        )

    def record_completion(self, stage: str, input_digest: str) -> None:
        data = self.load()
        data.setdefault("stages", {})[stage] = {
            "completed_at": datetime.now(timezone.utc).isoformat(),
            "input_digest": input_digest,
            "output_digest": self.stage_outputs_digest(stage),
        }
        self.save(data)


class StudyLock:
    """One CLI invocation per study directory at a time."""

    def __init__(self, study_dir: Path):
        self.path = Path(study_dir) / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StudyLocked(
                f"study is locked by another invocation ({self.path}); remove the "
                "lock file if that process is gone"
            ) from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False
