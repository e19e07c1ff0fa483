"""Document retrieval: engine search, snapshotting, targeted re-search.

Engines sit behind one adapter interface so fixtures replace live APIs in
every test.  Snapshots are immutable once written: refetching a URL returns
the stored bytes, keeping the study corpus stable across reruns.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol
from urllib.parse import parse_qsl, urlencode, urlsplit

import httpx

from .core import slugify

TRACKING_PARAMS = {
    "gclid",
    "fbclid",
    "msclkid",
    "mc_cid",
    "mc_eid",
    "ref",
    "ref_src",
    "igshid",
}


def canonical_url(url: str) -> str:
    """Scheme, host and path lowercased; tracking query parameters dropped.

    The remaining query parameters are sorted so the same page reached with
    reordered campaign links maps to one canonical form.
    """
    parts = urlsplit(url.strip())
    query = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if k.lower() not in TRACKING_PARAMS and not k.lower().startswith("utm_")
    ]
    query.sort()
    canonical = f"{parts.scheme.lower()}://{parts.netloc.lower()}{parts.path.lower()}"
    if query:
        canonical += "?" + urlencode(query)
    return canonical


def document_id(url: str) -> str:
    return hashlib.sha256(canonical_url(url).encode("utf-8")).hexdigest()[:16]


class SearchEngine(Protocol):
    engine_id: str

    def search(self, query: str, count: int) -> list[str]: ...


class EngineError(RuntimeError):
    """One engine failed; the study proceeds with the remaining engines."""


@dataclass
class FixtureEngine:
    """Engine backed by a query-to-URL-list mapping (JSON file or dict)."""

    engine_id: str
    results: dict[str, list[str]]

    @classmethod
    def from_file(cls, engine_id: str, path: str | Path) -> "FixtureEngine":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(engine_id=engine_id, results=data)

    def search(self, query: str, count: int) -> list[str]:
        urls = self.results.get(query)
        if urls is None:
            raise EngineError(f"fixture engine {self.engine_id} has no results for {query!r}")
        return urls[:count]


@dataclass
class HttpJsonEngine:
    """Generic JSON search API adapter: GET endpoint?q=...&count=N."""

    engine_id: str
    endpoint: str
    api_key_env: str | None = None
    client: httpx.Client | None = None

    def search(self, query: str, count: int) -> list[str]:
        import os

        client = self.client or httpx.Client(timeout=30.0)
        headers = {}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        try:
            response = client.get(
                self.endpoint, params={"q": query, "count": count}, headers=headers
            )
            response.raise_for_status()
            data = response.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise EngineError(f"engine {self.engine_id} failed: {exc}") from exc
        try:
            return [item["url"] for item in data["results"][:count]]
        except (KeyError, TypeError) as exc:
            raise EngineError(f"engine {self.engine_id} returned malformed results") from exc


@dataclass(frozen=True, slots=True)
class SearchResult:
    url: str
    engine: str
    rank: int  # best rank across engines, 0-based
    targeted: bool = False
    already_in_corpus: bool = False


def base_query(recipe_name: str) -> str:
    return f"{recipe_name} recipe"


def search(
    name: str, engines: list[SearchEngine], per_engine_count: int
) -> tuple[list[SearchResult], list[str]]:
    """Query every engine, dedup by canonical URL keeping the best rank.

    Returns the merged ranked list and a list of per-engine error strings;
    one failing engine never aborts the others.
    """
    query = base_query(name)
    merged: dict[str, SearchResult] = {}
    errors: list[str] = []
    for engine in engines:
        try:
            urls = engine.search(query, per_engine_count)
        except EngineError as exc:
            errors.append(str(exc))
            continue
        for rank, url in enumerate(urls):
            key = canonical_url(url)
            existing = merged.get(key)
            if existing is None or rank < existing.rank:
                merged[key] = SearchResult(url=url, engine=engine.engine_id, rank=rank)
    ordered = sorted(merged.values(), key=lambda r: (r.rank, r.engine, r.url))
    return ordered, errors


def targeted_research(
    name: str,
    missing_item: str,
    engines: list[SearchEngine],
    per_engine_count: int,
    corpus_urls: set[str] | None = None,
) -> tuple[list[SearchResult], list[str]]:
    """Re-search with the missing item appended to the base query.

    Results are tagged as exhaustivity-check documents; any hit already in
    the main corpus is kept but flagged so it is not annotated twice.
    """
    if not missing_item.strip():
        raise ValueError("missing_item must be non-empty")
    query = f"{base_query(name)} {missing_item}"
    corpus = {canonical_url(u) for u in (corpus_urls or set())}
    merged: dict[str, SearchResult] = {}
    errors: list[str] = []
    for engine in engines:
        try:
            urls = engine.search(query, per_engine_count)
        except EngineError as exc:
            errors.append(str(exc))
            continue
        for rank, url in enumerate(urls):
            key = canonical_url(url)
            existing = merged.get(key)
            if existing is None or rank < existing.rank:
                merged[key] = SearchResult(
                    url=url,
                    engine=engine.engine_id,
                    rank=rank,
                    targeted=True,
                    already_in_corpus=key in corpus,
                )
    ordered = sorted(merged.values(), key=lambda r: (r.rank, r.engine, r.url))
    return ordered, errors


@dataclass(frozen=True, slots=True)
class DocumentSnapshot:
    document_id: str
    recipe: str
    engine: str
    rank: int
    url: str
    fetched_at: datetime
    html: bytes
    http_status: int

    @property
    def excluded(self) -> bool:
        return not (200 <= self.http_status < 300) or not self.html


class FetchTransport(Protocol):
    def get(self, url: str) -> tuple[int, bytes]: ...


class HttpTransport:
    """Live fetcher with a per-host politeness delay."""

    def __init__(self, delay_s: float = 2.0, client: httpx.Client | None = None):
        self._delay_s = delay_s
        self._client = client or httpx.Client(timeout=30.0, follow_redirects=True)
        self._last_fetch: dict[str, float] = {}
        self._lock = threading.Lock()

    def get(self, url: str) -> tuple[int, bytes]:
        host = urlsplit(url).netloc.lower()
        # Sleep outside the lock so one slow host never stalls the others.
        while True:
            with self._lock:
                now = time.monotonic()
                allowed = self._last_fetch.get(host, 0.0) + self._delay_s
                if now >= allowed:
                    self._last_fetch[host] = now
                    break
                wait = allowed - now
            time.sleep(wait)
        try:
            response = self._client.get(url)
        except httpx.HTTPError:
            return 0, b""
        return response.status_code, response.content


@dataclass
class DirectoryTransport:
    """Test transport resolving URLs to files under a root directory.

    The URL path (without leading slash) is the relative file path; missing
    files behave as 404s.
    """

    root: Path

    def get(self, url: str) -> tuple[int, bytes]:
        relative = urlsplit(url).path.lstrip("/")
        target = Path(self.root) / relative
        if not target.is_file():
            return 404, b""
        return 200, target.read_bytes()


@dataclass
class SnapshotStore:
    """Single-writer snapshot persistence: HTML plus a sidecar metadata line."""

    snapshot_dir: Path
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _paths(self, recipe: str, doc_id: str) -> tuple[Path, Path]:
        folder = Path(self.snapshot_dir) / slugify(recipe)
        return folder / f"{doc_id}.html", folder / f"{doc_id}.meta.json"

    def load(self, recipe: str, doc_id: str) -> DocumentSnapshot | None:
        html_path, meta_path = self._paths(recipe, doc_id)
        if not meta_path.is_file():
            return None
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        html = html_path.read_bytes() if html_path.is_file() else b""
        return DocumentSnapshot(
            document_id=meta["document_id"],
            recipe=meta["recipe"],
            engine=meta["engine"],
            rank=meta["rank"],
            url=meta["url"],
            fetched_at=datetime.fromisoformat(meta["fetched_at"]),
            html=html,
            http_status=meta["http_status"],
        )

    def save(self, snapshot: DocumentSnapshot) -> None:
        html_path, meta_path = self._paths(snapshot.recipe, snapshot.document_id)
        with self._lock:
            html_path.parent.mkdir(parents=True, exist_ok=True)
            html_path.write_bytes(snapshot.html)
            meta = {
                "document_id": snapshot.document_id,
                "recipe": snapshot.recipe,
                "engine": snapshot.engine,
                "rank": snapshot.rank,
                "url": snapshot.url,
                "fetched_at": snapshot.fetched_at.isoformat(),
                "http_status": snapshot.http_status,
                "excluded": snapshot.excluded,
            }
            meta_path.write_text(
                json.dumps(meta, ensure_ascii=False, separators=(",", ":")) + "\n",
                encoding="utf-8",
            )

    def list_snapshots(self, recipe: str) -> list[DocumentSnapshot]:
        folder = Path(self.snapshot_dir) / slugify(recipe)
        if not folder.is_dir():
            return []
        snapshots = []
        for meta_path in sorted(folder.glob("*.meta.json")):
            doc_id = meta_path.name.removesuffix(".meta.json")
            snapshot = self.load(recipe, doc_id)
            if snapshot is not None:
                snapshots.append(snapshot)
        snapshots.sort(key=lambda s: (s.rank, s.document_id))
        return snapshots


def fetch_document(
    result: SearchResult,
    recipe: str,
    store: SnapshotStore,
    transport: FetchTransport,
) -> DocumentSnapshot:
    """Fetch and persist one document; an existing snapshot is returned as-is.

    Failed fetches are persisted too, with the status and empty bytes, so the
    exclusion is part of the permanent study record.
    """
    doc_id = document_id(result.url)
    existing = store.load(recipe, doc_id)
    if existing is not None:
        return existing
    status, html = transport.get(result.url)
    snapshot = DocumentSnapshot(
        document_id=doc_id,
        recipe=recipe,
        engine=result.engine,
        rank=result.rank,
        url=result.url,
        fetched_at=datetime.now(timezone.utc),
        html=html,
        http_status=status,
    )
    store.save(snapshot)
    return snapshot
