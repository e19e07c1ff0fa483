"""Reduce snapshot HTML to text and extract its ingredient and task lists."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path

from .core import TaskTriple, ToolUse, slugify
from .gateway import GenerationRequest, LlmGateway
from .parsing import (
    REPAIR_ATTEMPTS,
    REPAIR_PROMPT,
    RecipeXml,
    RecipeXmlError,
    strip_to_xml,
)

EXTRACTION_PROMPT_VERSION = "doc-v1"

_SKIPPED_ELEMENTS = {"script", "style", "noscript", "template", "head"}
_BLOCK_ELEMENTS = {
    "p", "div", "section", "article", "header", "footer", "br", "hr",
    "h1", "h2", "h3", "h4", "h5", "h6",
    "ul", "ol", "table", "tr", "li", "blockquote", "figure", "figcaption",
}


class _TextExtractor(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self._chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIPPED_ELEMENTS:
            self._skip_depth += 1
        elif tag in _BLOCK_ELEMENTS:
            self._chunks.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIPPED_ELEMENTS and self._skip_depth:
            self._skip_depth -= 1
        elif tag in _BLOCK_ELEMENTS:
            self._chunks.append("\n")

    def handle_data(self, data):
        if not self._skip_depth:
            self._chunks.append(data)

    def text(self) -> str:
        raw = "".join(self._chunks)
        lines = [re.sub(r"[ \t]+", " ", line).strip() for line in raw.splitlines()]
        return "\n".join(line for line in lines if line)


def html_to_text(html: bytes) -> str:
    """Deterministic flattening: scripts/styles dropped, blocks become lines."""
    parser = _TextExtractor()
    parser.feed(html.decode("utf-8", errors="replace"))
    parser.close()
    return parser.text()


@dataclass(frozen=True, slots=True)
class ExtractedDocument:
    document_id: str
    ingredients: tuple[str, ...]
    tasks: tuple[TaskTriple, ...]
    extraction_model: str
    valid: bool
    invalid_reason: str | None = None
    repair_count: int = 0


DOC_EXTRACTION_PROMPT = """The text below comes from a web page that may contain a cooking recipe.
Extract its ingredient list and its step-by-step actions into XML with
exactly this structure:
<recipe>
  <ingredients>
    <ingredient>flour</ingredient>
  </ingredients>
  <tasks>
    <task>
      <name>whisk</name>
      <tool>bowl</tool>
      <ingredient>flour</ingredient>
      <ingredient>salt</ingredient>
    </task>
  </tasks>
</recipe>

Rules: one <ingredient> per entry of the page's ingredient list, without
quantities. One <task> per action in the page's instructions, in order; the
<name> is the action verb in infinitive form, keeping its preposition. Omit
<tool> when no tool is mentioned. If the page contains no recipe, return the
structure with empty <ingredients> and <tasks> blocks. Reply with XML only.

Page text:
{text}

XML:"""


def _extract_xml(
    text: str,
    gateway: LlmGateway,
    model_id: str,
    repair_attempts: int,
    max_tokens: int,
) -> tuple[RecipeXml | None, int, str]:
    base_prompt = DOC_EXTRACTION_PROMPT.format(text=text)
    prompt = base_prompt
    last_error = ""
    for attempt in range(repair_attempts + 1):
        reply = gateway.complete(
            GenerationRequest(
                prompt=prompt, max_tokens=max_tokens, temperature=0.0, model_id=model_id
            )
        )
        try:
            return RecipeXml(strip_to_xml(reply.text)), attempt, ""
        except RecipeXmlError as exc:
            last_error = str(exc)
            prompt = REPAIR_PROMPT.format(original=base_prompt, error=last_error)
    return None, repair_attempts + 1, last_error


def document_from_xml(
    xml: RecipeXml, model_id: str, document_id: str, repair_count: int = 0
) -> ExtractedDocument:
    root = xml.root()
    ingredients = tuple(
        (el.text or "").strip()
        for el in root.find("ingredients").findall("ingredient")
        if (el.text or "").strip()
    )
    tasks = []
    for ordinal, el in enumerate(root.find("tasks").findall("task")):
        tools = tuple(
            ToolUse((tool.text or "").strip())
            for tool in el.findall("tool")
            if (tool.text or "").strip()
        )
        task_ings = tuple(
            (ing.text or "").strip()
            for ing in el.findall("ingredient")
            if (ing.text or "").strip()
        )
        tasks.append(
            TaskTriple(
                action=el.find("name").text.strip(),
                tools=tools,
                ingredients=task_ings,
                ordinal=ordinal,
            )
        )
    valid = bool(ingredients) and bool(tasks)
    return ExtractedDocument(
        document_id=document_id,
        ingredients=ingredients,
        tasks=tuple(tasks),
        extraction_model=model_id,
        valid=valid,
        invalid_reason=None if valid else "document has no ingredients or no tasks",
        repair_count=repair_count,
    )


def extract_document_lists(
    text: str,
    gateway: LlmGateway,
    model_id: str,
    document_id: str,
    repair_attempts: int = REPAIR_ATTEMPTS,
    max_tokens: int = 2048,
    cache: "ExtractionCache | None" = None,
) -> ExtractedDocument:
    """LLM extraction of a document's lists, with the shared repair loop.

    Irreparable XML yields valid=false with the reason rather than an
    exception: a bad document is excluded and backfilled, not fatal.  With a
    cache, reruns for the same (document, model, prompt version) never call
    the gateway and are bit-identical.
    """
    if not text.strip():
        raise ValueError("document text must be non-empty")
    if cache is not None:
        cached = cache.load(document_id, model_id, text)
        if cached is not None:
            return document_from_xml(cached, model_id, document_id)
    xml, attempts, last_error = _extract_xml(
        text, gateway, model_id, repair_attempts, max_tokens
    )
    if xml is None:
        return ExtractedDocument(
            document_id=document_id,
            ingredients=(),
            tasks=(),
            extraction_model=model_id,
            valid=False,
            invalid_reason=f"no schema-valid XML after {attempts} attempts: {last_error}",
            repair_count=attempts,
        )
    if cache is not None:
        cache.save(document_id, model_id, text, xml)
    return document_from_xml(xml, model_id, document_id, repair_count=attempts)


def validate_extraction(doc: ExtractedDocument) -> list[str]:
    """Report emptiness and duplicates; duplicates warn, they do not reject."""
    report: list[str] = []
    if not doc.ingredients:
        report.append("no ingredients")
    if not doc.tasks:
        report.append("no tasks")
    seen: set[str] = set()
    for ingredient in doc.ingredients:
        low = ingredient.lower()
        if low in seen:
            report.append(f"warning: duplicate ingredient {ingredient!r}")
        seen.add(low)
    for task in doc.tasks:
        if not task.action.strip():
            report.append(f"task {task.ordinal} missing name")
    return report


class ExtractionCache:
    """File cache keyed by (document text, model, prompt version).

    Layout: cache_dir/<document_id>.<model-slug>.xml with the prompt version
    and the text digest recorded in a leading XML comment; any mismatch is a
    miss, so a changed document or prompt re-extracts.
    """

    def __init__(self, cache_dir: str | Path, prompt_version: str = EXTRACTION_PROMPT_VERSION):
        self.cache_dir = Path(cache_dir)
        self.prompt_version = prompt_version

    def _path(self, document_id: str, model_id: str) -> Path:
        return self.cache_dir / f"{document_id}.{slugify(model_id)}.xml"

    def _header(self, text: str) -> str:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
        return f"<!-- prompt_version: {self.prompt_version} text_sha: {digest} -->"

    def load(self, document_id: str, model_id: str, text: str) -> RecipeXml | None:
        path = self._path(document_id, model_id)
        if not path.is_file():
            return None
        content = path.read_text(encoding="utf-8")
        header, _, body = content.partition("\n")
        if header.strip() != self._header(text):
            return None
        try:
            return RecipeXml(body)
        except RecipeXmlError:
            return None

    def save(self, document_id: str, model_id: str, text: str, xml: RecipeXml) -> None:
        path = self._path(document_id, model_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(f"{self._header(text)}\n{xml.raw_xml}", encoding="utf-8")
