"""Pipeline stage implementations over a study directory."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..annotation import EventStore
from ..core import (
    AnnotationRecord,
    GeneratedRecipe,
    IngredientLabel,
    IngredientScheme,
    ItemKind,
    RecipeName,
    TaskLabel,
    TaskScheme,
    read_records,
    record_sort_key,
    slugify,
    validate_recipe,
)
from ..docextract import (
    ExtractedDocument,
    ExtractionCache,
    document_from_xml,
    extract_document_lists,
    html_to_text,
)
from ..generation import (
    StageError,
    StudyConfig,
    default_templates,
    generate_k,
    load_templates,
    screen_recipe,
    select_best_of_k,
)
from ..judge import decision_from_json_line, default_taxonomies, judge_study
from ..parsing import (
    ExtractionError,
    RecipeXml,
    extract_structured,
    parse_recipe_xml,
    propagate_tools,
    serialize_recipe,
)
from ..retrieval import SnapshotStore, fetch_document, search
from ..stats import (
    BROAD_FOUND,
    STRICT_FOUND,
    creativity_report,
    human_macro_accuracy,
    macro_kappa,
    model_accuracy,
    never_found_items,
    saturation_curve,
    selection_summary,
)
from ..stats.reports import (
    agreement_csv,
    creativity_csv,
    human_accuracy_csv,
    model_accuracy_csv,
    never_found_csv,
    saturation_csv,
    saturation_gnuplot,
    selection_summary_csv,
    task_accuracy_csv,
    write_report,
)
from .config import (
    StudySettings,
    build_engines,
    build_gateway,
    build_transport,
    parse_recipe_label,
)

KIND_SLUGS = {
    ItemKind.INGREDIENT: "ingredient",
    ItemKind.TASK_NAME: "task",
    ItemKind.TOOL: "tool",
    ItemKind.INGREDIENT_LIST: "ingredient_list",
}

TASK_KINDS = {ItemKind.TASK_NAME, ItemKind.TOOL, ItemKind.INGREDIENT_LIST}


@dataclass
class StageOverrides:
    seed: int | None = None
    nd: int | None = None
    k: int | None = None
    prompt_type: int | None = None
    models: list[str] = field(default_factory=list)
    ingredient_classes: int | None = None
    task_classes: int | None = None
    figures: bool = False
    records_files: list[Path] = field(default_factory=list)
    judge_files: list[Path] = field(default_factory=list)


def effective_settings(settings: StudySettings, overrides: StageOverrides) -> StudySettings:
    updated = settings.model_copy(deep=True)
    if overrides.seed is not None:
        updated.seed = overrides.seed
    if overrides.nd is not None:
        updated.retrieval.n_d = overrides.nd
    if overrides.k is not None:
        updated.k = overrides.k
    if overrides.prompt_type is not None:
        updated.prompt_type = overrides.prompt_type
    if overrides.models:
        updated.judge.models = list(overrides.models)
    if overrides.ingredient_classes is not None:
        updated.judge.ingredient_classes = overrides.ingredient_classes
    if overrides.task_classes is not None:
        updated.judge.task_classes = overrides.task_classes
    return updated


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "".join(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n" for row in rows),
        encoding="utf-8",
    )


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


# -- generate ---------------------------------------------------------------


def run_generate(study_dir: Path, settings: StudySettings) -> dict:
    gateway = build_gateway(settings, study_dir)
    templates = (
        load_templates(Path(study_dir) / settings.templates_file)
        if settings.templates_file
        else default_templates()
    )
    template = templates[settings.prompt_type]
    cfg = StudyConfig(
        recipe_names=tuple(settings.recipe_names),
        selected=tuple(settings.selected),
        k=settings.k,
        prompt_type=settings.prompt_type,
        seed=settings.seed,
        temperature=settings.temperature,
        max_tokens=settings.max_tokens,
    )
    screen_model = settings.screen_model or settings.generator_model
    out_root = Path(study_dir) / "generation"
    exclusions: list[dict] = []
    chosen_count = 0

    for name_text in settings.selected:
        name = parse_recipe_label(name_text)
        folder = out_root / name.slug
        folder.mkdir(parents=True, exist_ok=True)
        try:
            outcome = generate_k(name, cfg, template, gateway, settings.generator_model)
        except StageError as exc:
            exclusions.append({"recipe": name.text, "reason": str(exc)})
            continue
        for candidate in outcome.candidates:
            (folder / f"candidate_v{candidate.variant}.txt").write_text(
                candidate.text, encoding="utf-8"
            )
        _write_jsonl(
            folder / "failures.jsonl",
            [
                {"recipe": f.recipe, "variant": f.variant, "error": f.error}
                for f in outcome.failures
            ],
        )
        verdicts = {}
        verdict_rows = []
        for candidate in outcome.candidates:
            verdict = screen_recipe(
                candidate.candidate_id,
                candidate.text,
                gateway,
                screen_model,
                repetition_threshold=settings.repetition_threshold,
            )
            verdicts[candidate.candidate_id] = verdict
            verdict_rows.append(
                {
                    "candidate_id": verdict.candidate_id,
                    "variant": candidate.variant,
                    "repetition_flag": verdict.repetition_flag,
                    "repetition_span": list(verdict.repetition_span)
                    if verdict.repetition_span
                    else None,
                    "misunderstanding_flag": verdict.misunderstanding_flag,
                    "wrongness_notes": list(verdict.wrongness_notes),
                    "overall": verdict.overall,
                }
            )
        _write_jsonl(folder / "verdicts.jsonl", verdict_rows)
        try:
            chosen = select_best_of_k(outcome.candidates, verdicts, gateway, screen_model)
        except StageError as exc:
            exclusions.append({"recipe": name.text, "reason": str(exc)})
            continue
        (folder / "chosen.json").write_text(
            json.dumps(
                {
                    "recipe": name.text,
                    "origin_tag": name.origin_tag,
                    "variant": chosen.variant,
                    "candidate_file": f"candidate_v{chosen.variant}.txt",
                    "wrongness_count": len(verdicts[chosen.candidate_id].wrongness_notes),
                },
                ensure_ascii=False,
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        chosen_count += 1

    _write_jsonl(out_root / "exclusions.jsonl", exclusions)
    return {"selected": len(settings.selected), "chosen": chosen_count, "excluded": len(exclusions)}


def chosen_recipes(study_dir: Path) -> list[dict]:
    out = []
    root = Path(study_dir) / "generation"
    if not root.is_dir():
        return out
    for chosen_file in sorted(root.glob("*/chosen.json")):
        data = _read_json(chosen_file)
        data["text"] = (chosen_file.parent / data["candidate_file"]).read_text(
            encoding="utf-8"
        )
        out.append(data)
    return out


# -- parse ------------------------------------------------------------------


def run_parse(study_dir: Path, settings: StudySettings) -> dict:
    gateway = build_gateway(settings, study_dir)
    out_dir = Path(study_dir) / "parsed"
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = []
    violations = []
    parsed = 0
    for chosen in chosen_recipes(study_dir):
        name = RecipeName(chosen["recipe"])
        try:
            xml, repairs = extract_structured(
                chosen["text"], gateway, settings.extraction_model
            )
        except ExtractionError as exc:
            failures.append({"recipe": chosen["recipe"], "error": str(exc)})
            continue
        recipe = parse_recipe_xml(
            xml,
            raw_text=chosen["text"],
            name=chosen["recipe"],
            generator_id=settings.generator_model,
            prompt_type=settings.prompt_type,
            variant=chosen["variant"],
        )
        recipe = recipe.with_tasks(propagate_tools(recipe.tasks))
        for violation in validate_recipe(recipe):
            violations.append({"recipe": chosen["recipe"], "violation": violation})
        (out_dir / f"{name.slug}.xml").write_text(
            serialize_recipe(recipe).raw_xml + "\n", encoding="utf-8"
        )
        parsed += 1
    _write_jsonl(out_dir / "failures.jsonl", failures)
    _write_jsonl(out_dir / "violations.jsonl", violations)
    return {"parsed": parsed, "failed": len(failures), "violations": len(violations)}


def load_parsed_recipes(study_dir: Path) -> list[GeneratedRecipe]:
    recipes = []
    for xml_file in sorted((Path(study_dir) / "parsed").glob("*.xml")):
        recipes.append(parse_recipe_xml(RecipeXml(xml_file.read_text(encoding="utf-8"))))
    return recipes


# -- retrieve -----------------------------------------------------------------


def run_retrieve(study_dir: Path, settings: StudySettings) -> dict:
    engines = build_engines(settings, study_dir)
    transport = build_transport(settings, study_dir)
    store = SnapshotStore(Path(study_dir) / "snapshots")
    out_dir = Path(study_dir) / "retrieval"
    out_dir.mkdir(parents=True, exist_ok=True)

    per_recipe = {}
    shortfalls = []
    for chosen in chosen_recipes(study_dir):
        recipe = chosen["recipe"]
        results, errors = search(recipe, engines, settings.retrieval.per_engine_count)
        rows = []
        ok = 0
        for result in results:
            snapshot = fetch_document(result, recipe, store, transport)
            rows.append(
                {
                    "document_id": snapshot.document_id,
                    "url": snapshot.url,
                    "engine": snapshot.engine,
                    "rank": snapshot.rank,
                    "http_status": snapshot.http_status,
                    "excluded": snapshot.excluded,
                }
            )
            if not snapshot.excluded:
                ok += 1
        per_recipe[recipe] = {"documents": rows, "engine_errors": errors}
        if ok < settings.retrieval.n_d:
            shortfalls.append(
                {"recipe": recipe, "fetched_ok": ok, "target": settings.retrieval.n_d}
            )
    (out_dir / "results.json").write_text(
        json.dumps(per_recipe, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    _write_jsonl(out_dir / "shortfalls.jsonl", shortfalls)
    return {
        "recipes": len(per_recipe),
        "documents": sum(len(v["documents"]) for v in per_recipe.values()),
        "shortfalls": len(shortfalls),
    }


# -- extract ------------------------------------------------------------------


def run_extract(study_dir: Path, settings: StudySettings) -> dict:
    gateway = build_gateway(settings, study_dir)
    store = SnapshotStore(Path(study_dir) / "snapshots")
    cache = ExtractionCache(Path(study_dir) / "extracted")
    results = _read_json(Path(study_dir) / "retrieval" / "results.json")

    index = {}
    used_total = 0
    for recipe, info in sorted(results.items()):
        entries = []
        used = 0
        for row in info["documents"]:
            doc_id = row["document_id"]
            if used >= settings.retrieval.n_d:
                entries.append(
                    {"document_id": doc_id, "valid": None, "used": False, "reason": "beyond target"}
                )
                continue
            if row["excluded"]:
                entries.append(
                    {
                        "document_id": doc_id,
                        "valid": None,
                        "used": False,
                        "reason": f"fetch excluded (status {row['http_status']})",
                    }
                )
                continue
            snapshot = store.load(recipe, doc_id)
            text = html_to_text(snapshot.html)
            if not text.strip():
                entries.append(
                    {"document_id": doc_id, "valid": False, "used": False, "reason": "empty text"}
                )
                continue
            doc = extract_document_lists(
                text, gateway, settings.extraction_model, doc_id, cache=cache
            )
            if doc.valid:
                entries.append({"document_id": doc_id, "valid": True, "used": True, "reason": None})
                used += 1
            else:
                entries.append(
                    {
                        "document_id": doc_id,
                        "valid": False,
                        "used": False,
                        "reason": doc.invalid_reason,
                    }
                )
        index[recipe] = entries
        used_total += used
    (Path(study_dir) / "extracted" / "index.json").write_text(
        json.dumps(index, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return {"recipes": len(index), "documents_used": used_total}


def load_extracted_documents(
    study_dir: Path, settings: StudySettings
) -> dict[str, list[ExtractedDocument]]:
    cache = ExtractionCache(Path(study_dir) / "extracted")
    store = SnapshotStore(Path(study_dir) / "snapshots")
    index = _read_json(Path(study_dir) / "extracted" / "index.json")
    documents: dict[str, list[ExtractedDocument]] = {}
    for recipe, entries in index.items():
        docs = []
        for entry in entries:
            if not entry["used"]:
                continue
            snapshot = store.load(recipe, entry["document_id"])
            text = html_to_text(snapshot.html) if snapshot else ""
            xml = cache.load(entry["document_id"], settings.extraction_model, text)
            if xml is None:
                raise RuntimeError(
                    f"extraction cache missing for {entry['document_id']} "
                    f"({settings.extraction_model})"
                )
            docs.append(
                document_from_xml(xml, settings.extraction_model, entry["document_id"])
            )
        documents[recipe] = docs
    return documents


def document_urls(study_dir: Path) -> dict[str, dict[str, str]]:
    results_path = Path(study_dir) / "retrieval" / "results.json"
    if not results_path.is_file():
        return {}
    results = _read_json(results_path)
    return {
        recipe: {row["document_id"]: row["url"] for row in info["documents"]}
        for recipe, info in results.items()
    }


# -- judge --------------------------------------------------------------------


def run_judge(study_dir: Path, settings: StudySettings) -> dict:
    gateway = build_gateway(settings, study_dir)
    recipes = load_parsed_recipes(study_dir)
    documents = load_extracted_documents(study_dir, settings)
    taxonomies = default_taxonomies(task_classes=settings.judge.task_classes)
    models = settings.judge.models or [settings.extraction_model]
    out_dir = Path(study_dir) / "judge"
    out_dir.mkdir(parents=True, exist_ok=True)

    summaries = {}
    for model_id in models:
        decisions, summary = judge_study(recipes, documents, taxonomies, [model_id], gateway)
        decisions.sort(key=lambda d: record_sort_key(d.record))
        (out_dir / f"decisions.{slugify(model_id)}.jsonl").write_text(
            "".join(d.to_json_line() + "\n" for d in decisions), encoding="utf-8"
        )
        summaries[model_id] = {
            "decisions": summary.decisions,
            "skipped_documents": summary.skipped_documents,
            "failures": summary.failures,
        }
    (out_dir / "summary.json").write_text(
        json.dumps(summaries, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return {
        "models": len(models),
        "decisions": sum(s["decisions"] for s in summaries.values()),
    }


# -- stats --------------------------------------------------------------------


def _item_namer(recipes: list[GeneratedRecipe]):
    names: dict[tuple[str, ItemKind, int], str] = {}
    for recipe in recipes:
        for mention in recipe.ingredients:
            names[(recipe.name.text, ItemKind.INGREDIENT, mention.ordinal)] = mention.name
        for task in recipe.tasks:
            names[(recipe.name.text, ItemKind.TASK_NAME, task.ordinal)] = task.action
            names[(recipe.name.text, ItemKind.TOOL, task.ordinal)] = ", ".join(
                t.name for t in task.tools
            )
            names[(recipe.name.text, ItemKind.INGREDIENT_LIST, task.ordinal)] = ", ".join(
                task.ingredients
            )

    def namer(recipe: str, kind: ItemKind, ordinal: int) -> str:
        return names.get((recipe, kind, ordinal), f"{kind.value}#{ordinal}")

    return namer


def _nonsense_items(study_dir: Path, recipes: list[GeneratedRecipe]) -> dict[ItemKind, set]:
    """Items the screening classifier called out, matched by name substring."""
    notes_per_recipe: dict[str, list[str]] = {}
    root = Path(study_dir) / "generation"
    if root.is_dir():
        for chosen_file in root.glob("*/chosen.json"):
            chosen = _read_json(chosen_file)
            verdicts_file = chosen_file.parent / "verdicts.jsonl"
            if not verdicts_file.is_file():
                continue
            chosen_id = f"{chosen['recipe']}#v{chosen['variant']}"
            for line in verdicts_file.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                row = json.loads(line)
                if row["candidate_id"] == chosen_id:
                    notes_per_recipe[chosen["recipe"]] = [
                        n.lower() for n in row["wrongness_notes"]
                    ]
    flagged: dict[ItemKind, set] = {ItemKind.INGREDIENT: set(), ItemKind.TASK_NAME: set()}
    for recipe in recipes:
        notes = notes_per_recipe.get(recipe.name.text, [])
        if not notes:
            continue
        for mention in recipe.ingredients:
            if any(mention.name.lower() in note for note in notes):
                flagged[ItemKind.INGREDIENT].add((recipe.name.text, mention.ordinal))
        for task in recipe.tasks:
            if any(task.action.lower() in note for note in notes):
                flagged[ItemKind.TASK_NAME].add((recipe.name.text, task.ordinal))
    return flagged


def load_judge_records(files: list[Path]) -> dict[str, list[AnnotationRecord]]:
    """Records per model id, parsed from decision files."""
    per_model: dict[str, list[AnnotationRecord]] = {}
    for path in files:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            decision = decision_from_json_line(line)
            per_model.setdefault(decision.record.annotator, []).append(decision.record)
    return per_model


def run_stats(
    study_dir: Path, settings: StudySettings, overrides: StageOverrides
) -> dict:
    out_dir = Path(study_dir) / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)

    judge_files = list(overrides.judge_files) or sorted(
        (Path(study_dir) / "judge").glob("decisions.*.jsonl")
    )
    judge_records = load_judge_records(judge_files)

    human_records: list[AnnotationRecord] = []
    if overrides.records_files:
        for path in overrides.records_files:
            human_records.extend(
                read_records(Path(path).read_text(encoding="utf-8").splitlines())
            )
    else:
        events = Path(study_dir) / "annotation" / "events.jsonl"
        if events.is_file():
            store = EventStore(events)
            human_records = sorted(store.current.values(), key=record_sort_key)

    recipes = []
    parsed_dir = Path(study_dir) / "parsed"
    if parsed_dir.is_dir():
        recipes = load_parsed_recipes(study_dir)
    namer = _item_namer(recipes)
    nonsense = _nonsense_items(study_dir, recipes)

    ingredient_scheme = (
        IngredientScheme.THREE_CLASS
        if (overrides.ingredient_classes or settings.judge.ingredient_classes) == 3
        else IngredientScheme.FOUR_CLASS
    )
    task_scheme = (
        TaskScheme.TWO_CLASS
        if (overrides.task_classes or settings.judge.task_classes) == 2
        else TaskScheme.FOUR_CLASS
    )

    emitted: list[str] = []

    def emit(name: str, text: str) -> None:
        write_report(out_dir / name, text)
        emitted.append(name)

    # Per-judge-model tables.
    for model_id in sorted(judge_records):
        slug = slugify(model_id)
        records = judge_records[model_id]
        for kind in ItemKind:
            summary = selection_summary(records, kind)
            if summary.total:
                emit(f"selection_{slug}_{KIND_SLUGS[kind]}.csv", selection_summary_csv(summary))
        for kind, top in (
            (ItemKind.INGREDIENT, IngredientLabel.FOUND),
            (ItemKind.TASK_NAME, TaskLabel.TASK_FOUND),
        ):
            items = never_found_items(records, kind, top, item_names=namer)
            emit(f"never_found_{slug}_{KIND_SLUGS[kind]}.csv", never_found_csv(items, kind))
        for kind in (ItemKind.INGREDIENT, ItemKind.TASK_NAME, ItemKind.TOOL):
            for predicate_name, predicates in (("strict", STRICT_FOUND), ("broad", BROAD_FOUND)):
                try:
                    curve = saturation_curve(records, kind, predicates[kind])
                except ValueError:
                    continue
                name = f"saturation_{slug}_{KIND_SLUGS[kind]}_{predicate_name}.csv"
                emit(name, saturation_csv(curve))
                if overrides.figures:
                    emit(
                        f"figures/saturation_{slug}_{KIND_SLUGS[kind]}_{predicate_name}.dat",
                        saturation_gnuplot(curve),
                    )
        for kind in (ItemKind.INGREDIENT, ItemKind.TASK_NAME):
            try:
                report = creativity_report(
                    records, kind, BROAD_FOUND[kind], nonsense.get(kind, set()), item_names=namer
                )
            except ValueError:
                continue
            emit(f"creativity_{slug}_{KIND_SLUGS[kind]}.csv", creativity_csv(report))

    # Human tables.
    if human_records:
        for kind in ItemKind:
            summary = selection_summary(human_records, kind)
            if summary.total:
                emit(f"selection_human_{KIND_SLUGS[kind]}.csv", selection_summary_csv(summary))
        for kind, top in (
            (ItemKind.INGREDIENT, IngredientLabel.FOUND),
            (ItemKind.TASK_NAME, TaskLabel.TASK_FOUND),
        ):
            items = never_found_items(human_records, kind, top, item_names=namer)
            emit(f"never_found_human_{KIND_SLUGS[kind]}.csv", never_found_csv(items, kind))
        for group_name, kinds in (("ingredients", {ItemKind.INGREDIENT}), ("tasks", TASK_KINDS)):
            try:
                agreement = macro_kappa(human_records, kinds)
                emit(f"agreement_{group_name}.csv", agreement_csv(agreement))
                accuracy = human_macro_accuracy(human_records, kinds)
                emit(f"human_accuracy_{group_name}.csv", human_accuracy_csv(accuracy))
            except ValueError:
                continue

    # Model-vs-human accuracy.  The ingredient table carries the extraction
    # model column; the task table is per annotation model only.
    accuracy_values = {}
    if human_records and judge_records:
        for group_name, kinds in (
            ("ingredients", {ItemKind.INGREDIENT}),
            ("tasks", {ItemKind.TASK_NAME}),
        ):
            rows = []
            for model_id in sorted(judge_records):
                try:
                    report = model_accuracy(
                        judge_records[model_id],
                        human_records,
                        kinds,
                        ingredient_scheme=ingredient_scheme,
                        task_scheme=task_scheme,
                    )
                except ValueError:
                    continue
                rows.append((model_id, settings.extraction_model, report))
                accuracy_values[(model_id, group_name)] = report.value
            if rows and group_name == "tasks":
                emit(
                    "model_accuracy_tasks.csv",
                    task_accuracy_csv([(m, r) for m, _, r in rows]),
                )
            elif rows:
                emit(f"model_accuracy_{group_name}.csv", model_accuracy_csv(rows))

    return {
        "reports": sorted(emitted),
        "judge_models": sorted(judge_records),
        "human_records": len(human_records),
        "model_accuracy": {f"{m}/{g}": v for (m, g), v in accuracy_values.items()},
    }
