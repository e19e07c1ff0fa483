"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one PASS line on success; a failed criterion fails its
test.  Run with `pytest tests/test_acceptance.py -v -s`.
"""

import json
import random
import time
from datetime import datetime, timezone
from pathlib import Path

import pytest

from conftest import FIXTURES, make_fixture_study
from fixture_studies import random_study_records
from oracles import (
    oracle_human_accuracy,
    oracle_kappa,
    oracle_macro_kappa,
    oracle_model_accuracy,
    oracle_never_found,
    oracle_saturation_exact,
    oracle_selection_summary,
)
from recipetrace.core import (
    AnnotationRecord,
    IngredientLabel,
    ItemKind,
    TaskLabel,
    validate_recipe,
)
from recipetrace.gateway import LlmGateway, MockBackend
from recipetrace.generation import detect_repetition
from recipetrace.judge import (
    Taxonomy,
    build_choice_prompts,
    classify,
    default_taxonomies,
    judge_study,
)
from recipetrace.parsing import parse_recipe_xml, serialize_recipe
from recipetrace.stats import (
    cohens_kappa,
    human_macro_accuracy,
    macro_kappa,
    model_accuracy,
    never_found_items,
    saturation_curve,
    selection_summary,
)
from recipetrace.study import StudyService
from recipetrace.study.stages import StageOverrides

F = IngredientLabel.FOUND
FNP = IngredientLabel.FOUND_NOT_PERFECT
NF = IngredientLabel.NOT_FOUND
_TS = datetime(2025, 3, 1, tzinfo=timezone.utc)

TOLERANCE = 1e-12


def rec(annotator, recipe, doc, ordinal, label, kind=ItemKind.INGREDIENT):
    return AnnotationRecord(
        annotator=annotator,
        recipe=recipe,
        document_id=doc,
        item_kind=kind,
        item_ordinal=ordinal,
        label=label,
        timestamp=_TS,
    )


def test_stats_oracle_equivalence_on_randomized_studies():
    """50 random studies: every statistic matches brute force to 1e-12, <30s."""
    start = time.monotonic()
    rng = random.Random(20250801)
    kinds = (ItemKind.INGREDIENT, ItemKind.TASK_NAME)
    for index in range(50):
        human, judge = random_study_records(
            rng, max_recipes=5, max_docs=6, max_items=10, kinds=kinds
        )
        for kind_set in ({ItemKind.INGREDIENT}, {ItemKind.TASK_NAME}):
            expected_pairs, expected_macro = oracle_macro_kappa(human, kind_set)
            report = macro_kappa(human, kind_set)
            assert abs(report.macro_kappa - expected_macro) <= TOLERANCE
            by_key = {
                (p.recipe, p.annotator_a, p.annotator_b): p.kappa for p in report.pairs
            }
            assert by_key.keys() == expected_pairs.keys()
            for key, kappa in expected_pairs.items():
                assert abs(by_key[key] - kappa) <= TOLERANCE

            expected_ah = oracle_human_accuracy(human, kind_set)
            assert abs(human_macro_accuracy(human, kind_set).value - expected_ah) <= TOLERANCE

            expected_am = oracle_model_accuracy(judge, human, kind_set)
            assert abs(model_accuracy(judge, human, kind_set).value - expected_am) <= TOLERANCE

        expected_counts, expected_total = oracle_selection_summary(
            human, ItemKind.INGREDIENT
        )
        summary = selection_summary(human, ItemKind.INGREDIENT)
        assert summary.total == expected_total
        for row in summary.rows:
            count, pct = expected_counts.get(row.label, (0, None))
            assert row.count == count
            if count:
                assert row.percentage == pct

        expected_nf = oracle_never_found(human, ItemKind.INGREDIENT, F)
        actual_nf = never_found_items(human, ItemKind.INGREDIENT, F)
        assert {(i.recipe, i.item_ordinal) for i in actual_nf} == set(expected_nf)
        for item in actual_nf:
            assert item.label_counts == expected_nf[(item.recipe, item.item_ordinal)]

        predicate = {F, FNP}
        expected_curve = oracle_saturation_exact(judge, ItemKind.INGREDIENT, predicate)
        curve = saturation_curve(judge, ItemKind.INGREDIENT, predicate)
        assert len(curve.points) == len(expected_curve)
        for (n_a, pct_a), (n_b, pct_b) in zip(curve.points, expected_curve):
            assert n_a == n_b
            assert abs(pct_a - pct_b) <= TOLERANCE
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"oracle equivalence took {elapsed:.1f}s"
    print(f"\nACCEPTANCE PASS: stats oracle equivalence (50 studies, {elapsed:.1f}s)")


def test_hand_value_checks():
    """Worked examples are exact: kappa 0.5, A_h 0.625, saturation (50, 100)."""
    assert cohens_kappa([F, F, NF, NF], [F, NF, NF, NF]) == 0.5

    records = []
    for i, (la, lb) in enumerate([(F, F), (F, F), (NF, NF), (F, NF)]):
        records.append(rec("a", "r1", "d1", i, la))
        records.append(rec("b", "r1", "d1", i, lb))
    for i, (la, lb) in enumerate([(F, F), (NF, F)]):
        records.append(rec("a", "r2", "d2", i, la))
        records.append(rec("b", "r2", "d2", i, lb))
    assert human_macro_accuracy(records, {ItemKind.INGREDIENT}).value == 0.625

    curve = saturation_curve(
        [rec("m", "r1", "d1", 0, NF), rec("m", "r1", "d2", 0, F)],
        ItemKind.INGREDIENT,
        {F},
    )
    assert curve.points == ((1, 50.0), (2, 100.0))
    print("\nACCEPTANCE PASS: hand-value checks (kappa=0.5, A_h=0.625, saturation 50/100)")


def test_saturation_properties_on_random_fixtures():
    """100 exact-mode fixtures: monotone curves, endpoint = union coverage."""
    rng = random.Random(991)
    violations = 0
    for _ in range(100):
        _, judge = random_study_records(rng, max_docs=6, max_items=8)
        predicate = {F, FNP}
        curve = saturation_curve(judge, ItemKind.INGREDIENT, predicate)
        percentages = [pct for _, pct in curve.points]
        if any(b < a - TOLERANCE for a, b in zip(percentages, percentages[1:])):
            violations += 1
            continue
        # Union coverage, computed independently per recipe.
        max_n = curve.points[-1][0]
        per_recipe: dict[str, dict] = {}
        for record in judge:
            info = per_recipe.setdefault(record.recipe, {"docs": set(), "found": {}})
            info["docs"].add(record.document_id)
            found = info["found"]
            found[record.item_ordinal] = found.get(record.item_ordinal, False) or (
                record.label in predicate
            )
        fractions = [
            sum(1 for v in info["found"].values() if v) / len(info["found"])
            for recipe, info in sorted(per_recipe.items())
            if len(info["docs"]) >= max_n
        ]
        union_pct = 100.0 * sum(fractions) / len(fractions)
        if abs(percentages[-1] - union_pct) > TOLERANCE:
            violations += 1
    assert violations == 0
    print("\nACCEPTANCE PASS: saturation properties (100 fixtures, 0 violations)")


def test_judge_properties_with_mock_backend():
    """Prefix identity, argmax permutation/shift invariance, auto-resolution."""
    from recipetrace.docextract import ExtractedDocument
    from recipetrace.core import (
        GeneratedRecipe,
        IngredientMention,
        RecipeName,
        TaskTriple,
        ToolUse,
    )

    doc = ExtractedDocument(
        document_id="d1",
        ingredients=("lentils", "rice"),
        tasks=(TaskTriple("boil", (ToolUse("pot"),), ("lentils",), 0),),
        extraction_model="x",
        valid=True,
    )
    recipe = GeneratedRecipe(
        name=RecipeName("koshari"),
        raw_text="t",
        ingredients=(IngredientMention("rice", 0),),
        tasks=(TaskTriple("levitate", (ToolUse("wand"),), ("rice",), 0),),
        generator_id="g",
        prompt_type=1,
        variant=1,
    )

    # Prefix byte-identity across every default taxonomy's prompt set.
    taxonomies = default_taxonomies()
    items = {
        ItemKind.INGREDIENT: "rice",
        ItemKind.TASK_NAME: recipe.tasks[0],
        ItemKind.TOOL: "wand",
        ItemKind.INGREDIENT_LIST: recipe.tasks[0],
    }
    for kind, taxonomy in taxonomies.items():
        pairs = build_choice_prompts(items[kind], kind, doc, taxonomy)
        assert len({prompt for prompt, _ in pairs}) == 1
        assert len(pairs) == len(taxonomy.choices)

    # Argmax invariance under 20 random permutations per taxonomy, plus
    # constant-shift invariance.
    rng = random.Random(17)
    score_tables = {
        ItemKind.INGREDIENT: {"Found": -3.0, "Found (not perfect)": -0.7, "Not found": -2.0},
        ItemKind.TASK_NAME: {
            "Task Found": -2.0,
            "Task Found (Not Exact Wording)": -0.9,
            "Task Found (Wrong Context)": -3.0,
            "Task Not Found": -1.5,
        },
        ItemKind.TOOL: {
            "Found": -1.8,
            "Found (Not Exact)": -0.4,
            "Not Found": -2.2,
            "Tool Implied": -3.3,
        },
        ItemKind.INGREDIENT_LIST: {
            "Ingredients Match": -2.6,
            "Most Ingredients Match": -0.3,
            "Some Ingredients Match": -1.9,
            "No Ingredients Match": -4.0,
            "Ingredients Implied": -5.0,
        },
    }
    for kind, taxonomy in taxonomies.items():
        table = score_tables[kind]
        expected_text = max(table, key=table.get)
        for shift in (0.0, -2.5):
            for _ in range(20):
                choices = list(taxonomy.choices)
                rng.shuffle(choices)
                permuted = Taxonomy(kind, tuple(choices))
                backend = MockBackend()
                for text, lp in table.items():
                    backend.add_score(f" {text}", lp + shift)
                decision = classify(
                    items[kind], kind, 0, "koshari", doc, permuted,
                    LlmGateway(backend), "judge-m",
                )
                assert decision.record.label.value == expected_text

    # TaskNotFound auto-resolution: dependent fields become Not filled in
    # with zero scoring calls beyond the ingredient and task-name sets.
    backend = MockBackend()
    for text, lp in {
        "Found": -1.0, "Found (not perfect)": -2.0, "Not found": -3.0,
        "Task Found": -5.0, "Task Found (Not Exact Wording)": -5.0,
        "Task Found (Wrong Context)": -5.0, "Task Not Found": -0.5,
    }.items():
        backend.add_score(f" {text}", lp)
    decisions, _ = judge_study(
        [recipe], {"koshari": [doc]}, default_taxonomies(), ["m"], LlmGateway(backend)
    )
    assert backend.score_calls == 3 + 4
    labels = {d.record.item_kind: d.record.label.value for d in decisions}
    assert labels[ItemKind.TASK_NAME] == "Task Not Found"
    assert labels[ItemKind.TOOL] == "Not filled in"
    assert labels[ItemKind.INGREDIENT_LIST] == "Not filled in"
    print("\nACCEPTANCE PASS: judge properties (prefix identity, argmax invariance, auto-resolution)")


PIPELINE = ["generate", "parse", "retrieve", "extract", "judge", "stats"]


def run_fixture_pipeline(root: Path) -> dict[str, bytes]:
    study = make_fixture_study(root)
    service = StudyService(study)
    for stage in PIPELINE:
        result = service.run_stage(stage)
        assert result["status"] == "completed", (stage, result)
    reports = {}
    for path in sorted((study / "reports").rglob("*")):
        if path.is_file():
            reports[str(path.relative_to(study / "reports"))] = path.read_bytes()
    return reports


def test_end_to_end_fixture_study(tmp_path):
    """Two recipes, four fixture documents each, mock gateway and engines:
    generate->stats completes under 60s with byte-identical tables."""
    start = time.monotonic()
    first = run_fixture_pipeline(tmp_path / "run1")
    second = run_fixture_pipeline(tmp_path / "run2")
    elapsed = time.monotonic() - start
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], f"byte difference in {name}"
    golden_dir = FIXTURES / "golden" / "reports"
    golden = {
        str(p.relative_to(golden_dir)): p.read_bytes()
        for p in sorted(golden_dir.rglob("*"))
        if p.is_file()
    }
    assert first == golden, "reports differ from the frozen golden tables"
    assert elapsed < 60.0, f"pipeline took {elapsed:.1f}s"
    print(f"\nACCEPTANCE PASS: end-to-end fixture study ({elapsed:.1f}s, byte-identical)")


def test_repetition_detector_acceptance():
    """The degenerate-loop fixture flags with its 14-line span; the normal
    fixture recipes never flag."""
    loop_text = (FIXTURES / "recipes" / "tzatziki_loop.txt").read_text()
    result = detect_repetition(loop_text)
    assert result.flagged
    assert result.line_count == 14
    lines = loop_text.splitlines()
    start, end = result.span
    assert all("Stir in 1/2 cup" in lines[i] for i in range(start, end + 1))
    assert "Stir in 1/2 cup" not in lines[start - 1]

    normal = sorted(
        p for p in (FIXTURES / "recipes").glob("*.txt") if "loop" not in p.name
    )
    assert len(normal) >= 10
    false_positives = [p.name for p in normal if detect_repetition(p.read_text()).flagged]
    assert false_positives == []
    print(
        f"\nACCEPTANCE PASS: repetition detector (14-line span, 0/{len(normal)} false positives)"
    )


def test_xml_round_trip_on_randomized_recipes():
    """parse(serialize(r)) == r for 100 randomized recipes."""
    from test_parsing import random_recipe

    rng = random.Random(424242)
    checked = 0
    while checked < 100:
        recipe = random_recipe(rng)
        if validate_recipe(recipe, require_items=False):
            continue
        assert parse_recipe_xml(serialize_recipe(recipe)) == recipe
        checked += 1
    print("\nACCEPTANCE PASS: XML round-trip (100 randomized recipes)")


def test_model_accuracy_either_annotator_rule():
    """Humans disagree on 4 of 10 items, the model sides with the minority
    annotator each time: A_m = 1.0 with every pair counted once."""
    human = []
    judge = []
    for i in range(10):
        label_a = F if i < 4 else NF
        label_b = NF
        human.append(rec("a", "r1", "d1", i, label_a))
        human.append(rec("b", "r1", "d1", i, label_b))
        # On the disagreed items the model picks annotator a's minority view.
        judge.append(rec("model", "r1", "d1", i, label_a))
    report = model_accuracy(judge, human, {ItemKind.INGREDIENT})
    assert report.value == 1.0
    assert report.per_recipe[0].total == 10
    print("\nACCEPTANCE PASS: A_m either-annotator rule (A_m=1.0, T=10)")


def test_conditional_reproduction_from_canonical_dataset(tmp_path):
    """Any canonical-format dataset: the stats stage reproduces selection
    percentages to ±0.01 and A_m to ±0.001 against the brute-force oracle."""
    rng = random.Random(77007)
    human, judge = random_study_records(
        rng, max_recipes=5, max_docs=6, max_items=10,
        kinds=(ItemKind.INGREDIENT, ItemKind.TASK_NAME),
        model_id="repro-model",
    )
    records_file = tmp_path / "human.jsonl"
    records_file.write_text(
        "".join(r.to_json_line() + "\n" for r in human), encoding="utf-8"
    )
    judge_file = tmp_path / "judge.jsonl"
    judge_lines = []
    for record in judge:
        row = record.to_dict()
        row["scores"] = {}
        row["margin"] = None
        judge_lines.append(json.dumps(row, ensure_ascii=False))
    judge_file.write_text("\n".join(judge_lines) + "\n", encoding="utf-8")

    study = make_fixture_study(tmp_path)
    service = StudyService(study)
    result = service.run_stage(
        "stats",
        overrides=StageOverrides(records_files=[records_file], judge_files=[judge_file]),
    )
    assert result["status"] == "completed"
    reports = study / "reports"

    # Selection summary percentages: ±0.01 against the oracle.
    expected_counts, expected_total = oracle_selection_summary(human, ItemKind.INGREDIENT)
    table = (reports / "selection_human_ingredient.csv").read_text().splitlines()
    rows = {line.split(",")[0]: line.split(",") for line in table[1:]}
    assert int(rows["Total"][1]) == expected_total
    for label, (count, pct) in expected_counts.items():
        cells = rows[label.value]
        assert int(cells[1]) == count
        assert abs(float(cells[2]) - 100.0 * count / expected_total) <= 0.01

    # A_m: ±0.001 against the oracle, read back from the emitted table.
    expected_am = oracle_model_accuracy(judge, human, {ItemKind.INGREDIENT})
    am_table = (reports / "model_accuracy_ingredients.csv").read_text().splitlines()
    model_row = next(line for line in am_table[1:] if line.startswith("repro-model"))
    emitted = float(model_row.split(",")[2])
    assert abs(emitted - expected_am) <= 0.001
    print("\nACCEPTANCE PASS: conditional reproduction from canonical dataset")
