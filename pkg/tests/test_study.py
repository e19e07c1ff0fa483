import json

import pytest

from conftest import make_fixture_study
from recipetrace.study import (
    OrderingError,
    StalenessError,
    StudyLock,
    StudyLocked,
    StudyService,
)
from recipetrace.study.stages import StageOverrides

PIPELINE = ["generate", "parse", "retrieve", "extract", "judge", "stats"]


class TestStageOrdering:
    def test_stats_before_judge_names_judge(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        with pytest.raises(OrderingError) as err:
            service.run_stage("stats")
        assert "judge" in str(err.value)

    def test_extract_before_retrieve_names_retrieve(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        with pytest.raises(OrderingError, match="retrieve"):
            service.run_stage("extract")

    def test_full_pipeline_completes(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        for stage in PIPELINE:
            result = service.run_stage(stage)
            assert result["status"] == "completed", stage
        reports = service.study_dir / "reports"
        assert any(reports.glob("selection_*.csv"))


class TestIdempotencyAndStaleness:
    def test_rerun_unchanged_stage_is_noop(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        service.run_stage("generate")
        manifest_before = (service.study_dir / "manifest.json").read_text()
        result = service.run_stage("generate")
        assert result["status"] == "skipped"
        assert (service.study_dir / "manifest.json").read_text() == manifest_before

    def test_force_reruns(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        service.run_stage("generate")
        assert service.run_stage("generate", force=True)["status"] == "completed"

    def test_stale_upstream_detected_with_digest_diff(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        service.run_stage("generate")
        service.run_stage("parse")
        # Tamper with a generation output after completion.
        victim = next((service.study_dir / "generation").glob("*/candidate_v1.txt"))
        victim.write_text("tampered", encoding="utf-8")
        with pytest.raises(StalenessError) as err:
            service.run_stage("retrieve")
        assert err.value.recorded != err.value.current

    def test_config_change_invalidates_freshness(self, tmp_path):
        study = make_fixture_study(tmp_path)
        service = StudyService(study)
        service.run_stage("generate")
        result = service.run_stage("generate", overrides=StageOverrides(seed=999))
        assert result["status"] == "completed"  # different inputs, rerun


class TestLock:
    def test_concurrent_invocation_blocked(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        with StudyLock(service.study_dir):
            with pytest.raises(StudyLocked):
                service.run_stage("generate")

    def test_lock_released_after_run(self, tmp_path):
        service = StudyService(make_fixture_study(tmp_path))
        service.run_stage("generate")
        assert not (service.study_dir / ".lock").exists()


class TestResume:
    def test_new_service_instance_resumes_from_manifest(self, tmp_path):
        study = make_fixture_study(tmp_path)
        first = StudyService(study)
        for stage in ["generate", "parse", "retrieve"]:
            first.run_stage(stage)
        # A fresh instance (interrupted study) continues where it stopped.
        second = StudyService(study)
        assert second.run_stage("generate")["status"] == "skipped"
        assert second.run_stage("extract")["status"] == "completed"

    def test_generated_outputs_are_stable_snapshots(self, tmp_path):
        study = make_fixture_study(tmp_path)
        service = StudyService(study)
        for stage in ["generate", "retrieve"]:
            service.run_stage(stage)
        snapshots = sorted((study / "snapshots").rglob("*.html"))
        before = [p.read_bytes() for p in snapshots]
        service.run_stage("retrieve", force=True)
        after = [p.read_bytes() for p in sorted((study / "snapshots").rglob("*.html"))]
        assert before == after


class TestStandaloneStats:
    def test_stats_over_explicit_files_bypasses_manifest(self, tmp_path):
        study = make_fixture_study(tmp_path / "full")
        service = StudyService(study)
        for stage in PIPELINE:
            service.run_stage(stage)
        judge_file = next((study / "judge").glob("decisions.*.jsonl"))

        other = StudyService(make_fixture_study(tmp_path / "standalone"))
        result = other.run_stage(
            "stats", overrides=StageOverrides(judge_files=[judge_file])
        )
        assert result["status"] == "completed"
        assert (other.study_dir / "reports").is_dir()
        # The manifest stays untouched: pipeline ordering still applies.
        with pytest.raises(OrderingError):
            other.run_stage("stats")

    def test_judge_not_filled_in_counts_match_structural_fields(self, tmp_path):
        study = make_fixture_study(tmp_path)
        service = StudyService(study)
        for stage in PIPELINE:
            service.run_stage(stage)
        tool_summary = (
            service.study_dir / "reports" / "selection_mock-judge_tool.csv"
        ).read_text()
        assert "Not filled in" in tool_summary


def _write_lines(path, rows):
    import json as _json

    path.write_text("\n".join(_json.dumps(r) for r in rows) + "\n", encoding="utf-8")


class TestExtractionBackfill:
    def test_invalid_document_backfilled_from_next_ranked(self, tmp_path):
        import shutil
        from conftest import FIXTURES, fixture_study_config

        # Web root: a recipe-less page ranked first, then the four real docs.
        web = tmp_path / "web"
        (web / "koshari").mkdir(parents=True)
        for doc in ["doc1.html", "doc2.html", "doc3.html", "doc4.html"]:
            shutil.copy(FIXTURES / "web" / "koshari" / doc, web / "koshari" / doc)
        (web / "koshari" / "nothing.html").write_text(
            "<html><head><title>Totally Unrelated Page</title></head>"
            "<body><p>Totally Unrelated Page about stamps.</p></body></html>",
            encoding="utf-8",
        )

        mock = tmp_path / "mock.jsonl"
        base_rules = (FIXTURES / "e2e" / "mock_gateway.jsonl").read_text().splitlines()
        extra = json.dumps(
            {
                "op": "complete",
                "match": "contains",
                "key": "Totally Unrelated Page",
                "text": "<recipe><ingredients></ingredients><tasks></tasks></recipe>",
            }
        )
        mock.write_text("\n".join([extra] + base_rules) + "\n", encoding="utf-8")

        engine = tmp_path / "engine.json"
        engine.write_text(
            json.dumps(
                {
                    "koshari recipe": [
                        "https://web.test/koshari/nothing.html",
                        "https://web.test/koshari/doc1.html",
                        "https://web.test/koshari/doc2.html",
                        "https://web.test/koshari/doc3.html",
                        "https://web.test/koshari/doc4.html",
                    ]
                }
            ),
            encoding="utf-8",
        )

        config = fixture_study_config(recipes=("koshari",), n_d=3)
        config["gateway"]["mock_fixture"] = str(mock)
        config["retrieval"]["engines"] = [
            {"id": "engine-x", "kind": "fixture", "fixture_file": str(engine)}
        ]
        config["retrieval"]["per_engine_count"] = 5
        config["retrieval"]["transport"] = {"kind": "directory", "root": str(web)}
        study = tmp_path / "study"
        study.mkdir()
        (study / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")

        service = StudyService(study)
        for stage in ["generate", "parse", "retrieve", "extract"]:
            service.run_stage(stage)

        index = json.loads((study / "extracted" / "index.json").read_text())
        entries = {e["document_id"]: e for e in index["koshari"]}
        assert len(entries) == 5
        invalid = [e for e in index["koshari"] if e["valid"] is False]
        assert len(invalid) == 1
        assert "no ingredients" in invalid[0]["reason"]
        used = [e for e in index["koshari"] if e["used"]]
        assert len(used) == 3  # target met by backfilling past the bad page
        beyond = [e for e in index["koshari"] if e["reason"] == "beyond target"]
        assert len(beyond) == 1


class TestGenerationExclusion:
    def test_recipe_with_no_passing_candidate_excluded_with_reason(self, tmp_path):
        from conftest import fixture_study_config

        mock = tmp_path / "mock.jsonl"
        _write_lines(
            mock,
            [
                {
                    "op": "complete",
                    "match": "contains",
                    "key": "making koshari",
                    "text": "I don't know how to make this, could you send the steps?",
                }
            ],
        )
        config = fixture_study_config(recipes=("koshari",))
        config["gateway"]["mock_fixture"] = str(mock)
        study = tmp_path / "study"
        study.mkdir()
        (study / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")

        service = StudyService(study)
        result = service.run_stage("generate")
        assert result["details"]["chosen"] == 0
        assert result["details"]["excluded"] == 1
        exclusions = [
            json.loads(line)
            for line in (study / "generation" / "exclusions.jsonl")
            .read_text()
            .splitlines()
        ]
        assert exclusions[0]["recipe"] == "koshari"
        assert "no candidate passed screening" in exclusions[0]["reason"]
        # Downstream parse completes with nothing to do.
        assert service.run_stage("parse")["details"]["parsed"] == 0


class TestJudgeVariants:
    def test_two_judge_models_emit_per_model_reports(self, tmp_path):
        study = make_fixture_study(tmp_path)
        service = StudyService(study)
        for stage in ["generate", "parse", "retrieve", "extract"]:
            service.run_stage(stage)
        service.run_stage(
            "judge", overrides=StageOverrides(models=["mock-judge", "other-judge"])
        )
        decisions = sorted((study / "judge").glob("decisions.*.jsonl"))
        assert [p.name for p in decisions] == [
            "decisions.mock-judge.jsonl",
            "decisions.other-judge.jsonl",
        ]
        service.run_stage(
            "stats", overrides=StageOverrides(models=["mock-judge", "other-judge"])
        )
        reports = service.study_dir / "reports"
        assert (reports / "selection_mock-judge_ingredient.csv").is_file()
        assert (reports / "selection_other-judge_ingredient.csv").is_file()

    def test_two_class_task_pipeline(self, tmp_path):
        study = make_fixture_study(tmp_path, task_classes=2)
        service = StudyService(study)
        for stage in PIPELINE:
            service.run_stage(stage)
        table = (
            service.study_dir / "reports" / "selection_mock-judge_task.csv"
        ).read_text()
        # Two-class judging: only the representative labels appear.
        rows = {line.split(",")[0]: line for line in table.splitlines()[1:]}
        assert int(rows["Task Found (Not Exact Wording)"].split(",")[1]) == 0
        assert int(rows["Task Found (Wrong Context)"].split(",")[1]) == 0
        assert (
            int(rows["Task Found"].split(",")[1])
            + int(rows["Task Not Found"].split(",")[1])
            == int(rows["Total"].split(",")[1])
        )


class TestClassSchemeWiring:
    def test_ingredient_classes_override_changes_am(self, tmp_path):
        import json as _json
        from datetime import datetime, timezone

        from recipetrace.core import AnnotationRecord, IngredientLabel, ItemKind

        ts = datetime(2025, 3, 1, tzinfo=timezone.utc)
        human = AnnotationRecord(
            annotator="a1", recipe="r1", document_id="d1",
            item_kind=ItemKind.INGREDIENT, item_ordinal=0,
            label=IngredientLabel.IMPLIED, timestamp=ts,
        )
        judge = AnnotationRecord(
            annotator="m1", recipe="r1", document_id="d1",
            item_kind=ItemKind.INGREDIENT, item_ordinal=0,
            label=IngredientLabel.NOT_FOUND, timestamp=ts,
        )
        records = tmp_path / "human.jsonl"
        records.write_text(human.to_json_line() + "\n", encoding="utf-8")
        decisions = tmp_path / "judge.jsonl"
        row = judge.to_dict()
        row.update({"scores": {}, "margin": None})
        decisions.write_text(_json.dumps(row) + "\n", encoding="utf-8")

        def accuracy_with(classes):
            service = StudyService(make_fixture_study(tmp_path / f"c{classes}"))
            result = service.run_stage(
                "stats",
                overrides=StageOverrides(
                    records_files=[records],
                    judge_files=[decisions],
                    ingredient_classes=classes,
                ),
            )
            return result["details"]["model_accuracy"]["m1/ingredients"]

        # Three-class folds Implied into Not found: the judge matches.
        assert accuracy_with(3) == 1.0
        assert accuracy_with(4) == 0.0


class TestOriginTags:
    def test_labeled_name_parses_into_text_and_tag(self):
        from recipetrace.study.config import parse_recipe_label

        name = parse_recipe_label("koshari (Egyptian cuisine)")
        assert name.text == "koshari"
        assert name.origin_tag == "Egyptian cuisine"
        plain = parse_recipe_label("coleslaw")
        assert plain.origin_tag is None

    def test_duplicate_recipe_texts_rejected(self, tmp_path):
        from recipetrace.study.config import StudySettings

        with pytest.raises(ValueError, match="unique"):
            StudySettings(
                recipe_names=["koshari (Egyptian cuisine)", "koshari"],
                selected=["koshari (Egyptian cuisine)", "koshari"],
            )

    def test_tagged_config_name_flows_through_pipeline(self, tmp_path):
        config = json.loads(json.dumps(__import__("conftest").fixture_study_config(recipes=("koshari",))))
        config["recipe_names"] = ["koshari (Egyptian cuisine)", "coleslaw"]
        config["selected"] = ["koshari (Egyptian cuisine)"]
        study = tmp_path / "study"
        study.mkdir()
        (study / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
        service = StudyService(study)
        for stage in ["generate", "parse", "retrieve"]:
            service.run_stage(stage)
        chosen = json.loads((study / "generation" / "koshari" / "chosen.json").read_text())
        assert chosen["recipe"] == "koshari"
        assert chosen["origin_tag"] == "Egyptian cuisine"
        # Retrieval searched under the plain dish name.
        results = json.loads((study / "retrieval" / "results.json").read_text())
        assert "koshari" in results


def test_retrieval_shortfall_recorded(tmp_path):
    # Target six documents per recipe while the engines only know four.
    study = make_fixture_study(tmp_path, n_d=6)
    service = StudyService(study)
    service.run_stage("generate")
    service.run_stage("retrieve")
    shortfalls = [
        json.loads(line)
        for line in (study / "retrieval" / "shortfalls.jsonl").read_text().splitlines()
    ]
    assert {s["recipe"] for s in shortfalls} == {"koshari", "coleslaw"}
    assert all(s["fetched_ok"] == 4 and s["target"] == 6 for s in shortfalls)
