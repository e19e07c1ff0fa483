import json
import sys
from pathlib import Path

# Make the test-helper modules (oracles, fixture_studies) importable.
sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_study_config(
    recipes=("koshari", "coleslaw"),
    k=2,
    seed=7,
    n_d=4,
    annotators=("a1", "a2"),
    per_annotator=4,
    overlap=4,
    task_classes=4,
):
    """Study config wired to the mock gateway and the fixture web corpus."""
    e2e = FIXTURES / "e2e"
    return {
        "study_id": "fixture-e2e",
        "recipe_names": list(recipes),
        "selected": list(recipes),
        "k": k,
        "prompt_type": 2,
        "seed": seed,
        "generator_model": "mock-gen",
        "extraction_model": "mock-extract",
        "gateway": {
            "kind": "mock",
            "mock_fixture": str(e2e / "mock_gateway.jsonl"),
            "mock_hashed_fallback": True,
        },
        "retrieval": {
            "engines": [
                {"id": "engine-a", "kind": "fixture", "fixture_file": str(e2e / "engine-a.json")},
                {"id": "engine-b", "kind": "fixture", "fixture_file": str(e2e / "engine-b.json")},
            ],
            "per_engine_count": 4,
            "n_d": n_d,
            "transport": {"kind": "directory", "root": str(FIXTURES / "web")},
        },
        "judge": {"models": ["mock-judge"], "task_classes": task_classes},
        "annotation": {
            "annotators": list(annotators),
            "per_annotator": per_annotator,
            "overlap": overlap,
        },
    }


def make_fixture_study(root: Path, **kwargs) -> Path:
    study = Path(root) / "study"
    study.mkdir(parents=True, exist_ok=True)
    (study / "config.json").write_text(
        json.dumps(fixture_study_config(**kwargs), indent=2), encoding="utf-8"
    )
    return study
