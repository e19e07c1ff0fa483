"""Command line entry point: thin client over the study service layer."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .study import OrderingError, StalenessError, StudyLocked, StudyService
from .study.stages import StageOverrides


@click.group()
def main() -> None:
    """Trace generated recipe ingredients and steps back to web documents."""


def common_options(fn):
    fn = click.option("--study", required=True, type=click.Path(path_type=Path))(fn)
    fn = click.option("--config", type=click.Path(exists=True, path_type=Path))(fn)
    fn = click.option("--force", is_flag=True, default=False)(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    return fn


def _run(stage: str, study: Path, config: Path | None, force: bool, overrides: StageOverrides):
    service = StudyService(study, config)
    try:
        result = service.run_stage(stage, force=force, overrides=overrides)
    except (OrderingError, StalenessError, StudyLocked) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps(result, ensure_ascii=False, indent=2))


@main.command()
@common_options
@click.option("--k", type=int, default=None)
@click.option("--prompt-type", type=click.IntRange(1, 5), default=None)
def generate(study, config, force, seed, k, prompt_type):
    """Produce and screen K candidates per recipe, choose the best."""
    _run("generate", study, config, force, StageOverrides(seed=seed, k=k, prompt_type=prompt_type))


@main.command()
@common_options
def parse(study, config, force, seed):
    """Parse the chosen recipes into ingredient and task structures."""
    _run("parse", study, config, force, StageOverrides(seed=seed))


@main.command()
@common_options
@click.option("--nd", type=int, default=None)
def retrieve(study, config, force, seed, nd):
    """Search the engines and snapshot candidate documents."""
    _run("retrieve", study, config, force, StageOverrides(seed=seed, nd=nd))


@main.command()
@common_options
@click.option("--nd", type=int, default=None)
def extract(study, config, force, seed, nd):
    """Extract ingredient and task lists from snapshotted documents."""
    _run("extract", study, config, force, StageOverrides(seed=seed, nd=nd))


@main.command()
@common_options
@click.option("--model", "models", multiple=True)
@click.option("--classes", type=click.Choice(["3", "4"]), default=None)
@click.option("--task-classes", type=click.Choice(["2", "4"]), default=None)
def judge(study, config, force, seed, models, classes, task_classes):
    """Annotate every item against every document with model judges."""
    _run(
        "judge",
        study,
        config,
        force,
        StageOverrides(
            seed=seed,
            models=list(models),
            ingredient_classes=int(classes) if classes else None,
            task_classes=int(task_classes) if task_classes else None,
        ),
    )


@main.command()
@common_options
@click.option("--model", "models", multiple=True)
@click.option("--classes", type=click.Choice(["3", "4"]), default=None)
@click.option("--task-classes", type=click.Choice(["2", "4"]), default=None)
@click.option("--figures", is_flag=True, default=False)
@click.option("--records", "records_files", multiple=True, type=click.Path(exists=True, path_type=Path))
@click.option("--judge-records", "judge_files", multiple=True, type=click.Path(exists=True, path_type=Path))
def stats(study, config, force, seed, models, classes, task_classes, figures, records_files, judge_files):
    """Compute agreement, accuracy, summaries, saturation and creativity.

    With --records/--judge-records, statistics are computed for those
    canonical record files directly, bypassing the pipeline manifest.
    """
    _run(
        "stats",
        study,
        config,
        force,
        StageOverrides(
            seed=seed,
            models=list(models),
            ingredient_classes=int(classes) if classes else None,
            task_classes=int(task_classes) if task_classes else None,
            figures=figures,
            records_files=list(records_files),
            judge_files=list(judge_files),
        ),
    )


@main.command()
@common_options
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--ui-dist", type=click.Path(path_type=Path), default=None)
def serve(study, config, force, seed, host, port, ui_dist):
    """Serve the annotation API and UI for human annotators."""
    import uvicorn

    from .service import create_app

    service = StudyService(study, config)
    try:
        service.check_serve_ready()
    except OrderingError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    app = create_app(study, config, ui_dist=ui_dist)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
