"""CSV emission for the analysis report tables."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..core import IngredientLabel, ItemKind, TaskLabel, ToolLabel
from .accuracy import AccuracyReport
from .agreement import AgreementReport
from .saturation import SaturationCurve
from .summaries import CreativityReport, NeverFoundItem, SelectionSummary

# Item column title and short count headers for the never-found tables.
NEVER_FOUND_ITEM_TITLE: dict[ItemKind, str] = {
    ItemKind.INGREDIENT: "Ingredient Name",
    ItemKind.TASK_NAME: "Task",
    ItemKind.TOOL: "Tool",
    ItemKind.INGREDIENT_LIST: "Ingredients",
}

NEVER_FOUND_COLUMNS: dict[ItemKind, list] = {
    ItemKind.INGREDIENT: [
        ("FNP", IngredientLabel.FOUND_NOT_PERFECT),
        ("NF", IngredientLabel.NOT_FOUND),
    ],
    ItemKind.TASK_NAME: [
        ("TFNEW", TaskLabel.TASK_FOUND_NOT_EXACT_WORDING),
        ("TNF", TaskLabel.TASK_NOT_FOUND),
        ("TFWC", TaskLabel.TASK_FOUND_WRONG_CONTEXT),
    ],
    ItemKind.TOOL: [
        ("FNE", ToolLabel.FOUND_NOT_EXACT),
        ("NF", ToolLabel.NOT_FOUND),
        ("TI", ToolLabel.TOOL_IMPLIED),
    ],
}


def _csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def selection_summary_csv(summary: SelectionSummary) -> str:
    rows: list[list] = [["Selection", "Count", "Percentage"]]
    for row in summary.rows:
        rows.append([row.label.value, row.count, f"{row.percentage:.2f}"])
    rows.append(["Total", summary.total, "100.00" if summary.total else "0.00"])
    return _csv_text(rows)


def never_found_csv(items: list[NeverFoundItem], item_kind: ItemKind) -> str:
    columns = NEVER_FOUND_COLUMNS.get(item_kind, [])
    header = ["Recipe", NEVER_FOUND_ITEM_TITLE[item_kind]] + [s for s, _ in columns]
    rows: list[list] = [header]
    for item in items:
        rows.append(
            [item.recipe, item.item]
            + [item.label_counts.get(label, 0) for _, label in columns]
        )
    return _csv_text(rows)


def agreement_csv(report: AgreementReport) -> str:
    rows: list[list] = [["Recipe", "AnnotatorA", "AnnotatorB", "Items", "Kappa"]]
    for pair in report.pairs:
        rows.append(
            [pair.recipe, pair.annotator_a, pair.annotator_b, pair.item_count, f"{pair.kappa:.6f}"]
        )
    rows.append(["Macro", "", "", report.pair_count, f"{report.macro_kappa:.6f}"])
    return _csv_text(rows)


def human_accuracy_csv(report: AccuracyReport) -> str:
    rows: list[list] = [["AnnotatorA", "AnnotatorB", "Recipe", "Matched", "Total", "Ratio"]]
    for pair in report.pairs:
        for ratio in pair.recipes:
            rows.append(
                [
                    pair.annotator_a,
                    pair.annotator_b,
                    ratio.recipe,
                    ratio.matched,
                    ratio.total,
                    f"{ratio.ratio:.6f}",
                ]
            )
        rows.append([pair.annotator_a, pair.annotator_b, "PairMean", "", "", f"{pair.value:.6f}"])
    rows.append(["Macro", "", "", "", "", f"{report.value:.6f}"])
    return _csv_text(rows)


def model_accuracy_csv(reports: list[tuple[str, str, AccuracyReport]]) -> str:
    """Rows of (annotation model, extraction model, accuracy)."""
    rows: list[list] = [["Annotation Model", "Extraction Model", "Accuracy"]]
    for annotation_model, extraction_model, report in reports:
        rows.append([annotation_model, extraction_model, f"{report.value:.6f}"])
    return _csv_text(rows)


def task_accuracy_csv(reports: list[tuple[str, AccuracyReport]]) -> str:
    """Task-name accuracy table: one extraction set, so no extractor column."""
    rows: list[list] = [["Annotation Model", "Accuracy"]]
    for annotation_model, report in reports:
        rows.append([annotation_model, f"{report.value:.6f}"])
    return _csv_text(rows)


def saturation_csv(curve: SaturationCurve) -> str:
    rows: list[list] = [["n", "percentage"]]
    for n, pct in curve.points:
        rows.append([n, f"{pct:.6f}"])
    return _csv_text(rows)


def saturation_gnuplot(curve: SaturationCurve) -> str:
    lines = [f"# {curve.item_kind.value} saturation, mode={curve.mode}"]
    lines += [f"{n}\t{pct:.6f}" for n, pct in curve.points]
    return "\n".join(lines) + "\n"


def creativity_csv(report: CreativityReport) -> str:
    rows: list[list] = [["Recipe", "Item", "Status", "FoundDocuments"]]
    for item in report.items:
        rows.append(
            [item.recipe, item.item, item.status, ";".join(item.found_documents)]
        )
    return _csv_text(rows)


def write_report(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
