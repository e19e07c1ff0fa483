import random
from datetime import datetime, timezone

import pytest

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
    IngredientScheme,
    ItemKind,
    TaskLabel,
    TaskScheme,
    ToolLabel,
)
from recipetrace.stats import (
    cohens_kappa,
    human_macro_accuracy,
    macro_kappa,
    model_accuracy,
    never_found_items,
    saturation_curve,
    selection_summary,
)

F = IngredientLabel.FOUND
FNP = IngredientLabel.FOUND_NOT_PERFECT
NF = IngredientLabel.NOT_FOUND

_TS = datetime(2025, 3, 1, tzinfo=timezone.utc)


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


class TestCohensKappa:
    def test_perfect_agreement_over_two_categories(self):
        assert cohens_kappa([F, NF, F], [F, NF, F]) == 1.0

    def test_worked_four_item_example(self):
        # observed 0.75, chance 0.5 -> kappa 0.5
        assert cohens_kappa([F, F, NF, NF], [F, NF, NF, NF]) == pytest.approx(0.5)

    def test_independent_sequences_have_near_zero_kappa(self):
        rng = random.Random(20250301)
        labels = [F, FNP, NF]
        a = [rng.choice(labels) for _ in range(100_000)]
        b = [rng.choice(labels) for _ in range(100_000)]
        assert -0.02 < cohens_kappa(a, b) < 0.02

    def test_constant_identical_sequences_define_kappa_one(self):
        assert cohens_kappa([F, F, F], [F, F, F]) == 1.0

    def test_empty_and_mismatched_inputs_rejected(self):
        with pytest.raises(ValueError):
            cohens_kappa([], [])
        with pytest.raises(ValueError):
            cohens_kappa([F], [F, NF])

    def test_matches_oracle_on_random_sequences(self):
        rng = random.Random(7)
        for _ in range(50):
            n = rng.randint(1, 40)
            a = [rng.choice([F, FNP, NF]) for _ in range(n)]
            b = [rng.choice([F, FNP, NF]) for _ in range(n)]
            try:
                expected = oracle_kappa(a, b)
            except AssertionError:
                continue
            assert cohens_kappa(a, b) == pytest.approx(expected, abs=1e-12)


class TestMacroKappa:
    def test_single_pair_single_recipe(self):
        records = [
            rec("a", "r1", "d1", 0, F),
            rec("b", "r1", "d1", 0, F),
            rec("a", "r1", "d1", 1, NF),
            rec("b", "r1", "d1", 1, NF),
        ]
        report = macro_kappa(records, {ItemKind.INGREDIENT})
        assert report.pair_count == 1
        assert report.macro_kappa == 1.0

    def test_macro_is_arithmetic_mean_of_pairs(self):
        rng = random.Random(11)
        human, _ = random_study_records(rng)
        report = macro_kappa(human, {ItemKind.INGREDIENT})
        expected = sum(p.kappa for p in report.pairs) / len(report.pairs)
        assert report.macro_kappa == pytest.approx(expected, abs=1e-15)

    def test_matches_oracle(self):
        rng = random.Random(13)
        human, _ = random_study_records(rng)
        expected_pairs, expected_macro = oracle_macro_kappa(human, {ItemKind.INGREDIENT})
        report = macro_kappa(human, {ItemKind.INGREDIENT})
        assert report.macro_kappa == pytest.approx(expected_macro, abs=1e-12)
        assert len(report.pairs) == len(expected_pairs)

    def test_task_fields_concatenate_into_one_sequence(self):
        kinds = (ItemKind.TASK_NAME, ItemKind.TOOL, ItemKind.INGREDIENT_LIST)
        records = []
        records.append(rec("a", "r1", "d1", 0, TaskLabel.TASK_FOUND, ItemKind.TASK_NAME))
        records.append(rec("b", "r1", "d1", 0, TaskLabel.TASK_FOUND, ItemKind.TASK_NAME))
        records.append(rec("a", "r1", "d1", 0, ToolLabel.FOUND, ItemKind.TOOL))
        records.append(rec("b", "r1", "d1", 0, ToolLabel.NOT_FOUND, ItemKind.TOOL))
        report = macro_kappa(records, set(kinds))
        # One pair with a 2-item concatenated sequence, not two pairs.
        assert report.pair_count == 1
        assert report.pairs[0].item_count == 2


class TestHumanAccuracy:
    def test_two_recipe_worked_example(self):
        # Pair agrees on 3 of 4 items in r1 and 1 of 2 in r2 -> 0.625.
        records = []
        labels_r1 = [(F, F), (F, F), (NF, NF), (F, NF)]
        for i, (la, lb) in enumerate(labels_r1):
            records.append(rec("a", "r1", "d1", i, la))
            records.append(rec("b", "r1", "d1", i, lb))
        labels_r2 = [(F, F), (NF, F)]
        for i, (la, lb) in enumerate(labels_r2):
            records.append(rec("a", "r2", "d2", i, la))
            records.append(rec("b", "r2", "d2", i, lb))
        report = human_macro_accuracy(records, {ItemKind.INGREDIENT})
        assert report.value == pytest.approx(0.625)

    def test_full_agreement_is_one(self):
        records = [
            rec("a", "r1", "d1", 0, F),
            rec("b", "r1", "d1", 0, F),
        ]
        assert human_macro_accuracy(records, {ItemKind.INGREDIENT}).value == 1.0

    def test_matches_oracle(self):
        rng = random.Random(17)
        human, _ = random_study_records(rng)
        expected = oracle_human_accuracy(human, {ItemKind.INGREDIENT})
        report = human_macro_accuracy(human, {ItemKind.INGREDIENT})
        assert report.value == pytest.approx(expected, abs=1e-12)


class TestModelAccuracy:
    def test_model_matching_everything_scores_one(self):
        human = [rec("a", "r1", "d1", 0, F), rec("a", "r1", "d1", 1, NF)]
        judge = [rec("m", "r1", "d1", 0, F), rec("m", "r1", "d1", 1, NF)]
        assert model_accuracy(judge, human, {ItemKind.INGREDIENT}).value == 1.0

    def test_three_of_four_matches(self):
        human = [rec("a", "r1", "d1", i, F) for i in range(4)]
        judge = [rec("m", "r1", "d1", i, F if i < 3 else NF) for i in range(4)]
        assert model_accuracy(judge, human, {ItemKind.INGREDIENT}).value == 0.75

    def test_either_annotator_rule_counts_pair_once(self):
        human = []
        judge = []
        for i in range(10):
            # Humans disagree on items 0-3; the model sides with annotator b.
            label_a = F if i < 4 else NF
            label_b = NF
            human.append(rec("a", "r1", "d1", i, label_a))
            human.append(rec("b", "r1", "d1", i, label_b))
            judge.append(rec("m", "r1", "d1", i, NF))
        report = model_accuracy(judge, human, {ItemKind.INGREDIENT})
        assert report.value == 1.0
        assert report.per_recipe[0].total == 10

    def test_merge_applied_before_comparison(self):
        human = [rec("a", "r1", "d1", 0, IngredientLabel.IMPLIED)]
        judge = [rec("m", "r1", "d1", 0, NF)]
        three = model_accuracy(
            judge, human, {ItemKind.INGREDIENT}, ingredient_scheme=IngredientScheme.THREE_CLASS
        )
        assert three.value == 1.0
        four = model_accuracy(
            judge, human, {ItemKind.INGREDIENT}, ingredient_scheme=IngredientScheme.FOUR_CLASS
        )
        assert four.value == 0.0

    def test_two_class_task_merge(self):
        human = [rec("a", "r1", "d1", 0, TaskLabel.TASK_FOUND_NOT_EXACT_WORDING, ItemKind.TASK_NAME)]
        judge = [rec("m", "r1", "d1", 0, TaskLabel.TASK_FOUND, ItemKind.TASK_NAME)]
        merged = model_accuracy(
            judge, human, {ItemKind.TASK_NAME}, task_scheme=TaskScheme.TWO_CLASS
        )
        assert merged.value == 1.0

    def test_matches_oracle(self):
        rng = random.Random(19)
        human, judge = random_study_records(rng)
        expected = oracle_model_accuracy(judge, human, {ItemKind.INGREDIENT})
        report = model_accuracy(judge, human, {ItemKind.INGREDIENT})
        assert report.value == pytest.approx(expected, abs=1e-12)


class TestSelectionSummary:
    def test_simple_percentages(self):
        records = [rec("a", "r1", "d1", i, F if i < 4 else NF) for i in range(10)]
        summary = selection_summary(records, ItemKind.INGREDIENT)
        by_label = {row.label: row for row in summary.rows}
        assert by_label[F].count == 4
        assert by_label[F].percentage == 40.00
        assert summary.total == 10

    def test_empty_input_gives_empty_table(self):
        summary = selection_summary([], ItemKind.INGREDIENT)
        assert summary.rows == ()
        assert summary.total == 0

    def test_percentages_sum_to_one_hundred(self):
        rng = random.Random(23)
        human, _ = random_study_records(rng)
        summary = selection_summary(human, ItemKind.INGREDIENT)
        assert sum(r.percentage for r in summary.rows) == pytest.approx(100.0, abs=0.02)

    def test_matches_oracle(self):
        rng = random.Random(29)
        human, _ = random_study_records(rng)
        expected, total = oracle_selection_summary(human, ItemKind.INGREDIENT)
        summary = selection_summary(human, ItemKind.INGREDIENT)
        assert summary.total == total
        for row in summary.rows:
            count, pct = expected.get(row.label, (0, 0.0))
            assert row.count == count
            if count:
                assert row.percentage == pct


class TestNeverFound:
    def test_item_found_once_is_excluded(self):
        records = [
            rec("a", "r1", "d1", 0, F),
            rec("a", "r1", "d2", 0, NF),
            rec("a", "r1", "d1", 1, NF),
        ]
        out = never_found_items(records, ItemKind.INGREDIENT, F)
        assert [(i.recipe, i.item_ordinal) for i in out] == [("r1", 1)]

    def test_count_breakdown_for_never_found_item(self):
        # 26 found-not-perfect and 1 not-found selections, never found.
        records = []
        for i in range(26):
            records.append(rec(f"a{i % 3}", "Koshari", f"d{i}", 5, FNP))
        records.append(rec("a0", "Koshari", "d26", 5, NF))
        out = never_found_items(
            records,
            ItemKind.INGREDIENT,
            F,
            item_names=lambda r, k, o: "green lentils",
        )
        assert len(out) == 1
        assert out[0].item == "green lentils"
        assert out[0].label_counts[FNP] == 26
        assert out[0].label_counts[NF] == 1

    def test_all_found_yields_empty_list(self):
        records = [rec("a", "r1", "d1", i, F) for i in range(3)]
        assert never_found_items(records, ItemKind.INGREDIENT, F) == []

    def test_matches_oracle(self):
        rng = random.Random(31)
        human, _ = random_study_records(rng)
        expected = oracle_never_found(human, ItemKind.INGREDIENT, F)
        out = never_found_items(human, ItemKind.INGREDIENT, F)
        assert {(i.recipe, i.item_ordinal) for i in out} == set(expected)


class TestSaturation:
    def test_single_document_all_found(self):
        records = [rec("m", "r1", "d1", i, F) for i in range(3)]
        curve = saturation_curve(records, ItemKind.INGREDIENT, {F})
        assert curve.points == ((1, 100.0),)

    def test_two_document_worked_example(self):
        records = [
            rec("m", "r1", "d1", 0, NF),
            rec("m", "r1", "d2", 0, F),
        ]
        curve = saturation_curve(records, ItemKind.INGREDIENT, {F})
        assert curve.points[0] == (1, pytest.approx(50.0))
        assert curve.points[1] == (2, pytest.approx(100.0))

    def test_incomplete_coverage_error_lists_missing_pairs(self):
        records = [
            rec("m", "r1", "d1", 0, F),
            rec("m", "r1", "d2", 0, F),
            rec("m", "r1", "d1", 1, F),
        ]
        from recipetrace.stats import IncompleteCoverageError

        with pytest.raises(IncompleteCoverageError) as err:
            saturation_curve(records, ItemKind.INGREDIENT, {F})
        assert err.value.missing == [("r1", 1, "d2")]

    def test_exact_mode_matches_enumeration_oracle(self):
        rng = random.Random(37)
        for _ in range(10):
            _, judge = random_study_records(rng, max_docs=5, max_items=6)
            expected = oracle_saturation_exact(judge, ItemKind.INGREDIENT, {F, FNP})
            curve = saturation_curve(judge, ItemKind.INGREDIENT, {F, FNP})
            assert len(curve.points) == len(expected)
            for (n1, p1), (n2, p2) in zip(curve.points, expected):
                assert n1 == n2
                assert p1 == pytest.approx(p2, abs=1e-12)

    def test_sampled_mode_is_seeded_and_near_exact(self):
        rng = random.Random(43)
        _, judge = random_study_records(rng, max_docs=5, max_items=6)
        sampled1 = saturation_curve(
            judge, ItemKind.INGREDIENT, {F}, mode="sampled", sample_count=200, seed=9
        )
        sampled2 = saturation_curve(
            judge, ItemKind.INGREDIENT, {F}, mode="sampled", sample_count=200, seed=9
        )
        assert sampled1.points == sampled2.points
        exact = saturation_curve(judge, ItemKind.INGREDIENT, {F})
        for (_, sampled_pct), (_, exact_pct) in zip(sampled1.points, exact.points):
            assert sampled_pct == pytest.approx(exact_pct, abs=15.0)


class TestCreativity:
    def creativity(self, records, nonsense=frozenset()):
        from recipetrace.stats import creativity_report

        return creativity_report(
            records,
            ItemKind.INGREDIENT,
            {F, FNP},
            set(nonsense),
            item_names=lambda r, k, o: f"item-{o}",
        )

    def test_not_found_everywhere_and_unflagged_is_creative(self):
        records = [rec("m", "r1", f"d{i}", 0, NF) for i in range(3)]
        report = self.creativity(records)
        assert [i.item for i in report.creative_items()] == ["item-0"]

    def test_flagged_nonsense_excluded(self):
        records = [rec("m", "r1", f"d{i}", 0, NF) for i in range(3)]
        report = self.creativity(records, nonsense={("r1", 0)})
        assert report.creative_items() == ()
        assert report.items[0].status == "nonsense"

    def test_found_in_targeted_document_cites_it(self):
        records = [rec("m", "r1", f"d{i}", 0, NF) for i in range(3)]
        # A targeted re-search document carrying the item joins the stream.
        records.append(rec("m", "r1", "targeted-doc", 0, FNP))
        report = self.creativity(records)
        assert report.creative_items() == ()
        assert report.items[0].status == "found"
        assert report.items[0].found_documents == ("targeted-doc",)
