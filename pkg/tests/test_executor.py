import itertools

import pytest

from rulelens.executor import (
    EmptyBatch,
    EvalReport,
    LabelMismatch,
    TypeMismatch,
    UnknownFeature,
    WrongLabelKind,
    apply_explanation,
    batch_columns,
    clause_mask,
    condition_holds,
    coverage_precision,
    evaluate,
    faithfulness,
    simulatability,
)
from rulelens.lang import Comparator, Condition, Explanation, Quantifier, parse
from rulelens.schema import Example, FeatureSchema, FeatureSpec, LabelKind, LabeledBatch
from rulelens import rng as rngmod

from oracles import TruthTableInterpreter


def make_batch(schema, rows, labels, kind=LabelKind.PREDICTED, loi=None):
    examples = [Example(r) for r in rows]
    if loi is None:
        loi = next(y for y in labels if not y.startswith("not "))
    return LabeledBatch(schema, examples, labels, kind, loi, validate=False)


SCHEMA = FeatureSchema((
    FeatureSpec.numeric("pdsu", 900, 1100),
    FeatureSpec.categorical("hxva", ("africas", "europes")),
))


class TestConditionHolds:
    def test_leq_boundary(self):
        assert condition_holds(Condition("pdsu", Comparator.LEQ, 1014.0), Example({"pdsu": 1000.0}))

    def test_ngt_is_not_greater(self):
        assert condition_holds(Condition("pdsu", Comparator.NGT, 1020.0), Example({"pdsu": 1020.0}))

    def test_eq_mismatch(self):
        assert not condition_holds(
            Condition("hxva", Comparator.EQ, "africas"), Example({"hxva": "europes"})
        )

    def test_eq_coerces_numeric_text(self):
        assert condition_holds(Condition("bgbs", Comparator.EQ, 4.0), Example({"bgbs": "4"}))

    def test_unknown_feature(self):
        with pytest.raises(UnknownFeature):
            condition_holds(Condition("zzzz", Comparator.EQ, "a"), Example({"pdsu": 1.0}))

    def test_numeric_comparator_on_text(self):
        with pytest.raises(TypeMismatch):
            condition_holds(Condition("hxva", Comparator.GT, 3.0), Example({"hxva": "africas"}))

    @pytest.mark.parametrize("x", [0.0, 1.5, 3.0, 4.5])
    @pytest.mark.parametrize("t", [1.5, 3.0])
    def test_comparator_duality(self, x, t):
        ex = Example({"v": x})
        assert condition_holds(Condition("v", Comparator.NGT, t), ex) == condition_holds(
            Condition("v", Comparator.LEQ, t), ex
        )
        assert condition_holds(Condition("v", Comparator.NLT, t), ex) == condition_holds(
            Condition("v", Comparator.GEQ, t), ex
        )


class TestApplyExplanation:
    def test_seldom_inverts_direction(self):
        e = parse("If twqk equal to no, then it is seldom fem")
        v = apply_explanation(e, Example({"twqk": "no"}), "fem")
        assert v.applies and v.predicted_label == "not fem"

    def test_plain_rule_applies(self):
        e = parse("If vpgu equal to antartica, then blicket")
        v = apply_explanation(e, Example({"vpgu": "antartica"}), "blicket")
        assert v.applies and v.predicted_label == "blicket"

    def test_plain_rule_complement_branch(self):
        e = parse("If vpgu equal to antartica, then blicket")
        v = apply_explanation(e, Example({"vpgu": "asias"}), "blicket")
        assert not v.applies and v.predicted_label == "not blicket"

    def test_sometimes_ties_keep_stated_label(self):
        e = parse("If vpgu equal to antartica, then it is sometimes blicket")
        v = apply_explanation(e, Example({"vpgu": "antartica"}), "blicket")
        assert v.predicted_label == "blicket"

    def test_label_mismatch(self):
        e = parse("If vpgu equal to antartica, then blicket")
        with pytest.raises(LabelMismatch):
            apply_explanation(e, Example({"vpgu": "antartica"}), "tupa")


class TestTruthTableOracle:
    """Random explanations against full-enumeration brute force."""

    def test_agreement_on_small_categorical_spaces(self):
        rng = rngmod.substream(918273, 42)
        from rulelens.taskforge import all_descriptors, sample_explanation

        domains = {"aaaa": ["p", "q"], "bbbb": ["p", "q", "r"], "cccc": ["u", "v", "w"]}
        schema = FeatureSchema(tuple(
            FeatureSpec.categorical(n, tuple(vs)) for n, vs in domains.items()
        ))
        descriptors = all_descriptors()
        checked = 0
        for trial in range(500):
            descriptor = descriptors[int(rng.integers(0, len(descriptors)))]
            expl = sample_explanation(descriptor, schema, seed=int(rng.integers(0, 10**9)))
            oracle = TruthTableInterpreter(domains, expl.to_json(), expl.label)
            for combo in itertools.product(*domains.values()):
                values = dict(zip(domains, combo))
                got = apply_explanation(expl, Example(values), expl.label)
                assert got.predicted_label == oracle.predict(values)
                checked += 1
        assert checked == 500 * 18


class TestMetrics:
    def test_faithfulness_counts_matches(self):
        e = parse("If hxva equal to africas, then yes")
        rows = [{"pdsu": 1000.0, "hxva": h} for h in ("africas", "africas", "europes", "europes")]
        batch = make_batch(SCHEMA, rows, ["yes", "yes", "not yes", "yes"])
        assert faithfulness(e, batch) == 0.75

    def test_constant_complement_scores_zero(self):
        e = parse("If pdsu greater than 2000, then yes")  # never fires: predicts "not yes"
        rows = [{"pdsu": 1000.0, "hxva": "africas"}] * 3
        batch = make_batch(SCHEMA, rows, ["yes"] * 3)
        assert faithfulness(e, batch) == 0.0

    def test_wrong_label_kind(self):
        e = parse("If hxva equal to africas, then yes")
        rows = [{"pdsu": 1000.0, "hxva": "africas"}]
        gold = make_batch(SCHEMA, rows, ["yes"], kind=LabelKind.GOLD)
        with pytest.raises(WrongLabelKind):
            faithfulness(e, gold)
        predicted = make_batch(SCHEMA, rows, ["yes"], kind=LabelKind.PREDICTED)
        with pytest.raises(WrongLabelKind):
            simulatability(e, predicted)

    def test_empty_batch(self):
        e = parse("If hxva equal to africas, then yes")
        empty = LabeledBatch(SCHEMA, [], [], LabelKind.PREDICTED, "yes")
        with pytest.raises(EmptyBatch):
            faithfulness(e, empty)

    def test_single_matching_example(self):
        e = parse("If hxva equal to africas, then yes")
        batch = make_batch(
            SCHEMA, [{"pdsu": 1000.0, "hxva": "africas"}], ["yes"], kind=LabelKind.GOLD
        )
        assert simulatability(e, batch) == 1.0

    def test_random_guess_sits_at_half_on_balanced_batch(self):
        # labels drawn independently of the rule: the agreement rate is a
        # Binomial(1000, 0.5) mean, kept within three standard deviations
        rng = rngmod.substream(1234, 8)
        rows = [
            {"pdsu": float(rng.integers(900, 1101)), "hxva": ("africas", "europes")[rng.integers(0, 2)]}
            for _ in range(1000)
        ]
        labels = ["yes" if b else "not yes" for b in rng.random(1000) < 0.5]
        batch = make_batch(SCHEMA, rows, labels, kind=LabelKind.GOLD)
        e = parse("If pdsu greater than 1000, then yes")
        sigma = (0.25 / 1000) ** 0.5
        assert abs(simulatability(e, batch) - 0.5) <= 3 * sigma

    def test_coverage_precision_counting(self):
        e = parse("If pdsu greater than 1000, then yes")
        rows = [{"pdsu": 975.0 + 5 * i, "hxva": "africas"} for i in range(10)]
        labels = ["yes" if r["pdsu"] > 1000 else "not yes" for r in rows]
        batch = make_batch(SCHEMA, rows, labels)
        cov, prec = coverage_precision(e, batch)
        assert cov == 0.4 and prec == 1.0

    def test_zero_coverage_has_zero_precision(self):
        e = parse("If pdsu greater than 9999, then yes")
        rows = [{"pdsu": 1000.0, "hxva": "africas"}] * 4
        batch = make_batch(SCHEMA, rows, ["yes"] * 4)
        assert coverage_precision(e, batch) == (0.0, 0.0)

    def test_tautological_clause_has_full_coverage(self):
        e = parse("If pdsu greater than or equal to 900, then yes")
        rows = [{"pdsu": 900.0 + i, "hxva": "africas"} for i in range(5)]
        batch = make_batch(SCHEMA, rows, ["yes"] * 5)
        cov, _ = coverage_precision(e, batch)
        assert cov == 1.0


class TestMetricIdentity:
    def test_decomposition_holds_exactly(self):
        from rulelens.taskforge import all_descriptors, generate_task, sample_explanation

        rng = rngmod.substream(5150, 1)
        descriptors = all_descriptors()
        for trial in range(60):
            task = generate_task(
                descriptors[trial % len(descriptors)], 4, 30, 0, seed=1000 + trial
            )
            expl = sample_explanation(
                descriptors[int(rng.integers(0, 24))], task.schema,
                seed=int(rng.integers(0, 10**9)),
            )
            expl = Explanation(
                clause=expl.clause, quantifier=expl.quantifier,
                label=task.planted.label, label_negated=expl.label_negated,
            )
            batch = task.train
            faith = faithfulness(expl, batch)
            cov, prec = coverage_precision(expl, batch)
            off = [
                apply_explanation(expl, ex, batch.label_of_interest).predicted_label == y
                for ex, y in zip(batch.examples, batch.labels)
                if not apply_explanation(expl, ex, batch.label_of_interest).applies
            ]
            off_rate = sum(off) / len(off) if off else 0.0
            assert faith == pytest.approx(cov * prec + (1 - cov) * off_rate, abs=1e-12)

    def test_quantifier_direction_complement(self):
        rows = [{"pdsu": 950.0 + 10 * i, "hxva": ("africas", "europes")[i % 2]} for i in range(12)]
        labels = [("yes", "not yes")[i % 3 == 0] for i in range(12)]
        batch = make_batch(SCHEMA, rows, labels)
        base = Condition("pdsu", Comparator.LEQ, 1000.0)
        high = Explanation(clause=base, quantifier=Quantifier("usually"), label="yes")
        low = Explanation(clause=base, quantifier=Quantifier("seldom"), label="yes")
        assert faithfulness(high, batch) + faithfulness(low, batch) == pytest.approx(1.0)

    def test_comparator_duality_leaves_metrics_unchanged(self):
        rows = [{"pdsu": 940.0 + 11 * i, "hxva": "africas"} for i in range(10)]
        labels = [("yes", "not yes")[i % 2] for i in range(10)]
        batch = make_batch(SCHEMA, rows, labels)
        ngt = parse("If pdsu not greater than 1000, then yes")
        leq = parse("If pdsu lesser than or equal to 1000, then yes")
        assert faithfulness(ngt, batch) == faithfulness(leq, batch)
        assert coverage_precision(ngt, batch) == coverage_precision(leq, batch)


class TestVectorizedAgreesWithScalar:
    def test_clause_mask_matches_clause_holds(self):
        from rulelens.executor import clause_holds
        from rulelens.taskforge import all_descriptors, generate_task

        for seed in range(12):
            task = generate_task(all_descriptors()[seed % 24], 5, 25, 0, seed=seed)
            columns = batch_columns(task.schema, task.train.examples)
            mask = clause_mask(task.planted.clause, columns)
            scalar = [clause_holds(task.planted.clause, ex) for ex in task.train.examples]
            assert mask.tolist() == scalar


class TestEvalReport:
    def test_json_rounds_to_four_places(self):
        report = EvalReport(
            faithfulness=1 / 3, simulatability=2 / 3, coverage=1 / 7, precision=0.0
        )
        payload = report.to_json()
        assert payload == {
            "faithfulness": 0.3333,
            "simulatability": 0.6667,
            "coverage": 0.1429,
            "precision": 0.0,
        }

    def test_evaluate_bundles_metrics(self):
        e = parse("If hxva equal to africas, then yes")
        rows = [{"pdsu": 1000.0, "hxva": h} for h in ("africas", "europes")]
        batch = make_batch(SCHEMA, rows, ["yes", "not yes"])
        report = evaluate(e, predicted_batch=batch)
        assert report.faithfulness == 1.0
        assert report.simulatability is None
        assert 0.0 <= report.coverage <= 1.0
