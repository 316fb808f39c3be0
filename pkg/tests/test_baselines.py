import sys
import textwrap

import pytest

from rulelens.baselines import (
    AnchorsResult,
    Budget,
    BudgetExhausted,
    ClassifierHandle,
    SubprocessOracle,
    anchors_budgeted,
    lime_budgeted,
    perturb_example,
)
from rulelens.executor import coverage_precision, faithfulness
from rulelens.lang import clause_conditions
from rulelens.schema import Example, FeatureSchema, FeatureSpec, LabelKind, LabeledBatch
from rulelens import rng as rngmod

SCHEMA = FeatureSchema((
    FeatureSpec.categorical("f1", ("a", "b", "c")),
    FeatureSpec.categorical("f2", ("u", "v")),
    FeatureSpec.numeric("f3", 0, 100),
))


def rule_classifier(example: Example) -> str:
    return "pos" if example["f1"] == "a" else "not pos"


def random_examples(n, seed=0):
    rng = rngmod.substream(seed, 33)
    out = []
    for _ in range(n):
        out.append(Example({
            "f1": ("a", "b", "c")[rng.integers(0, 3)],
            "f2": ("u", "v")[rng.integers(0, 2)],
            "f3": float(rng.integers(0, 101)),
        }))
    return out


class TestBudget:
    def test_spend_within_limit(self):
        b = Budget(limit=3)
        b.spend(2)
        assert b.used == 2 and b.remaining == 1

    def test_exhaustion_raises_and_preserves_count(self):
        b = Budget(limit=2)
        b.spend(2)
        with pytest.raises(BudgetExhausted):
            b.spend(1)
        assert b.used == 2  # the failed call was never counted

    def test_handle_meters_every_predict(self):
        b = Budget(limit=5)
        handle = ClassifierHandle(rule_classifier, b)
        for ex in random_examples(5):
            handle.predict(ex)
        assert b.used == 5 == handle.calls
        with pytest.raises(BudgetExhausted):
            handle.predict(random_examples(1)[0])
        assert b.used == 5


class TestLime:
    def test_known_rule_dominates_weights(self):
        budget = Budget(limit=200)
        attribution = lime_budgeted(
            random_examples(20, seed=1), rule_classifier, budget, 10, SCHEMA, "pos", seed=4
        )
        importance = attribution.feature_importance()
        assert importance["f1"] > importance["f2"]
        assert importance["f1"] > importance["f3"]

    def test_budget_spend_is_exact(self):
        budget = Budget(limit=15)
        lime_budgeted(random_examples(10), rule_classifier, budget, 1, SCHEMA, "pos")
        assert budget.used == 10

    def test_zero_perturbations_rejected_before_spending(self):
        budget = Budget(limit=15)
        with pytest.raises(ValueError):
            lime_budgeted(random_examples(10), rule_classifier, budget, 0, SCHEMA, "pos")
        assert budget.used == 0

    def test_insufficient_budget_rejected_before_spending(self):
        budget = Budget(limit=5)
        with pytest.raises(BudgetExhausted):
            lime_budgeted(random_examples(10), rule_classifier, budget, 1, SCHEMA, "pos")
        assert budget.used == 0

    def test_deterministic_in_seed(self):
        a = lime_budgeted(random_examples(10), rule_classifier, Budget(30), 2, SCHEMA, "pos", seed=6)
        b = lime_budgeted(random_examples(10), rule_classifier, Budget(30), 2, SCHEMA, "pos", seed=6)
        assert a.weights == b.weights and a.intercept == b.intercept

    def test_simulation_rule_predicts_binary_labels(self):
        attribution = lime_budgeted(
            random_examples(15, seed=2), rule_classifier, Budget(60), 4, SCHEMA, "pos", seed=1
        )
        predictions = {attribution.predict(ex) for ex in random_examples(30, seed=5)}
        assert predictions <= {"pos", "not pos"}

    def test_vote_recomputable_from_weights_alone(self):
        attribution = lime_budgeted(
            random_examples(12, seed=3), rule_classifier, Budget(48), 4, SCHEMA, "pos", seed=2
        )
        ex = random_examples(1, seed=9)[0]
        manual = attribution.intercept
        for key, w in attribution.weights.items():
            name, _, value = key.partition("=")
            if value:
                manual += w * (str(ex[name]) == value)
            else:
                manual += w * float(ex[name])
        assert attribution.vote(ex) == pytest.approx(manual)


class TestPerturbation:
    def test_respects_schema(self):
        rng = rngmod.substream(1, 2)
        anchor = random_examples(1)[0]
        for _ in range(50):
            neighbor = perturb_example(SCHEMA, anchor, rng)
            SCHEMA.validate_example(neighbor)


class TestAnchors:
    def test_recovers_single_feature_rule(self):
        # classifier keyed to one categorical value; the grown rule must pin it
        anchor = Example({"f1": "a", "f2": "u", "f3": 50.0})
        pool = [anchor] + random_examples(12, seed=7)[:5]
        result = anchors_budgeted(
            anchor, pool, rule_classifier, Budget(15), 0.95, SCHEMA, "pos"
        )
        conds = clause_conditions(result.explanation.clause)
        assert any(c.feature == "f1" and c.value == "a" for c in conds)
        assert result.target_reached
        assert not result.explanation.label_negated

    def test_vacuous_target_gives_full_coverage(self):
        anchor = Example({"f1": "b", "f2": "u", "f3": 10.0})
        pool = random_examples(5, seed=3)
        result = anchors_budgeted(anchor, pool, rule_classifier, Budget(15), 0.0, SCHEMA, "pos")
        batch = LabeledBatch(
            SCHEMA, random_examples(40, seed=11),
            ["pos"] * 40, LabelKind.PREDICTED, "pos", validate=False,
        )
        coverage, _ = coverage_precision(result.explanation, batch)
        assert coverage == 1.0

    def test_budget_is_pool_size(self):
        budget = Budget(limit=15)
        anchors_budgeted(
            random_examples(1)[0], random_examples(5, seed=2), rule_classifier,
            budget, 0.95, SCHEMA, "pos",
        )
        assert budget.used == 5

    def test_insufficient_budget(self):
        budget = Budget(limit=3)
        with pytest.raises(BudgetExhausted):
            anchors_budgeted(
                random_examples(1)[0], random_examples(5, seed=2), rule_classifier,
                budget, 0.95, SCHEMA, "pos",
            )
        assert budget.used == 0

    def test_unreachable_target_returns_best_so_far_with_flag(self):
        # identical pool rows that a stateful oracle labels both ways: every
        # covering rule tops out at 50% precision, so 1.0 is unreachable
        flip = {"state": 0}

        def contradictory(example):
            flip["state"] += 1
            return "pos" if flip["state"] % 2 else "not pos"

        anchor = Example({"f1": "a", "f2": "u", "f3": 50.0})
        result = anchors_budgeted(
            anchor, [anchor] * 4, contradictory, Budget(15), 1.0, SCHEMA, "pos",
        )
        assert isinstance(result, AnchorsResult)
        assert not result.target_reached
        assert result.precision == 0.5

    def test_output_scored_by_shared_executor(self):
        anchor = Example({"f1": "a", "f2": "v", "f3": 20.0})
        pool = random_examples(8, seed=6)[:4] + [anchor]
        result = anchors_budgeted(anchor, pool, rule_classifier, Budget(15), 0.9, SCHEMA, "pos")
        examples = random_examples(25, seed=13)
        labels = [rule_classifier(ex) for ex in examples]
        batch = LabeledBatch(SCHEMA, examples, labels, LabelKind.PREDICTED, "pos", validate=False)
        assert 0.0 <= faithfulness(result.explanation, batch) <= 1.0


ORACLE_SCRIPT = textwrap.dedent("""
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        label = "pos" if req["example"]["f1"] == "a" else "not pos"
        print(json.dumps({"id": req["id"], "label": label}), flush=True)
""")


class TestSubprocessOracle:
    def test_round_trip_and_metering(self):
        with SubprocessOracle([sys.executable, "-c", ORACLE_SCRIPT]) as oracle:
            budget = Budget(limit=4)
            handle = ClassifierHandle(oracle.predict, budget)
            a = Example({"f1": "a", "f2": "u", "f3": 1.0})
            b = Example({"f1": "b", "f2": "u", "f3": 1.0})
            assert handle.predict(a) == "pos"
            assert handle.predict(b) == "not pos"
            assert budget.used == 2
            handle.predict(a)
            handle.predict(b)
            with pytest.raises(BudgetExhausted):
                handle.predict(a)
            assert budget.used == 4

    def test_works_as_lime_backend(self):
        with SubprocessOracle([sys.executable, "-c", ORACLE_SCRIPT]) as oracle:
            budget = Budget(limit=15)
            attribution = lime_budgeted(
                random_examples(10, seed=21), oracle.predict, budget, 1, SCHEMA, "pos", seed=3
            )
            assert budget.used == 10
            assert set(attribution.feature_importance()) == {"f1", "f2", "f3"}
