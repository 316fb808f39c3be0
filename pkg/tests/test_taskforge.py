import re

import pytest

from rulelens.executor import faithfulness, simulatability
from rulelens.lang import parse, render

NEGATIONS_SINGLE = ("none", "clause", "label", "clause+label")
from rulelens.schema import FeatureKind, LabelKind
from rulelens.taskforge import (
    ComplexityDescriptor,
    LabelAbsent,
    SchemaTooSmall,
    all_descriptors,
    binarize,
    delinearize,
    descriptor_of,
    generate_task,
    linearize,
    load_task,
    sample_explanation,
    sample_schema,
    save_task,
)


class TestDescriptors:
    def test_exactly_24(self):
        descriptors = all_descriptors()
        assert len(descriptors) == 24
        assert len(set(descriptors)) == 24

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            ComplexityDescriptor(True, "triple", "none")
        with pytest.raises(ValueError):
            ComplexityDescriptor(True, "none", "verb")


class TestSampleSchema:
    def test_names_are_four_lowercase_letters(self):
        schema = sample_schema(5, seed=3)
        assert len(schema) == 5
        for spec in schema:
            assert re.fullmatch(r"[a-z]{4}", spec.name)
        assert len(set(schema.names)) == 5

    def test_deterministic_in_seed(self):
        assert sample_schema(5, seed=11) == sample_schema(5, seed=11)
        assert sample_schema(5, seed=11) != sample_schema(5, seed=12)

    def test_eleven_features(self):
        schema = sample_schema(11, seed=0)
        assert len(set(schema.names)) == 11

    def test_mixes_feature_kinds(self):
        kinds = {spec.kind for spec in sample_schema(6, seed=1)}
        assert kinds == {FeatureKind.CATEGORICAL, FeatureKind.NUMERIC}

    def test_categorical_domains_are_small(self):
        for spec in sample_schema(8, seed=5):
            if spec.kind is FeatureKind.CATEGORICAL:
                assert 2 <= len(spec.domain) <= 5
            else:
                assert spec.minimum < spec.maximum


class TestSampleExplanation:
    @pytest.mark.parametrize("descriptor", all_descriptors())
    def test_matches_descriptor_after_round_trip(self, descriptor):
        schema = sample_schema(5, seed=77)
        for seed in range(20):
            planted = sample_explanation(descriptor, schema, seed=seed)
            again = parse(render(planted))
            assert again == planted
            assert descriptor_of(again) == descriptor

    def test_clause_negation_shapes(self):
        schema = sample_schema(5, seed=4)
        d = ComplexityDescriptor(False, "none", "clause")
        for seed in range(10):
            e = sample_explanation(d, schema, seed=seed)
            assert e.clause.comparator.name in ("NEQ", "NGT", "NLT")

    def test_quantified_simple_shape(self):
        schema = sample_schema(5, seed=4)
        d = ComplexityDescriptor(True, "none", "none")
        e = sample_explanation(d, schema, seed=1)
        assert e.quantifier is not None
        assert re.match(r"If \S+ .+, then it is \w+ \w+$", render(e))

    def test_conjunction_with_label_negation(self):
        schema = sample_schema(5, seed=4)
        d = ComplexityDescriptor(False, "simple", "label")
        e = sample_explanation(d, schema, seed=2)
        text = render(e)
        assert " AND " in text or " OR " in text
        assert ", then not " in text

    def test_features_never_repeat_in_clause(self):
        from rulelens.lang import clause_conditions

        schema = sample_schema(5, seed=9)
        d = ComplexityDescriptor(False, "nested", "none")
        for seed in range(20):
            conds = clause_conditions(sample_explanation(d, schema, seed=seed).clause)
            names = [c.feature for c in conds]
            assert len(set(names)) == len(names) == 3

    def test_schema_too_small(self):
        schema = sample_schema(2, seed=0)
        with pytest.raises(SchemaTooSmall):
            sample_explanation(ComplexityDescriptor(False, "nested", "none"), schema, seed=0)


class TestGenerateTask:
    def test_noise_free_task_is_perfectly_explained(self):
        d = ComplexityDescriptor(False, "simple", "label")
        task = generate_task(d, 5, 60, 80, seed=21)
        assert faithfulness(task.planted, task.train) == 1.0
        assert simulatability(task.planted, task.test) == 1.0

    def test_batches_have_expected_kinds(self):
        task = generate_task(ComplexityDescriptor(False, "none", "none"), 5, 20, 10, seed=1)
        assert task.train.label_kind is LabelKind.PREDICTED
        assert task.test.label_kind is LabelKind.GOLD
        assert len(task.train) == 20 and len(task.test) == 10

    def test_min_class_fraction(self):
        for seed in range(30):
            task = generate_task(all_descriptors()[seed % 24], 5, 40, 0, seed=seed)
            assert min(task.train.class_fractions().values()) >= 0.10

    def test_deterministic_in_seed(self):
        d = ComplexityDescriptor(True, "simple", "clause")
        a = generate_task(d, 5, 30, 30, seed=99)
        b = generate_task(d, 5, 30, 30, seed=99)
        assert render(a.planted) == render(b.planted)
        assert a.train == b.train
        assert a.test == b.test

    def test_quantifier_noise_rate_matches_confidence(self):
        # With "certainly" (0.95), covered examples carry the stated label at
        # the confidence rate; a seeded batch of 2000 sits inside +/- 0.02.
        from rulelens.executor import clause_holds

        found = None
        for seed in range(200):
            d = ComplexityDescriptor(True, "none", "none")
            task = generate_task(d, 5, 2000, 0, seed=seed)
            if task.planted.quantifier and task.planted.quantifier.word == "certainly":
                found = task
                break
        assert found is not None
        stated = found.planted.label
        covered = [
            y == stated
            for ex, y in zip(found.train.examples, found.train.labels)
            if clause_holds(found.planted.clause, ex)
        ]
        rate = sum(covered) / len(covered)
        assert 0.93 <= rate <= 0.97

    def test_examples_respect_schema(self):
        task = generate_task(ComplexityDescriptor(False, "nested", "none"), 5, 30, 5, seed=13)
        for ex in task.train.examples + task.test.examples:
            task.schema.validate_example(ex)

    def test_rejects_tiny_train(self):
        with pytest.raises(ValueError):
            generate_task(ComplexityDescriptor(False, "none", "none"), 5, 5, 0, seed=0)

    def test_planted_single_condition_is_optimal(self):
        # exhaustive sweep over single-condition rules on a small schema:
        # nothing scores strictly above the planted explanation
        from rulelens.explainer import enumerate_conditions
        from rulelens.lang import Explanation

        for negation in NEGATIONS_SINGLE:
            task = generate_task(ComplexityDescriptor(False, "none", negation), 3, 30, 0, seed=5)
            planted_score = faithfulness(task.planted, task.train)
            assert planted_score == 1.0
            for cond in enumerate_conditions(task.schema, task.train):
                for negated in (False, True):
                    rival = Explanation(
                        clause=cond, label=task.planted.label, label_negated=negated
                    )
                    assert faithfulness(rival, task.train) <= planted_score


class TestBinarize:
    def _multiclass(self):
        from rulelens.schema import Example, FeatureSchema, FeatureSpec, LabeledBatch

        schema = FeatureSchema((FeatureSpec.categorical("f", ("p", "q")),))
        examples = [Example({"f": "p"}) for _ in range(3)]
        return LabeledBatch(schema, examples, ["a", "b", "c"], LabelKind.GOLD, "a")

    def test_relabels_rest(self):
        out = binarize(self._multiclass(), "a")
        assert out.labels == ["a", "not a", "not a"]
        assert out.is_binarized

    def test_idempotent_on_binary(self):
        once = binarize(self._multiclass(), "a")
        twice = binarize(once, "a")
        assert twice.labels == once.labels

    def test_yes_no_framing(self):
        batch = self._multiclass()
        batch.labels = ["yes", "no", "yes"]
        out = binarize(batch, "yes")
        assert set(out.labels) == {"yes", "not yes"}

    def test_absent_label(self):
        with pytest.raises(LabelAbsent):
            binarize(self._multiclass(), "zzz")


class TestLinearize:
    def test_shape_single_example(self):
        task = generate_task(ComplexityDescriptor(False, "none", "none"), 2, 10, 0, seed=3)
        text = linearize(task.train.subset([0]))
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[0].count(" | ") == 2  # two features plus the label field
        assert lines[1] == "explanation:"

    def test_line_count(self):
        task = generate_task(ComplexityDescriptor(False, "none", "none"), 5, 10, 0, seed=3)
        assert len(linearize(task.train).splitlines()) == 11

    def test_round_trip(self):
        for seed in range(10):
            task = generate_task(all_descriptors()[seed % 24], 5, 15, 0, seed=seed)
            text = linearize(task.train)
            back = delinearize(
                text, task.schema, task.train.label_kind, task.train.label_of_interest
            )
            assert back == task.train

    def test_feature_order_is_schema_order(self):
        task = generate_task(ComplexityDescriptor(False, "none", "none"), 4, 10, 0, seed=8)
        first = linearize(task.train).splitlines()[0]
        keys = [part.split(": ")[0] for part in first.split(" | ")[:-1]]
        assert keys == list(task.schema.names)


class TestTaskBundle:
    def test_save_load_round_trip(self, tmp_path):
        task = generate_task(ComplexityDescriptor(True, "simple", "label"), 5, 25, 10, seed=6)
        save_task(task, str(tmp_path / "bundle"))
        loaded = load_task(str(tmp_path / "bundle"))
        assert loaded.schema == task.schema
        assert loaded.planted == task.planted
        assert loaded.train == task.train
        assert loaded.test == task.test
        assert loaded.descriptor == task.descriptor
        assert loaded.seed == task.seed

    def test_bundle_files(self, tmp_path):
        task = generate_task(ComplexityDescriptor(False, "none", "none"), 3, 12, 4, seed=2)
        save_task(task, str(tmp_path / "t"))
        names = {p.name for p in (tmp_path / "t").iterdir()}
        assert names == {"schema.json", "planted.txt", "train.csv", "test.csv", "meta.json"}

    def test_csv_has_header_and_plain_tokens(self, tmp_path):
        task = generate_task(ComplexityDescriptor(False, "none", "none"), 3, 12, 0, seed=2)
        save_task(task, str(tmp_path / "t"))
        lines = (tmp_path / "t" / "train.csv").read_text().splitlines()
        assert lines[0] == ",".join(list(task.schema.names) + ["label"])
        assert '"' not in "".join(line.rsplit(",", 1)[0] for line in lines[1:])
