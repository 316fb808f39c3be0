"""Operational semantics for explanations, and the four evaluation metrics.

An explanation is executed as a deterministic binary predictor: the clause
decides whether the rule applies, the quantifier sets the predicted
direction (confidence below 0.5 inverts it, ties keep the stated label),
and non-applying examples receive the complement class. Faithfulness and
simulatability are plain agreement rates against predicted and gold labels
respectively; coverage and precision describe the applying subset.

All functions here are pure; batches may be sharded across threads and the
match counts merged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lang import (
    BoolOp,
    ClauseTree,
    Comparator,
    Condition,
    Explanation,
    Node,
)
from .schema import Example, FeatureKind, FeatureSchema, LabeledBatch, LabelKind, complement


class UnknownFeature(KeyError):
    """Condition references a feature the example does not have."""


class TypeMismatch(TypeError):
    """Numeric comparator applied to a non-numeric feature value."""


class LabelMismatch(ValueError):
    """Explanation label does not match the batch's label of interest."""


class EmptyBatch(ValueError):
    """Metric requested over zero examples."""


class WrongLabelKind(ValueError):
    """Faithfulness needs predicted labels; simulatability needs gold labels."""


@dataclass(frozen=True)
class Verdict:
    """Outcome of executing an explanation on one example."""

    applies: bool
    predicted_label: str


@dataclass(frozen=True)
class EvalReport:
    """The four metrics.

    A metric is None when the batch it needs was not scored: simulatability
    without a gold batch, faithfulness without a predicted one.
    """

    faithfulness: Optional[float]
    simulatability: Optional[float]
    coverage: float
    precision: float

    def to_json(self) -> dict:
        def fmt(x):
            return None if x is None else round(x, 4)

        return {
            "faithfulness": fmt(self.faithfulness),
            "simulatability": fmt(self.simulatability),
            "coverage": round(self.coverage, 4),
            "precision": round(self.precision, 4),
        }


def _as_number(value) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def condition_holds(cond: Condition, example: Example) -> bool:
    """Truth of one comparison on one example.

    NGT evaluates identically to LEQ and NLT to GEQ. Equality comparisons
    compare numerically when both sides are numbers, else as text.
    """
    if cond.feature not in example:
        raise UnknownFeature(cond.feature)
    actual = example[cond.feature]

    if cond.comparator in (Comparator.EQ, Comparator.NEQ):
        left, right = _as_number(actual), _as_number(cond.value)
        if left is not None and right is not None:
            same = left == right
        else:
            same = str(actual) == str(cond.value)
        return same if cond.comparator is Comparator.EQ else not same

    x = _as_number(actual)
    if x is None:
        raise TypeMismatch(
            f"{cond.comparator.name} on non-numeric value {actual!r} of feature {cond.feature!r}"
        )
    t = float(cond.value)
    if cond.comparator is Comparator.GT:
        return x > t
    if cond.comparator is Comparator.LT:
        return x < t
    if cond.comparator is Comparator.GEQ or cond.comparator is Comparator.NLT:
        return x >= t
    # LEQ and its alias NGT
    return x <= t


def clause_holds(clause: ClauseTree, example: Example) -> bool:
    if isinstance(clause, Condition):
        return condition_holds(clause, example)
    assert isinstance(clause, Node)
    left = clause_holds(clause.left, example)
    right = condition_holds(clause.right, example)
    return (left and right) if clause.op.value == "AND" else (left or right)


def batch_columns(schema: FeatureSchema, examples: list[Example]) -> dict[str, np.ndarray]:
    """Column-major view of examples: float arrays for numerics, object for text."""
    cols: dict[str, np.ndarray] = {}
    for spec in schema:
        values = [ex[spec.name] for ex in examples]
        if spec.kind is FeatureKind.NUMERIC:
            cols[spec.name] = np.asarray(values, dtype=float)
        else:
            cols[spec.name] = np.asarray(values, dtype=object)
    return cols


def condition_mask(cond: Condition, columns: dict[str, np.ndarray]) -> np.ndarray:
    """Vectorized condition_holds over a column view.

    Assumes condition values are typed consistently with the columns
    (text against text columns, numbers against numeric columns), which
    holds for every condition the package itself constructs.
    """
    col = columns[cond.feature]
    comp = cond.comparator
    if comp is Comparator.EQ:
        return col == cond.value
    if comp is Comparator.NEQ:
        return col != cond.value
    x = col.astype(float)
    t = float(cond.value)
    if comp is Comparator.GT:
        return x > t
    if comp is Comparator.LT:
        return x < t
    if comp in (Comparator.GEQ, Comparator.NLT):
        return x >= t
    return x <= t  # LEQ and its alias NGT


def clause_mask(clause: ClauseTree, columns: dict[str, np.ndarray]) -> np.ndarray:
    """Vectorized clause_holds over a column view."""
    if isinstance(clause, Condition):
        return condition_mask(clause, columns)
    left = clause_mask(clause.left, columns)
    right = condition_mask(clause.right, columns)
    return (left & right) if clause.op is BoolOp.AND else (left | right)


def apply_explanation(expl: Explanation, example: Example, label_of_interest: str) -> Verdict:
    """Execute the explanation as a deterministic binary predictor.

    The stated class is the label (negation applied); a quantifier with
    confidence below 0.5 points the prediction at the opposite class.
    Examples outside the clause always get the complement of whatever
    applying examples get.
    """
    if expl.label != label_of_interest:
        raise LabelMismatch(
            f"explanation targets {expl.label!r}, batch is framed around {label_of_interest!r}"
        )
    applies = clause_holds(expl.clause, example)
    stated = (
        complement(label_of_interest, label_of_interest)
        if expl.label_negated
        else label_of_interest
    )
    confidence = expl.quantifier.confidence if expl.quantifier else 1.0
    on_applies = stated if confidence >= 0.5 else complement(stated, label_of_interest)
    predicted = on_applies if applies else complement(on_applies, label_of_interest)
    return Verdict(applies=applies, predicted_label=predicted)


def _match_rate(expl: Explanation, batch: LabeledBatch) -> float:
    if len(batch) == 0:
        raise EmptyBatch("cannot score an empty batch")
    hits = 0
    for example, label in zip(batch.examples, batch.labels):
        verdict = apply_explanation(expl, example, batch.label_of_interest)
        hits += verdict.predicted_label == label
    return hits / len(batch)


def faithfulness(expl: Explanation, batch: LabeledBatch) -> float:
    """How often the explanation reproduces the classifier's own predictions."""
    if batch.label_kind is not LabelKind.PREDICTED:
        raise WrongLabelKind("faithfulness is measured against predicted labels")
    return _match_rate(expl, batch)


def simulatability(expl: Explanation, batch: LabeledBatch) -> float:
    """How often the explanation reproduces gold labels on unseen examples."""
    if batch.label_kind is not LabelKind.GOLD:
        raise WrongLabelKind("simulatability is measured against gold labels")
    return _match_rate(expl, batch)


def coverage_precision(expl: Explanation, batch: LabeledBatch) -> tuple[float, float]:
    """Fraction of examples where the clause fires, and the match rate there.

    Precision is defined as 0 when nothing is covered, so a vacuous rule is
    penalized rather than undefined.
    """
    if len(batch) == 0:
        raise EmptyBatch("cannot score an empty batch")
    covered = 0
    hits = 0
    for example, label in zip(batch.examples, batch.labels):
        verdict = apply_explanation(expl, example, batch.label_of_interest)
        if verdict.applies:
            covered += 1
            hits += verdict.predicted_label == label
    coverage = covered / len(batch)
    precision = hits / covered if covered else 0.0
    return coverage, precision


def evaluate(
    expl: Explanation,
    predicted_batch: Optional[LabeledBatch] = None,
    gold_batch: Optional[LabeledBatch] = None,
) -> EvalReport:
    """Bundle the four metrics into one report.

    Coverage/precision are computed on the predicted batch when given,
    else on the gold batch.
    """
    if predicted_batch is None and gold_batch is None:
        raise EmptyBatch("need at least one batch to evaluate")
    faith = faithfulness(expl, predicted_batch) if predicted_batch is not None else None
    sim = simulatability(expl, gold_batch) if gold_batch is not None else None
    base = predicted_batch if predicted_batch is not None else gold_batch
    cov, prec = coverage_precision(expl, base)
    return EvalReport(faithfulness=faith, simulatability=sim, coverage=cov, precision=prec)
