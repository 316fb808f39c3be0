"""Budget-metered baseline explainers and the black-box oracle plumbing.

Two deliberately small re-implementations of the classic comparison methods,
built for a regime where the classifier may only be queried a handful of
times (15 calls by default in the experiment harness):

* ``lime_budgeted`` perturbs each anchor example a fixed number of times,
  labels the perturbations through the metered handle, and fits a
  least-squares linear surrogate over one-hot/raw features.
* ``anchors_budgeted`` labels a small pool of training examples near one
  anchor and greedily grows a conjunction of the anchor's own feature
  values until a precision target is met.

Neither carries the full machinery of the original systems (submodular
pick, PAC bounds); under a 15-call cap that machinery has nothing to work
with, and what matters for comparison is exact query accounting.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import rng as rngmod
from .executor import clause_holds
from .lang import BoolOp, Comparator, Condition, Explanation, Node, clause_conditions
from .schema import Example, FeatureKind, FeatureSchema


class BudgetExhausted(RuntimeError):
    """A classifier call was requested beyond the allowed limit."""


@dataclass
class Budget:
    """A hard cap on black-box prediction calls. ``used`` never exceeds ``limit``."""

    limit: int
    used: int = 0

    def spend(self, calls: int = 1) -> None:
        if self.used + calls > self.limit:
            raise BudgetExhausted(f"budget of {self.limit} calls exhausted ({self.used} used)")
        self.used += calls

    @property
    def remaining(self) -> int:
        return self.limit - self.used


class ClassifierHandle:
    """A label oracle wired through a budget: every predict costs one call."""

    def __init__(self, predict_fn: Callable[[Example], str], budget: Budget):
        self.predict_fn = predict_fn
        self.budget = budget
        self.calls = 0

    def predict(self, example: Example) -> str:
        self.budget.spend(1)
        self.calls += 1
        return str(self.predict_fn(example))


Classifier = Union[ClassifierHandle, Callable[[Example], str]]


def _metered(classifier: Classifier, budget: Budget) -> ClassifierHandle:
    fn = classifier.predict_fn if isinstance(classifier, ClassifierHandle) else classifier
    return ClassifierHandle(fn, budget)


@dataclass
class AttributionExplanation:
    """A linear vote toward ``reference_class``.

    Weights are keyed by raw numeric features ("age") and by categorical
    indicators ("workclass=private"). Standardization is folded into the
    weights, so the vote is computable from an example's raw values alone:
    positive vote predicts the reference class.
    """

    weights: dict[str, float]
    intercept: float
    reference_class: str

    def vote(self, example: Example) -> float:
        total = self.intercept
        for key, w in self.weights.items():
            name, sep, value = key.partition("=")
            if sep:
                total += w * (str(example[name]) == value)
            else:
                total += w * float(example[name])
        return total

    def predict(self, example: Example) -> str:
        if self.vote(example) > 0:
            return self.reference_class
        return f"not {self.reference_class}"

    def feature_importance(self) -> dict[str, float]:
        """Largest absolute component weight per original feature."""
        out: dict[str, float] = {}
        for key, w in self.weights.items():
            name = key.partition("=")[0]
            out[name] = max(out.get(name, 0.0), abs(w))
        return out


def _design_columns(schema: FeatureSchema) -> list[str]:
    cols = []
    for spec in schema:
        if spec.kind is FeatureKind.NUMERIC:
            cols.append(spec.name)
        else:
            cols.extend(f"{spec.name}={v}" for v in spec.domain)
    return cols


def _design_row(schema: FeatureSchema, example: Example) -> list[float]:
    row: list[float] = []
    for spec in schema:
        if spec.kind is FeatureKind.NUMERIC:
            row.append(float(example[spec.name]))
        else:
            row.extend(1.0 if str(example[spec.name]) == v else 0.0 for v in spec.domain)
    return row


def perturb_example(
    schema: FeatureSchema, example: Example, rng: np.random.Generator
) -> Example:
    """One random neighbor: categoricals resample uniformly, numerics get
    Gaussian noise at a tenth of the feature range, clipped to the range."""
    values = dict(example.values)
    for spec in schema:
        if spec.kind is FeatureKind.CATEGORICAL:
            values[spec.name] = spec.domain[int(rng.integers(0, len(spec.domain)))]
        else:
            scale = 0.1 * (spec.maximum - spec.minimum)
            noised = float(example[spec.name]) + float(rng.normal(0.0, scale))
            values[spec.name] = float(np.clip(noised, spec.minimum, spec.maximum))
    return Example(values)


def lime_budgeted(
    anchor_examples: list[Example],
    classifier: Classifier,
    budget: Budget,
    perturbations_per_example: int,
    schema: FeatureSchema,
    label_of_interest: str,
    seed: int = 0,
) -> AttributionExplanation:
    """Fit a linear surrogate to classifier labels on budgeted perturbations.

    Spends exactly ``len(anchor_examples) * perturbations_per_example`` calls.
    A rank-deficient fit (common when perturbations are scarcer than design
    columns) falls back to per-column correlation weights.
    """
    if perturbations_per_example < 1:
        raise ValueError("perturbations_per_example must be >= 1")
    if not anchor_examples:
        raise ValueError("need at least one anchor example")
    needed = len(anchor_examples) * perturbations_per_example
    if budget.remaining < needed:
        raise BudgetExhausted(
            f"need {needed} calls, only {budget.remaining} of {budget.limit} left"
        )
    handle = _metered(classifier, budget)
    rng = rngmod.substream(seed, rngmod.PERTURB)

    rows = []
    targets = []
    for anchor in anchor_examples:
        for _ in range(perturbations_per_example):
            neighbor = perturb_example(schema, anchor, rng)
            label = handle.predict(neighbor)
            rows.append(_design_row(schema, neighbor))
            targets.append(1.0 if label == label_of_interest else -1.0)

    names = _design_columns(schema)
    X = np.asarray(rows, dtype=float)
    y = np.asarray(targets, dtype=float)

    # Standardize columns, then fold the scaling back into raw-value weights.
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std_safe = np.where(std > 0, std, 1.0)
    Z = (X - mean) / std_safe
    design = np.hstack([Z, np.ones((len(Z), 1))])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)

    if rank < design.shape[1]:
        coef = np.zeros(design.shape[1])
        for j in range(X.shape[1]):
            col = Z[:, j]
            if col.std() > 0 and y.std() > 0:
                coef[j] = float(np.corrcoef(col, y)[0, 1])
        coef[-1] = float(y.mean())

    raw_w = coef[:-1] / std_safe
    intercept = float(coef[-1] - np.dot(coef[:-1], mean / std_safe))
    weights = {name: float(w) for name, w in zip(names, raw_w)}
    return AttributionExplanation(weights=weights, intercept=intercept,
                                  reference_class=label_of_interest)


@dataclass
class AnchorsResult:
    explanation: Explanation
    target_reached: bool
    precision: float
    coverage: float


def _anchor_candidates(schema: FeatureSchema, anchor: Example) -> list[Condition]:
    """Conditions an anchor rule may be built from: the anchor's own values."""
    out = []
    for spec in schema:
        if spec.kind is FeatureKind.CATEGORICAL:
            out.append(Condition(spec.name, Comparator.EQ, str(anchor[spec.name])))
        else:
            v = float(anchor[spec.name])
            out.append(Condition(spec.name, Comparator.GEQ, v))
            out.append(Condition(spec.name, Comparator.LEQ, v))
    return out


def _tautology(schema: FeatureSchema) -> Condition:
    for spec in schema:
        if spec.kind is FeatureKind.NUMERIC:
            return Condition(spec.name, Comparator.GEQ, spec.minimum)
    return Condition(schema.features[0].name, Comparator.NEQ, "__never__")


def anchors_budgeted(
    anchor_example: Example,
    pool: list[Example],
    classifier: Classifier,
    budget: Budget,
    precision_target: float,
    schema: FeatureSchema,
    label_of_interest: str,
) -> AnchorsResult:
    """Greedy precision-first rule growth on a small labeled pool.

    The pool (training examples near the anchor, nearest first) is labeled
    through the budget, costing exactly ``len(pool)`` calls; growth itself
    is free. The rule targets the first pool example's label — the nearest
    neighbor standing in for the anchor's own prediction, which the budget
    does not cover querying — and gains one condition at a time, chosen to
    maximize precision on the pool, until the target is reached, conditions
    run out, or the clause is full (three conditions).
    """
    if not pool:
        raise ValueError("need a non-empty example pool")
    if budget.remaining < len(pool):
        raise BudgetExhausted(
            f"need {len(pool)} calls to label the pool, only {budget.remaining} left"
        )
    handle = _metered(classifier, budget)
    labels = [handle.predict(ex) for ex in pool]

    target = labels[0]
    hit = [y == target for y in labels]

    def rule_stats(clause) -> tuple[float, float]:
        fires = [clause_holds(clause, ex) for ex in pool]
        covered = sum(fires)
        if covered == 0:
            return 0.0, 0.0
        precision = sum(h for h, f in zip(hit, fires) if f) / covered
        return precision, covered / len(pool)

    candidates = _anchor_candidates(schema, anchor_example)
    clause = None
    precision, coverage = sum(hit) / len(pool), 1.0
    while precision < precision_target and candidates and (
        clause is None or len(clause_conditions(clause)) < 3
    ):
        best = None
        for rank, cond in enumerate(candidates):
            trial = cond if clause is None else Node(BoolOp.AND, clause, cond)
            p, c = rule_stats(trial)
            if c == 0.0:
                continue
            key = (p, c, -rank)
            if best is None or key > best[0]:
                best = (key, cond, trial, p, c)
        if best is None:
            break
        _, cond, clause, precision, coverage = best
        candidates = [c for c in candidates if c.feature != cond.feature]

    if clause is None:
        clause = _tautology(schema)
    explanation = Explanation(
        clause=clause,
        label=label_of_interest,
        # In the one-vs-rest framing anything but the label of interest is
        # its complement, whatever the classifier called it.
        label_negated=target != label_of_interest,
    )
    return AnchorsResult(
        explanation=explanation,
        target_reached=precision >= precision_target,
        precision=precision,
        coverage=coverage,
    )


# ---------------------------------------------------------------------------
# Subprocess oracle protocol

class SubprocessOracle:
    """A black-box classifier reached over newline-delimited JSON.

    Requests ``{"id": n, "example": {feature: value, ...}}`` go to the child
    process's stdin; responses ``{"id": n, "label": text}`` come back on its
    stdout, one per line, matched by id. Wrap ``predict`` in a
    ClassifierHandle to meter one budget unit per request.
    """

    def __init__(self, command: list[str]):
        self.process = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._next_id = 0

    def predict(self, example: Example) -> str:
        request_id = self._next_id
        self._next_id += 1
        payload = json.dumps({"id": request_id, "example": example.values}, sort_keys=True)
        assert self.process.stdin is not None and self.process.stdout is not None
        self.process.stdin.write(payload + "\n")
        self.process.stdin.flush()
        line = self.process.stdout.readline()
        if not line:
            raise RuntimeError("oracle process closed its output")
        response = json.loads(line)
        if response.get("id") != request_id:
            raise RuntimeError(
                f"oracle answered id {response.get('id')!r} to request {request_id}"
            )
        return str(response["label"])

    def close(self) -> None:
        if self.process.stdin:
            self.process.stdin.close()
        self.process.terminate()
        self.process.wait(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
