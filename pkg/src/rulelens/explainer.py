"""Search for the most faithful explanation of a batch of predictions.

Three strategies stand in for a generator's decoding modes:

* TOP1 commits to the first feature of the schema (the one a greedy reader
  meets first in the linearized input) and returns the best single-condition
  explanation over it.
* BEAM keeps the ``beam_width`` best plain single conditions and tries to
  extend each with AND/OR and a condition on a fresh feature, keeping an
  extension only when it strictly improves its parent. Beam candidates stay
  in plain form: positive label, no hedging.
* PER_FEATURE searches every feature independently over the full candidate
  space (both label polarities, optionally a fitted quantifier) and keeps
  the best explanation per feature, guaranteeing feature diversity.

The search only ever touches the given examples and predictions: it makes
zero queries to the classifier being explained. Candidate scoring is
embarrassingly parallel in principle; this implementation scores through
vectorized masks, with a deterministic final ordering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng as rngmod
from .executor import (
    EvalReport,
    batch_columns,
    clause_mask,
    condition_mask,
    coverage_precision,
    evaluate,
    faithfulness,
)
from .lang import (
    BoolOp,
    ClauseTree,
    Comparator,
    Condition,
    Explanation,
    Node,
    QUANTIFIER_CONFIDENCE,
    Quantifier,
    clause_conditions,
    render,
)
from .schema import (
    Example,
    FeatureKind,
    FeatureSchema,
    LabeledBatch,
    LabelKind,
)


class DegenerateBatch(ValueError):
    """All examples in the batch carry the same class."""


class ZeroCoverage(ValueError):
    """Quantifier fitting needs the clause to fire at least once."""


class InsufficientExamples(ValueError):
    """Not enough examples to form the requested subsets."""


class SearchStrategy(enum.Enum):
    TOP1 = "top1"
    BEAM = "beam"
    PER_FEATURE = "perfeat"


@dataclass(frozen=True)
class SearchConfig:
    strategy: SearchStrategy = SearchStrategy.PER_FEATURE
    beam_width: int = 20
    max_conjunction_depth: int = 2
    quantifier_fitting: bool = True

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_conjunction_depth not in (1, 2):
            raise ValueError("max_conjunction_depth must be 1 or 2")


@dataclass(frozen=True)
class _Scored:
    explanation: Explanation
    faithfulness: float
    coverage: float

    def sort_key(self):
        # Ties break toward general then simple rules, then a fixed ordering.
        return (
            -self.faithfulness,
            -self.coverage,
            len(clause_conditions(self.explanation.clause)),
            render(self.explanation),
        )


@dataclass
class CandidateSet:
    """Scored candidates, best first, no duplicate canonical renderings."""

    candidates: list[tuple[Explanation, float]]

    @staticmethod
    def from_scored(scored: list[_Scored]) -> "CandidateSet":
        seen: set[str] = set()
        out = []
        for item in sorted(scored, key=_Scored.sort_key):
            text = render(item.explanation)
            if text not in seen:
                seen.add(text)
                out.append((item.explanation, item.faithfulness))
        return CandidateSet(out)

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def best(self) -> Explanation:
        return self.candidates[0][0]


@dataclass
class ExplainResult:
    best: Explanation
    report: EvalReport
    candidates: CandidateSet


class _BatchView:
    """Precomputed column view of a binarized batch."""

    def __init__(self, batch: LabeledBatch):
        if len(batch) == 0:
            raise DegenerateBatch("empty batch")
        if not batch.is_binarized:
            raise ValueError("search needs a binarized batch")
        self.batch = batch
        self.schema = batch.schema
        self.label = batch.label_of_interest
        self.y = np.array([y == self.label for y in batch.labels], dtype=bool)
        if self.y.all() or not self.y.any():
            raise DegenerateBatch("batch holds a single class; nothing to separate")
        self.columns = batch_columns(batch.schema, batch.examples)

    def score(self, mask: np.ndarray, stated_is_label: bool, confidence: float) -> tuple[float, float]:
        """(faithfulness, coverage) of a rule with the given clause mask."""
        predict_label_on_true = stated_is_label if confidence >= 0.5 else not stated_is_label
        matches = (mask == self.y) if predict_label_on_true else (mask != self.y)
        return float(matches.mean()), float(mask.mean())


def enumerate_conditions(schema: FeatureSchema, batch: LabeledBatch) -> list[Condition]:
    """The finite condition pool the searches draw from.

    Categorical features contribute EQ and NEQ against every value in the
    schema domain or observed in the batch. Numeric features contribute one
    condition per decision boundary: a GT threshold at each midpoint between
    consecutive distinct observed values.
    """
    if len(batch) == 0:
        raise DegenerateBatch("empty batch")
    columns = batch_columns(schema, batch.examples)
    out: list[Condition] = []
    for spec in schema:
        if spec.kind is FeatureKind.CATEGORICAL:
            observed = [v for v in dict.fromkeys(columns[spec.name]) if v not in spec.domain]
            values = list(spec.domain) + sorted(map(str, observed))
            for value in values:
                out.append(Condition(spec.name, Comparator.EQ, value))
                out.append(Condition(spec.name, Comparator.NEQ, value))
        else:
            distinct = np.unique(columns[spec.name])
            for lo, hi in zip(distinct, distinct[1:]):
                out.append(Condition(spec.name, Comparator.GT, float((lo + hi) / 2)))
    return out


_QUANTIFIER_ORDER = {word: i for i, word in enumerate(QUANTIFIER_CONFIDENCE)}


def _nearest_quantifier(p: float) -> Optional[Quantifier]:
    """Hedging word closest to p; None when the clause is perfectly precise.

    Ties between words go to the higher confidence, then to the earlier word
    in the vocabulary ("certainly" over "definitely").
    """
    if p >= 1.0:
        return None
    word = min(
        QUANTIFIER_CONFIDENCE,
        key=lambda w: (
            abs(QUANTIFIER_CONFIDENCE[w] - p),
            -QUANTIFIER_CONFIDENCE[w],
            _QUANTIFIER_ORDER[w],
        ),
    )
    return Quantifier(word)


def fit_quantifier(
    clause: ClauseTree,
    label: str,
    batch: LabeledBatch,
    label_negated: bool = False,
) -> Explanation:
    """Attach the hedging word whose confidence is nearest the empirical precision,
    the rate at which covered examples actually carry the stated label."""
    columns = batch_columns(batch.schema, batch.examples)
    mask = clause_mask(clause, columns)
    if not mask.any():
        raise ZeroCoverage("clause never fires on the batch")
    stated = f"not {label}" if label_negated else label
    y = np.array([lbl == stated for lbl in batch.labels], dtype=bool)
    p = float(y[mask].mean())
    return Explanation(
        clause=clause, quantifier=_nearest_quantifier(p), label=label, label_negated=label_negated
    )


def _enriched_candidates(
    view: _BatchView,
    conditions: list[Condition],
    quantifier_fitting: bool,
) -> list[_Scored]:
    """Single-condition explanations over all polarities, hedged when asked."""
    out = []
    for cond in conditions:
        mask = condition_mask(cond, view.columns)
        covered = bool(mask.any())
        for negated in (False, True):
            quantifier = None
            if quantifier_fitting and covered:
                stated = np.logical_not(view.y) if negated else view.y
                p = float(stated[mask].mean())
                # Hedge only rules whose stated direction is the empirical
                # majority; the opposite direction is already covered by the
                # complementary polarity candidate in plainer words.
                if p >= 0.5:
                    quantifier = _nearest_quantifier(p)
            confidence = quantifier.confidence if quantifier else 1.0
            faith, cov = view.score(mask, stated_is_label=not negated, confidence=confidence)
            expl = Explanation(
                clause=cond, quantifier=quantifier, label=view.label, label_negated=negated
            )
            out.append(_Scored(expl, faith, cov))
    return out


def per_feature_search(batch: LabeledBatch, config: SearchConfig) -> CandidateSet:
    """Best single-condition explanation per feature, globally ranked."""
    view = _BatchView(batch)
    all_conditions = enumerate_conditions(batch.schema, batch)
    winners: list[_Scored] = []
    for name in batch.schema.names:
        pool = [c for c in all_conditions if c.feature == name]
        if not pool:
            continue
        scored = _enriched_candidates(view, pool, config.quantifier_fitting)
        winners.append(min(scored, key=_Scored.sort_key))
    return CandidateSet.from_scored(winners)


def top1_search(batch: LabeledBatch, config: SearchConfig) -> CandidateSet:
    """The per-feature winner of the first schema feature only."""
    view = _BatchView(batch)
    first = batch.schema.names[0]
    pool = [c for c in enumerate_conditions(batch.schema, batch) if c.feature == first]
    scored = _enriched_candidates(view, pool, config.quantifier_fitting)
    return CandidateSet.from_scored([min(scored, key=_Scored.sort_key)])


def beam_conjunction_search(batch: LabeledBatch, config: SearchConfig) -> CandidateSet:
    """Beam over plain clause trees, extending singles with AND/OR pairs."""
    view = _BatchView(batch)
    conditions = enumerate_conditions(batch.schema, batch)
    masks = {i: condition_mask(c, view.columns) for i, c in enumerate(conditions)}

    level1: list[tuple[_Scored, int]] = []
    for i, cond in enumerate(conditions):
        faith, cov = view.score(masks[i], stated_is_label=True, confidence=1.0)
        expl = Explanation(clause=cond, label=view.label)
        level1.append((_Scored(expl, faith, cov), i))
    level1.sort(key=lambda pair: pair[0].sort_key())
    beam = level1[: config.beam_width]

    pool: list[_Scored] = [item for item, _ in beam]
    if config.max_conjunction_depth >= 2:
        for parent, i in beam:
            cond_a = conditions[i]
            for j, cond_b in enumerate(conditions):
                if cond_b.feature == cond_a.feature:
                    continue
                for op in (BoolOp.AND, BoolOp.OR):
                    mask = (
                        masks[i] & masks[j] if op is BoolOp.AND else masks[i] | masks[j]
                    )
                    faith, cov = view.score(mask, stated_is_label=True, confidence=1.0)
                    if faith > parent.faithfulness:
                        expl = Explanation(clause=Node(op, cond_a, cond_b), label=view.label)
                        pool.append(_Scored(expl, faith, cov))

    ranked = CandidateSet.from_scored(pool)
    ranked.candidates = ranked.candidates[: config.beam_width]
    return ranked


def explain(batch: LabeledBatch, config: Optional[SearchConfig] = None) -> ExplainResult:
    """Run the configured strategy and report the most faithful explanation."""
    config = config or SearchConfig()
    if config.strategy is SearchStrategy.TOP1:
        candidates = top1_search(batch, config)
    elif config.strategy is SearchStrategy.BEAM:
        candidates = beam_conjunction_search(batch, config)
    else:
        candidates = per_feature_search(batch, config)
    best = candidates.best
    if batch.label_kind is LabelKind.PREDICTED:
        report = evaluate(best, predicted_batch=batch)
    else:
        report = evaluate(best, gold_batch=batch)
    return ExplainResult(best=best, report=report, candidates=candidates)


def partition_indices(
    n: int, n_subsets: int, subset_size: int, seed: int
) -> list[np.ndarray]:
    """Disjoint seeded subsets of range(n), each of subset_size."""
    perm = rngmod.substream(seed, rngmod.PARTITION).permutation(n)
    return [perm[i * subset_size : (i + 1) * subset_size] for i in range(n_subsets)]


@dataclass
class EnsembleResult:
    best: Explanation
    best_score: float
    subset_winners: list[Explanation] = field(default_factory=list)
    winner_scores: list[float] = field(default_factory=list)


def ensemble_subsets(
    schema: FeatureSchema,
    examples: list[Example],
    predictions: list[str],
    config: Optional[SearchConfig] = None,
    n_subsets: int = 8,
    subset_size: int = 10,
    seed: int = 0,
    label_of_interest: Optional[str] = None,
) -> EnsembleResult:
    """Explain disjoint subsets, keep the winner that matches all N predictions best.

    Splitting a large example set into small subsets keeps each search input
    at the size the explainer works best with, while the final selection is
    scored on every example-prediction pair.
    """
    config = config or SearchConfig()
    n = len(examples)
    if len(predictions) != n:
        raise ValueError("predictions must align with examples")
    if n < n_subsets * subset_size:
        raise InsufficientExamples(
            f"need {n_subsets * subset_size} examples for {n_subsets} subsets, got {n}"
        )
    if label_of_interest is None:
        label_of_interest = next(
            (y for y in predictions if not y.startswith("not ")), predictions[0]
        )
    labels = [
        y if y == label_of_interest else f"not {label_of_interest}" for y in predictions
    ]
    full = LabeledBatch(
        schema, list(examples), labels, LabelKind.PREDICTED, label_of_interest,
        validate=False,
    )

    winners: list[_Scored] = []
    for idx in partition_indices(n, n_subsets, subset_size, seed):
        piece = full.subset(idx)
        try:
            result = explain(piece, config)
        except DegenerateBatch:
            continue  # a single-class subset teaches the search nothing
        winners.append(_rescore(result.best, full))
    if not winners:
        raise DegenerateBatch("every subset was single-class")

    best = min(winners, key=_Scored.sort_key)
    return EnsembleResult(
        best=best.explanation,
        best_score=best.faithfulness,
        subset_winners=[w.explanation for w in winners],
        winner_scores=[w.faithfulness for w in winners],
    )


def _rescore(expl: Explanation, batch: LabeledBatch) -> _Scored:
    faith = faithfulness(expl, batch)
    cov, _ = coverage_precision(expl, batch)
    return _Scored(expl, faith, cov)
