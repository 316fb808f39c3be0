"""Experiment orchestration: datasets, classifiers, protocols, reports.

The central protocol mirrors a budget-constrained comparison: subsample
many small example sets from a validation split, obtain the classifier's
predictions on each (the explainer's given input, exempt from the budget),
then let every configured method produce one explanation per subset under
a fresh query budget. Faithfulness is scored on the subset's predictions,
simulatability on held-out gold labels the methods never saw.

Every number a report emits is a deterministic function of the config and
seed; wall-clock runtime is kept out of the canonical JSON so identical
runs serialize identically.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import classifiers as zoo
from . import rng as rngmod
from .baselines import (
    AttributionExplanation,
    Budget,
    BudgetExhausted,
    ClassifierHandle,
    anchors_budgeted,
    lime_budgeted,
)
from .classifiers import TrainedClassifier, UnsupportedKind  # noqa: F401  (UnsupportedKind re-exported)
from .executor import faithfulness, simulatability
from .explainer import (
    DegenerateBatch,
    SearchConfig,
    SearchStrategy,
    ensemble_subsets,
    explain,
    partition_indices,
)
from .schema import (
    Example,
    FeatureKind,
    FeatureSchema,
    FeatureSpec,
    LabeledBatch,
    LabelKind,
)
from .taskforge import binarize


class MalformedCsv(ValueError):
    def __init__(self, path: str, line: int, message: str):
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class EmptyDataset(ValueError):
    """CSV held a header but no rows."""


SEARCH_STRATEGIES = ("top1", "beam", "perfeat")
ALL_STRATEGIES = ("lime", "anchors") + SEARCH_STRATEGIES


@dataclass
class Dataset:
    """A gold-labeled table with fixed train/validation/test index splits."""

    schema: FeatureSchema
    batch: LabeledBatch
    train_idx: list[int]
    validation_idx: list[int]
    test_idx: list[int]

    def split(self, which: str) -> LabeledBatch:
        idx = {"train": self.train_idx, "validation": self.validation_idx, "test": self.test_idx}[which]
        return self.batch.subset(idx)

    def project(self, feature_names: Sequence[str]) -> "Dataset":
        """Restrict to the named features, keeping labels and splits."""
        keep = [s for s in self.schema if s.name in set(feature_names)]
        schema = FeatureSchema(tuple(keep))
        examples = [
            Example({name: ex[name] for name in schema.names}) for ex in self.batch.examples
        ]
        batch = LabeledBatch(
            schema, examples, self.batch.labels, self.batch.label_kind,
            self.batch.label_of_interest, validate=False,
        )
        return Dataset(schema, batch, self.train_idx, self.validation_idx, self.test_idx)


def _make_splits(n: int, seed: int) -> tuple[list[int], list[int], list[int]]:
    order = rngmod.substream(seed, rngmod.SPLIT).permutation(n).tolist()
    n_val = max(1, int(0.15 * n)) if n >= 3 else 0
    n_test = max(1, int(0.15 * n)) if n >= 3 else 0
    n_train = n - n_val - n_test
    return order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]


def _majority(labels: Sequence[str]) -> str:
    counts: dict[str, int] = {}
    for y in labels:
        counts[y] = counts.get(y, 0) + 1
    top = max(counts.values())
    return min(y for y, c in counts.items() if c == top)


def load_csv(path: str, seed: int = 0, label_col: Optional[str] = None) -> Dataset:
    """Load a labeled table. The label is the named column, else the last one.

    A column is numeric iff every non-missing value parses as a number;
    missing numeric cells take the column mean, missing text cells stay "".
    Rows are split 70/15/15 by a seeded shuffle.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(path, 1, "missing header") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedCsv(
                    path, lineno, f"expected {len(header)} fields, found {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise EmptyDataset(f"{path} has a header but no rows")

    label_name = label_col if label_col is not None else header[-1]
    if label_name not in header:
        raise MalformedCsv(path, 1, f"no column named {label_name!r}")
    label_at = header.index(label_name)
    feature_at = [(h, i) for i, h in enumerate(header) if i != label_at]
    feature_names = [h for h, _ in feature_at]

    columns: dict[str, list] = {name: [] for name in feature_names}
    labels = []
    for row in rows:
        labels.append(row[label_at])
        for name, i in feature_at:
            columns[name].append(row[i])

    specs = []
    typed: dict[str, list] = {}
    for name in feature_names:
        raw = columns[name]
        present = [v for v in raw if v != ""]
        numeric = bool(present) and all(_parses_as_number(v) for v in present)
        if numeric:
            values = [float(v) for v in present]
            mean = sum(values) / len(values)
            col = [float(v) if v != "" else mean for v in raw]
            lo, hi = min(col), max(col)
            if lo == hi:
                hi = lo + 1.0  # degenerate constant column; widen so min < max
            specs.append(FeatureSpec.numeric(name, lo, hi))
            typed[name] = col
        else:
            specs.append(FeatureSpec.categorical(name, sorted(set(raw))))
            typed[name] = raw

    schema = FeatureSchema(tuple(specs))
    examples = [
        Example({name: typed[name][i] for name in feature_names}) for i in range(len(rows))
    ]
    batch = LabeledBatch(
        schema, examples, labels, LabelKind.GOLD, _majority(labels), validate=False
    )
    train, val, test = _make_splits(len(rows), seed)
    return Dataset(schema, batch, train, val, test)


def _parses_as_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# Feature selection

def mutual_info_topk(dataset: Dataset, k: int) -> list[str]:
    """Top-k features by empirical mutual information with the label (nats).

    Numerics are discretized into quartile bins on the train split. Ties
    break lexicographically.
    """
    if k > len(dataset.schema):
        raise ValueError("k exceeds the number of features")
    train = dataset.split("train")
    labels = np.array(train.labels, dtype=object)
    scores: list[tuple[float, str]] = []
    for spec in dataset.schema:
        values = [ex[spec.name] for ex in train.examples]
        if spec.kind is FeatureKind.NUMERIC:
            arr = np.asarray(values, dtype=float)
            qs = np.quantile(arr, [0.25, 0.5, 0.75])
            binned = np.digitize(arr, qs)
        else:
            domain = {v: i for i, v in enumerate(dict.fromkeys(map(str, values)))}
            binned = np.array([domain[str(v)] for v in values])
        scores.append((_mutual_information(binned, labels), spec.name))
    ranked = sorted(scores, key=lambda s: (-s[0], s[1]))
    return [name for _, name in ranked[:k]]


def _mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    n = len(x)
    xs = {v: i for i, v in enumerate(dict.fromkeys(x.tolist()))}
    ys = {v: i for i, v in enumerate(dict.fromkeys(y.tolist()))}
    joint = np.zeros((len(xs), len(ys)))
    for a, b in zip(x.tolist(), y.tolist()):
        joint[xs[a], ys[b]] += 1
    joint /= n
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = joint * np.log(joint / (px @ py))
    return float(np.nansum(terms))


# ---------------------------------------------------------------------------
# Bundled synthetic stand-in with adult-census-like columns

_EDUCATION = ("dropout", "highschool", "somecollege", "bachelors", "masters", "doctorate")
_OCCUPATION = ("clerical", "craft", "managerial", "sales", "service", "technical")
_WORKCLASS = ("federal", "local", "private", "selfemployed", "state")
_MARITAL = ("divorced", "married", "separated", "single", "widowed")
_RELATION = ("child", "household", "nofamily", "partner", "spouse")


def make_adult_like(n: int = 2000, seed: int = 0) -> Dataset:
    """A seeded synthetic dataset with income-census-like columns.

    Labels (">50K" / "<=50K") follow a noisy additive rule over education,
    age, weekly hours and capital gain, so the usual zoo members have real
    structure to find. Ships in place of the UCI table, which this package
    does not redistribute.
    """
    rng = rngmod.substream(seed, rngmod.EXAMPLES, 999)
    age = rng.integers(17, 91, size=n).astype(float)
    hours = rng.integers(1, 100, size=n).astype(float)
    gain = np.round(rng.gamma(0.6, 1500.0, size=n)).astype(float)
    loss = np.round(rng.gamma(0.4, 500.0, size=n)).astype(float)
    years = np.clip(age - 18 - rng.integers(0, 10, size=n), 0, None).astype(float)
    commute = np.round(rng.uniform(0, 120, size=n), 1)
    savings = np.round(rng.uniform(0, 0.5, size=n), 3)
    education = rng.integers(0, len(_EDUCATION), size=n)
    occupation = rng.integers(0, len(_OCCUPATION), size=n)
    workclass = rng.integers(0, len(_WORKCLASS), size=n)
    marital = rng.integers(0, len(_MARITAL), size=n)

    score = (
        0.55 * education
        + 0.045 * (age - 38)
        + 0.035 * (hours - 40)
        + 0.0012 * gain
        + 0.35 * (occupation == 2)  # managerial
        - 4.1
    )
    noise = rng.logistic(0.0, 0.6, size=n)
    label = np.where(score + noise > 0, ">50K", "<=50K")

    specs = (
        FeatureSpec.numeric("age", 17, 90),
        FeatureSpec.categorical("education", _EDUCATION),
        FeatureSpec.categorical("occupation", _OCCUPATION),
        FeatureSpec.numeric("hoursperweek", 1, 99),
        FeatureSpec.numeric("capitalgain", 0, float(max(gain.max(), 1.0))),
        FeatureSpec.numeric("capitalloss", 0, float(max(loss.max(), 1.0))),
        FeatureSpec.categorical("workclass", _WORKCLASS),
        FeatureSpec.categorical("maritalstatus", _MARITAL),
        FeatureSpec.numeric("yearsexperience", 0, float(max(years.max(), 1.0))),
        FeatureSpec.numeric("commutedistance", 0, 120),
        FeatureSpec.numeric("savingsrate", 0, 0.5),
    )
    schema = FeatureSchema(specs)
    examples = []
    for i in range(n):
        examples.append(Example({
            "age": float(age[i]),
            "education": _EDUCATION[education[i]],
            "occupation": _OCCUPATION[occupation[i]],
            "hoursperweek": float(hours[i]),
            "capitalgain": float(gain[i]),
            "capitalloss": float(loss[i]),
            "workclass": _WORKCLASS[workclass[i]],
            "maritalstatus": _MARITAL[marital[i]],
            "yearsexperience": float(years[i]),
            "commutedistance": float(commute[i]),
            "savingsrate": float(savings[i]),
        }))
    batch = LabeledBatch(schema, examples, label.tolist(), LabelKind.GOLD, ">50K", validate=False)
    train, val, test = _make_splits(n, seed)
    return Dataset(schema, batch, train, val, test)


# ---------------------------------------------------------------------------
# Classifier training

def train_classifier(kind: str, dataset: Dataset, seed: int = 0, **params) -> ClassifierHandle:
    """Fit a zoo member on the train split; returns a metered handle.

    The handle starts with an effectively unlimited budget; experiments
    re-wrap its predict function with per-run budgets.
    """
    train = dataset.split("train")
    if len(train) == 0:
        raise ValueError("train split is empty")
    model = zoo.train(kind, dataset.schema, train.examples, train.labels, seed=seed, **params)
    handle = ClassifierHandle(model.predict, Budget(limit=10**12))
    handle.model = model  # unmetered access for budget-exempt protocol steps
    return handle


# ---------------------------------------------------------------------------
# Experiment protocols

@dataclass
class ExperimentConfig:
    dataset: str = "adult-like"
    classifier: str = "tree"
    n_subsets: int = 100
    subset_size: int = 10
    budget: int = 15
    strategies: tuple[str, ...] = ALL_STRATEGIES
    seed: int = 0
    label_of_interest: Optional[str] = None
    label_col: Optional[str] = None
    features: Optional[tuple[str, ...]] = None
    lime_perturbations: int = 1
    anchors_pool_size: int = 5
    anchors_precision_target: float = 0.95
    tree_depth: int = 3
    beam_width: int = 20

    def __post_init__(self):
        if self.subset_size < 2:
            raise ValueError("subset_size must be >= 2")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        unknown = set(self.strategies) - set(ALL_STRATEGIES)
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "classifier": self.classifier,
            "n_subsets": self.n_subsets,
            "subset_size": self.subset_size,
            "budget": self.budget,
            "strategies": list(self.strategies),
            "seed": self.seed,
            "label_of_interest": self.label_of_interest,
            "features": None if self.features is None else list(self.features),
            "lime_perturbations": self.lime_perturbations,
            "anchors_pool_size": self.anchors_pool_size,
            "anchors_precision_target": self.anchors_precision_target,
            "tree_depth": self.tree_depth,
            "beam_width": self.beam_width,
        }


@dataclass
class StrategyStats:
    faithfulness: list[float] = field(default_factory=list)
    simulatability: list[float] = field(default_factory=list)
    budget_used: list[int] = field(default_factory=list)
    failures: int = 0

    def to_json(self) -> dict:
        def stats(xs: list[float]) -> tuple[float, float]:
            if not xs:
                return 0.0, 0.0
            arr = np.asarray(xs, dtype=float)
            return float(arr.mean()), float(arr.std())

        f_mean, f_std = stats(self.faithfulness)
        s_mean, s_std = stats(self.simulatability)
        return {
            "faithfulness_mean": round(f_mean, 4),
            "faithfulness_std": round(f_std, 4),
            "simulatability_mean": round(s_mean, 4),
            "simulatability_std": round(s_std, 4),
            "budget_total": int(sum(self.budget_used)),
            "budget_max": int(max(self.budget_used, default=0)),
            "failures": self.failures,
            "runs": len(self.faithfulness),
        }


@dataclass
class Report:
    config: ExperimentConfig
    strategies: dict[str, StrategyStats]
    skipped_subsets: int = 0
    runtime_seconds: float = 0.0
    series: Optional[list[dict]] = None

    def to_json(self) -> dict:
        """Canonical content: everything except wall-clock runtime."""
        out = {
            "config": self.config.to_json(),
            "strategies": {name: s.to_json() for name, s in sorted(self.strategies.items())},
            "skipped_subsets": self.skipped_subsets,
        }
        if self.series is not None:
            out["series"] = self.series
        return out

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        lines = [
            "| method | faithfulness | simulatability | budget max | failures |",
            "|---|---|---|---|---|",
        ]
        for name, s in sorted(self.strategies.items()):
            row = s.to_json()
            lines.append(
                f"| {name} | {row['faithfulness_mean']:.3f} ± {row['faithfulness_std']:.3f} "
                f"| {row['simulatability_mean']:.3f} ± {row['simulatability_std']:.3f} "
                f"| {row['budget_max']} | {row['failures']} |"
            )
        lines.append(f"\nruntime: {self.runtime_seconds:.1f}s; skipped subsets: {self.skipped_subsets}")
        return "\n".join(lines)


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset == "adult-like":
        ds = make_adult_like(seed=config.seed)
    else:
        ds = load_csv(config.dataset, seed=config.seed, label_col=config.label_col)
    if config.features is not None:
        ds = ds.project(config.features)
    return ds


def _distance(schema: FeatureSchema, a: Example, b: Example) -> float:
    total = 0.0
    for spec in schema:
        if spec.kind is FeatureKind.NUMERIC:
            span = spec.maximum - spec.minimum or 1.0
            total += abs(float(a[spec.name]) - float(b[spec.name])) / span
        else:
            total += float(str(a[spec.name]) != str(b[spec.name]))
    return total


def _nearest_pool(
    schema: FeatureSchema, anchor: Example, candidates: list[Example], k: int
) -> list[Example]:
    scored = sorted(
        range(len(candidates)),
        key=lambda i: (_distance(schema, anchor, candidates[i]), i),
    )
    return [candidates[i] for i in scored[:k]]


def _sample_prediction_subset(
    dataset: Dataset,
    model: TrainedClassifier,
    loi: str,
    size: int,
    seed: int,
    index: int,
) -> Optional[tuple[LabeledBatch, list[Example]]]:
    """A validation subset with both predicted classes present, or None.

    Predictions here are the explainer's given input-prediction pairs; they
    are obtained directly from the model and cost no budget.
    """
    val_idx = dataset.validation_idx
    for attempt in range(50):
        rng = rngmod.substream(seed, rngmod.SUBSET, index, attempt)
        chosen = rng.choice(len(val_idx), size=size, replace=False)
        examples = [dataset.batch.examples[val_idx[i]] for i in chosen]
        predictions = model.predict_batch(examples)
        binary = [y if y == loi else f"not {loi}" for y in predictions]
        if len(set(binary)) == 2:
            batch = LabeledBatch(
                dataset.schema, examples, binary, LabelKind.PREDICTED, loi, validate=False
            )
            return batch, examples
    return None


def run_budget_experiment(config: ExperimentConfig, dataset: Optional[Dataset] = None) -> Report:
    """The core protocol: many small subsets, one explanation per method each."""
    started = time.perf_counter()
    ds = dataset if dataset is not None else load_dataset(config)
    handle = train_classifier(config.classifier, ds, seed=config.seed, max_depth=config.tree_depth)
    model: TrainedClassifier = handle.model

    train_batch = ds.split("train")
    loi = config.label_of_interest or _majority(model.predict_batch(train_batch.examples))
    test_split = ds.split("test")
    test_gold = binarize(test_split, loi) if loi in test_split.labels else None

    stats = {name: StrategyStats() for name in config.strategies}
    skipped = 0
    for i in range(config.n_subsets):
        sampled = _sample_prediction_subset(
            ds, model, loi, config.subset_size, config.seed, i
        )
        if sampled is None:
            skipped += 1
            continue
        subset_batch, subset_examples = sampled
        for name in config.strategies:
            budget = Budget(limit=config.budget)
            try:
                expl, attribution = _run_strategy(
                    name, config, ds, model, subset_batch, subset_examples, budget, i, loi
                )
            except BudgetExhausted:
                stats[name].failures += 1
                stats[name].budget_used.append(budget.used)
                continue
            if attribution is not None:
                faith = _attribution_match(attribution, subset_batch)
                sim = _attribution_match(attribution, test_gold) if test_gold is not None else 0.0
            else:
                faith = faithfulness(expl, subset_batch)
                sim = simulatability(expl, test_gold) if test_gold is not None else 0.0
            stats[name].faithfulness.append(faith)
            stats[name].simulatability.append(sim)
            stats[name].budget_used.append(budget.used)

    return Report(
        config=config,
        strategies=stats,
        skipped_subsets=skipped,
        runtime_seconds=time.perf_counter() - started,
    )


def _run_strategy(
    name: str,
    config: ExperimentConfig,
    ds: Dataset,
    model: TrainedClassifier,
    subset_batch: LabeledBatch,
    subset_examples: list[Example],
    budget: Budget,
    subset_index: int,
    loi: str,
):
    """Returns (explanation, attribution): exactly one of the two is set."""
    if name == "lime":
        attribution = lime_budgeted(
            subset_examples,
            model.predict,
            budget,
            config.lime_perturbations,
            ds.schema,
            loi,
            seed=config.seed + 7919 * subset_index,
        )
        return None, attribution
    if name == "anchors":
        train_examples = ds.split("train").examples
        pool = _nearest_pool(
            ds.schema, subset_examples[0], train_examples, config.anchors_pool_size
        )
        result = anchors_budgeted(
            subset_examples[0], pool, model.predict, budget,
            config.anchors_precision_target, ds.schema, loi,
        )
        return result.explanation, None
    strategy = SearchStrategy(name)
    search = SearchConfig(strategy=strategy, beam_width=config.beam_width)
    return explain(subset_batch, search).best, None


def _attribution_match(attribution: AttributionExplanation, batch: LabeledBatch) -> float:
    hits = sum(
        attribution.predict(ex) == y for ex, y in zip(batch.examples, batch.labels)
    )
    return hits / len(batch)


def feature_sweep(config: ExperimentConfig, k_range: Sequence[int]) -> Report:
    """Re-run the budget experiment on the top-k features for each k."""
    started = time.perf_counter()
    base = load_dataset(config)
    if max(k_range) > len(base.schema):
        raise ValueError("k_range exceeds the dataset's feature count")
    series = []
    for k in k_range:
        names = mutual_info_topk(base, k)
        sub = replace(config, features=tuple(names))
        report = run_budget_experiment(sub, dataset=base.project(names))
        series.append({
            "k": int(k),
            "features": names,
            "strategies": {n: s.to_json() for n, s in sorted(report.strategies.items())},
        })
    return Report(
        config=config,
        strategies={},
        series=series,
        runtime_seconds=time.perf_counter() - started,
    )


def scale_examples_experiment(config: ExperimentConfig, n_range: Sequence[int]) -> Report:
    """Compare subset-ensembled search against single-subset search as the
    number of available input examples grows."""
    started = time.perf_counter()
    ds = load_dataset(config)
    handle = train_classifier(config.classifier, ds, seed=config.seed, max_depth=config.tree_depth)
    model: TrainedClassifier = handle.model
    train_batch = ds.split("train")
    loi = config.label_of_interest or _majority(model.predict_batch(train_batch.examples))
    test_split = ds.split("test")
    test_gold = binarize(test_split, loi) if loi in test_split.labels else None
    if max(n_range) > len(ds.validation_idx):
        raise ValueError("n_range exceeds the validation split")

    search = SearchConfig(strategy=SearchStrategy.PER_FEATURE, beam_width=config.beam_width)
    series = []
    for n in n_range:
        ens_scores, single_scores = [], []
        ens_sim, single_sim = [], []
        for rep in range(config.n_subsets):
            rng = rngmod.substream(config.seed, rngmod.SUBSET, 1000 + n, rep)
            chosen = rng.choice(len(ds.validation_idx), size=n, replace=False)
            examples = [ds.batch.examples[ds.validation_idx[i]] for i in chosen]
            predictions = model.predict_batch(examples)
            binary = [y if y == loi else f"not {loi}" for y in predictions]
            part_seed = config.seed + 104729 * rep + n
            try:
                ens = ensemble_subsets(
                    ds.schema, examples, binary, search,
                    n_subsets=n // config.subset_size,
                    subset_size=config.subset_size,
                    seed=part_seed,
                    label_of_interest=loi,
                )
            except DegenerateBatch:
                continue
            full = LabeledBatch(
                ds.schema, examples, binary, LabelKind.PREDICTED, loi, validate=False
            )
            first = partition_indices(n, 1, config.subset_size, part_seed)[0]
            try:
                single = explain(full.subset(first), search).best
            except DegenerateBatch:
                continue
            ens_scores.append(ens.best_score)
            single_scores.append(faithfulness(single, full))
            if test_gold is not None:
                ens_sim.append(simulatability(ens.best, test_gold))
                single_sim.append(simulatability(single, test_gold))
        series.append({
            "n": int(n),
            "ensemble_faithfulness": round(float(np.mean(ens_scores)), 4) if ens_scores else 0.0,
            "single_faithfulness": round(float(np.mean(single_scores)), 4) if single_scores else 0.0,
            "ensemble_simulatability": round(float(np.mean(ens_sim)), 4) if ens_sim else 0.0,
            "single_simulatability": round(float(np.mean(single_sim)), 4) if single_sim else 0.0,
            "repetitions": len(ens_scores),
        })
    return Report(
        config=config,
        strategies={},
        series=series,
        runtime_seconds=time.perf_counter() - started,
    )
