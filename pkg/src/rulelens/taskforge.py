"""Synthetic classification tasks with planted ground-truth explanations.

Tasks are generated programmatically: a random feature space, a planted
if-then explanation drawn from one of 24 complexity classes (quantifier
presence x conjunction shape x negation placement), and train/test batches
labeled by executing the planted rule. When the planted rule carries a
quantifier with confidence c, clause-true examples keep the rule's label
with probability max(c, 1-c) and flip otherwise, so the empirical rate of
the stated label among covered examples matches c.

Generation is deterministic in the seed: schema, explanation, examples and
label noise each draw from their own substream.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as rngmod
from .executor import clause_mask
from .lang import (
    BoolOp,
    ClauseTree,
    Comparator,
    Condition,
    Explanation,
    NEGATED_COMPARATORS,
    Node,
    QUANTIFIER_WORDS,
    Quantifier,
    clause_conditions,
    format_value,
    parse,
    render,
)
from .schema import (
    Example,
    FeatureKind,
    FeatureSchema,
    FeatureSpec,
    LabeledBatch,
    LabelKind,
    complement,
)


class SchemaTooSmall(ValueError):
    """Schema lacks the distinct features the requested clause shape needs."""


class BalanceUnreachable(RuntimeError):
    """Could not produce a batch with >= 10% of examples in each class."""


class LabelAbsent(ValueError):
    """Binarization target never occurs in the batch."""


MIN_CLASS_FRACTION = 0.10

CONJUNCTIONS = ("none", "simple", "nested")
NEGATIONS = ("none", "clause", "label", "clause+label")

# Nonsense vocabulary, so nothing downstream can exploit label semantics.
CATEGORICAL_VALUES = (
    "yes", "no", "africas", "europes", "asias", "americas", "antartica",
    "oceanias", "reds", "blues", "greens", "maybes", "norths", "souths",
)
LABEL_WORDS = (
    "blicket", "tupa", "fem", "dax", "wug", "toma", "gazzer", "spod", "fendle", "zav",
)

# Four-letter words the parser treats as keywords; never feature names.
_RESERVED_NAMES = frozenset({"then", "less", "than"})


@dataclass(frozen=True)
class ComplexityDescriptor:
    """One of the 24 complexity classes a planted explanation can have."""

    quantifier: bool
    conjunction: str
    negation: str

    def __post_init__(self):
        if self.conjunction not in CONJUNCTIONS:
            raise ValueError(f"conjunction must be one of {CONJUNCTIONS}")
        if self.negation not in NEGATIONS:
            raise ValueError(f"negation must be one of {NEGATIONS}")

    @property
    def clause_negated(self) -> bool:
        return self.negation in ("clause", "clause+label")

    @property
    def label_negated(self) -> bool:
        return self.negation in ("label", "clause+label")

    @property
    def num_conditions(self) -> int:
        return {"none": 1, "simple": 2, "nested": 3}[self.conjunction]

    def to_json(self) -> dict:
        return {
            "quantifier": self.quantifier,
            "conjunction": self.conjunction,
            "negation": self.negation,
        }

    @staticmethod
    def from_json(obj: dict) -> "ComplexityDescriptor":
        return ComplexityDescriptor(obj["quantifier"], obj["conjunction"], obj["negation"])


def all_descriptors() -> list[ComplexityDescriptor]:
    """All 24 complexity classes, in a fixed order."""
    return [
        ComplexityDescriptor(q, c, n)
        for q, c, n in itertools.product((False, True), CONJUNCTIONS, NEGATIONS)
    ]


def descriptor_of(expl: Explanation) -> ComplexityDescriptor:
    """Classify an explanation's complexity by inspecting its AST."""
    conds = clause_conditions(expl.clause)
    conjunction = CONJUNCTIONS[len(conds) - 1]
    clause_neg = any(c.comparator in NEGATED_COMPARATORS for c in conds)
    if clause_neg and expl.label_negated:
        negation = "clause+label"
    elif clause_neg:
        negation = "clause"
    elif expl.label_negated:
        negation = "label"
    else:
        negation = "none"
    return ComplexityDescriptor(expl.quantifier is not None, conjunction, negation)


@dataclass
class SyntheticTask:
    schema: FeatureSchema
    planted: Explanation
    train: LabeledBatch
    test: LabeledBatch
    descriptor: ComplexityDescriptor
    seed: int


# ---------------------------------------------------------------------------
# Schema and explanation sampling

def _sample_name(rng: np.random.Generator, taken: set[str]) -> str:
    while True:
        name = "".join(chr(ord("a") + k) for k in rng.integers(0, 26, size=4))
        if name not in taken and name not in _RESERVED_NAMES:
            return name


def sample_schema(num_features: int, seed: int) -> FeatureSchema:
    """Random feature space: 4-letter lowercase names, mixed feature kinds.

    Numeric features span random integer ranges; categorical domains hold
    2-5 nonsense words. At least one feature of each kind when there is room.
    """
    if num_features < 1:
        raise ValueError("num_features must be >= 1")
    rng = rngmod.substream(seed, rngmod.SCHEMA)
    taken: set[str] = set()
    kinds = [bool(rng.integers(0, 2)) for _ in range(num_features)]
    if num_features >= 2 and len(set(kinds)) == 1:
        kinds[int(rng.integers(0, num_features))] = not kinds[0]
    specs = []
    for is_numeric in kinds:
        name = _sample_name(rng, taken)
        taken.add(name)
        if is_numeric:
            lo = int(rng.integers(0, 1001))
            span = int(rng.integers(10, 1001))
            specs.append(FeatureSpec.numeric(name, lo, lo + span))
        else:
            size = int(rng.integers(2, 6))
            chosen = rng.choice(len(CATEGORICAL_VALUES), size=size, replace=False)
            specs.append(
                FeatureSpec.categorical(name, tuple(CATEGORICAL_VALUES[i] for i in sorted(chosen)))
            )
    return FeatureSchema(tuple(specs))


def _sample_condition(spec: FeatureSpec, negated: bool, rng: np.random.Generator) -> Condition:
    if spec.kind is FeatureKind.CATEGORICAL:
        value = spec.domain[int(rng.integers(0, len(spec.domain)))]
        return Condition(spec.name, Comparator.NEQ if negated else Comparator.EQ, value)
    # Thresholds stay in the central 80% of the range so the planted clause
    # is neither vacuous nor unreachable.
    span = spec.maximum - spec.minimum
    t = round(float(rng.uniform(spec.minimum + 0.1 * span, spec.maximum - 0.1 * span)), 2)
    if negated:
        comp = (Comparator.NGT, Comparator.NLT)[int(rng.integers(0, 2))]
    else:
        comp = (Comparator.GT, Comparator.LT, Comparator.GEQ, Comparator.LEQ)[int(rng.integers(0, 4))]
    return Condition(spec.name, comp, t)


def sample_explanation(
    descriptor: ComplexityDescriptor, schema: FeatureSchema, seed: int
) -> Explanation:
    """Draw a planted explanation matching the descriptor exactly."""
    k = descriptor.num_conditions
    if len(schema) < k:
        raise SchemaTooSmall(f"need {k} features, schema has {len(schema)}")
    rng = rngmod.substream(seed, rngmod.EXPLANATION)
    picked = rng.choice(len(schema), size=k, replace=False)
    conds = [
        _sample_condition(schema.features[int(i)], descriptor.clause_negated, rng)
        for i in picked
    ]
    clause: ClauseTree
    if k == 1:
        clause = conds[0]
    elif k == 2:
        op = (BoolOp.AND, BoolOp.OR)[int(rng.integers(0, 2))]
        clause = Node(op, conds[0], conds[1])
    else:
        # Nested pairs mix the operators: AND-OR or OR-AND.
        first = (BoolOp.AND, BoolOp.OR)[int(rng.integers(0, 2))]
        second = BoolOp.OR if first is BoolOp.AND else BoolOp.AND
        clause = Node(second, Node(first, conds[0], conds[1]), conds[2])
    quantifier = None
    if descriptor.quantifier:
        quantifier = Quantifier(QUANTIFIER_WORDS[int(rng.integers(0, len(QUANTIFIER_WORDS)))])
    label = LABEL_WORDS[int(rng.integers(0, len(LABEL_WORDS)))]
    return Explanation(
        clause=clause,
        quantifier=quantifier,
        label=label,
        label_negated=descriptor.label_negated,
    )


# ---------------------------------------------------------------------------
# Example generation

def _draw_columns(schema: FeatureSchema, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    cols: dict[str, np.ndarray] = {}
    for spec in schema:
        if spec.kind is FeatureKind.NUMERIC:
            cols[spec.name] = rng.integers(
                int(spec.minimum), int(spec.maximum) + 1, size=n
            ).astype(float)
        else:
            idx = rng.integers(0, len(spec.domain), size=n)
            cols[spec.name] = np.array(spec.domain, dtype=object)[idx]
    return cols


def _rows(cols: dict[str, np.ndarray], idx: np.ndarray, names: tuple[str, ...]) -> list[Example]:
    out = []
    for i in idx:
        values = {}
        for name in names:
            v = cols[name][i]
            values[name] = v if isinstance(v, str) else float(v)
        out.append(Example(values))
    return out


def _rule_labels(planted: Explanation) -> tuple[str, str]:
    """(label when the clause fires, label when it does not), noise-free."""
    loi = planted.label
    stated = complement(loi, loi) if planted.label_negated else loi
    conf = planted.quantifier.confidence if planted.quantifier else 1.0
    on_true = stated if conf >= 0.5 else complement(stated, loi)
    return on_true, complement(on_true, loi)


def _noisy_labels(
    planted: Explanation, mask: np.ndarray, noise_rng: Optional[np.random.Generator]
) -> list[str]:
    on_true, on_false = _rule_labels(planted)
    labels = [on_true if m else on_false for m in mask]
    conf = planted.quantifier.confidence if planted.quantifier else 1.0
    keep = max(conf, 1.0 - conf)
    if noise_rng is not None and keep < 1.0:
        loi = planted.label
        true_idx = np.flatnonzero(mask)
        if len(true_idx):
            flips = noise_rng.random(len(true_idx)) >= keep
            for i in true_idx[flips]:
                labels[i] = complement(labels[i], loi)
    return labels


def _sample_balanced_batch(
    schema: FeatureSchema,
    planted: Explanation,
    n: int,
    seed: int,
    which: int,
    kind: LabelKind,
) -> LabeledBatch:
    names = schema.names
    min_count = int(np.ceil(MIN_CLASS_FRACTION * n))
    for attempt in range(20):
        ex_rng = rngmod.substream(seed, rngmod.EXAMPLES, which, attempt)
        noise_rng = rngmod.substream(seed, rngmod.NOISE, which, attempt)
        frac_true = float(ex_rng.uniform(0.35, 0.65))
        want: dict[bool, int] = {}
        want[True] = min(max(int(round(frac_true * n)), 1), n - 1)
        want[False] = n - want[True]
        rows: dict[bool, list[Example]] = {True: [], False: []}
        drawn = 0
        cap = max(500 * n, 20_000)
        while (len(rows[True]) < want[True] or len(rows[False]) < want[False]) and drawn < cap:
            m = max(n, 512)
            cols = _draw_columns(schema, m, ex_rng)
            mask = clause_mask(planted.clause, cols)
            drawn += m
            for side in (True, False):
                need = want[side] - len(rows[side])
                if need > 0:
                    idx = np.flatnonzero(mask == side)[:need]
                    if len(idx):
                        rows[side].extend(_rows(cols, idx, names))
        if len(rows[True]) < want[True] or len(rows[False]) < want[False]:
            continue
        mask_vec = np.array([True] * want[True] + [False] * want[False])
        examples = rows[True] + rows[False]
        labels = _noisy_labels(planted, mask_vec, noise_rng)
        order = ex_rng.permutation(n)
        examples = [examples[i] for i in order]
        labels = [labels[i] for i in order]
        counts: dict[str, int] = {}
        for y in labels:
            counts[y] = counts.get(y, 0) + 1
        if len(counts) == 2 and min(counts.values()) >= min_count:
            return LabeledBatch(schema, examples, labels, kind, planted.label, validate=False)
    raise BalanceUnreachable(
        f"planted rule {render(planted)!r} cannot reach {MIN_CLASS_FRACTION:.0%} per class"
    )


def _sample_uniform_batch(
    schema: FeatureSchema,
    planted: Explanation,
    n: int,
    seed: int,
    which: int,
    kind: LabelKind,
) -> LabeledBatch:
    ex_rng = rngmod.substream(seed, rngmod.EXAMPLES, which, 0)
    noise_rng = rngmod.substream(seed, rngmod.NOISE, which, 0)
    cols = _draw_columns(schema, n, ex_rng)
    mask = clause_mask(planted.clause, cols) if n else np.zeros(0, dtype=bool)
    examples = _rows(cols, np.arange(n), schema.names)
    labels = _noisy_labels(planted, mask, noise_rng)
    return LabeledBatch(schema, examples, labels, kind, planted.label, validate=False)


def generate_task(
    descriptor: ComplexityDescriptor,
    num_features: int,
    n_train: int,
    n_test: int,
    seed: int,
) -> SyntheticTask:
    """Generate a full task: schema, planted explanation, train and test batches.

    The train batch is class-balanced (every class holds at least 10% of the
    examples) and carries PREDICTED labels: it plays the role of the
    input-prediction pairs an explainer sees. The test batch is an untouched
    uniform sample with GOLD labels for honest simulatability measurement.
    """
    if n_train < 10:
        raise ValueError("n_train must be >= 10")
    if n_test < 0:
        raise ValueError("n_test must be >= 0")
    schema = sample_schema(num_features, seed)
    planted = sample_explanation(descriptor, schema, seed)
    train = _sample_balanced_batch(schema, planted, n_train, seed, 0, LabelKind.PREDICTED)
    test = _sample_uniform_batch(schema, planted, n_test, seed, 1, LabelKind.GOLD)
    return SyntheticTask(schema, planted, train, test, descriptor, seed)


# ---------------------------------------------------------------------------
# Binarization and linearization

def binarize(batch: LabeledBatch, label_of_interest: str) -> LabeledBatch:
    """Re-frame labels as one-vs-rest: keep L, rewrite everything else to "not L"."""
    if label_of_interest not in batch.labels:
        raise LabelAbsent(f"label {label_of_interest!r} never occurs in the batch")
    labels = [
        y if y == label_of_interest else f"not {label_of_interest}" for y in batch.labels
    ]
    return LabeledBatch(
        batch.schema, batch.examples, labels, batch.label_kind, label_of_interest,
        validate=False,
    )


def linearize(batch: LabeledBatch) -> str:
    """One line per example, "f1: v1 | f2: v2 | ... | label: y", then "explanation:"."""
    if len(batch) == 0:
        raise ValueError("cannot linearize an empty batch")
    names = batch.schema.names
    lines = []
    for example, label in zip(batch.examples, batch.labels):
        parts = [f"{name}: {format_value(example[name])}" for name in names]
        parts.append(f"label: {label}")
        lines.append(" | ".join(parts))
    lines.append("explanation:")
    return "\n".join(lines)


def delinearize(
    text: str,
    schema: FeatureSchema,
    label_kind: LabelKind,
    label_of_interest: str,
) -> LabeledBatch:
    """Inverse of linearize, given the schema that typed the values."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[-1].strip() != "explanation:":
        raise ValueError("linearized text must end with an 'explanation:' line")
    examples = []
    labels = []
    for line in lines[:-1]:
        fields = line.split(" | ")
        values: dict[str, object] = {}
        label = None
        for field in fields:
            key, _, raw = field.partition(": ")
            if key == "label":
                label = raw
            else:
                spec = schema[key]
                values[key] = float(raw) if spec.kind is FeatureKind.NUMERIC else raw
        if label is None:
            raise ValueError(f"line missing label field: {line!r}")
        examples.append(Example(values))
        labels.append(label)
    return LabeledBatch(schema, examples, labels, label_kind, label_of_interest)


# ---------------------------------------------------------------------------
# On-disk task bundles

def _write_csv(path: str, batch: LabeledBatch) -> None:
    names = batch.schema.names
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["label"])
        for example, label in zip(batch.examples, batch.labels):
            writer.writerow([format_value(example[name]) for name in names] + [label])


def _read_csv(path: str, schema: FeatureSchema, kind: LabelKind, loi: str) -> LabeledBatch:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = header[:-1]
        examples = []
        labels = []
        for row in reader:
            values = {}
            for name, raw in zip(names, row[:-1]):
                spec = schema[name]
                values[name] = float(raw) if spec.kind is FeatureKind.NUMERIC else raw
            examples.append(Example(values))
            labels.append(row[-1])
    return LabeledBatch(schema, examples, labels, kind, loi, validate=False)


def save_task(task: SyntheticTask, directory: str) -> None:
    """Write schema.json, planted.txt, train.csv, test.csv and meta.json."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "schema.json"), "w") as fh:
        json.dump(task.schema.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(directory, "planted.txt"), "w") as fh:
        fh.write(render(task.planted) + "\n")
    _write_csv(os.path.join(directory, "train.csv"), task.train)
    _write_csv(os.path.join(directory, "test.csv"), task.test)
    meta = {
        "descriptor": task.descriptor.to_json(),
        "seed": task.seed,
        "label_of_interest": task.planted.label,
        "n_train": len(task.train),
        "n_test": len(task.test),
    }
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_task(directory: str) -> SyntheticTask:
    with open(os.path.join(directory, "schema.json")) as fh:
        schema = FeatureSchema.from_json(json.load(fh))
    with open(os.path.join(directory, "planted.txt")) as fh:
        planted = parse(fh.read().strip())
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)
    loi = meta["label_of_interest"]
    train = _read_csv(os.path.join(directory, "train.csv"), schema, LabelKind.PREDICTED, loi)
    test = _read_csv(os.path.join(directory, "test.csv"), schema, LabelKind.GOLD, loi)
    return SyntheticTask(
        schema, planted, train, test,
        ComplexityDescriptor.from_json(meta["descriptor"]), meta["seed"],
    )
