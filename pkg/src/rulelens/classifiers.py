"""A small deterministic classifier zoo for the experiment harness.

Logistic regression and the one-hidden-layer network train by full-batch
gradient descent from seeded initializations; the decision tree grows by
greedy Gini splits with a depth cap. Same seed, same data, same model —
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as rngmod
from .schema import Example, FeatureKind, FeatureSchema


class UnsupportedKind(ValueError):
    """Classifier kind not in the zoo."""


KINDS = ("logistic", "tree", "mlp")
_ALIASES = {"lr": "logistic", "dt": "tree", "decision-tree": "tree", "nn": "mlp", "network": "mlp"}


def canonical_kind(kind: str) -> str:
    k = _ALIASES.get(kind.lower(), kind.lower())
    if k not in KINDS:
        raise UnsupportedKind(f"unknown classifier kind {kind!r}; pick from {KINDS}")
    return k


class _Encoder:
    """One-hot categoricals plus standardized numerics, stats from train data."""

    def __init__(self, schema: FeatureSchema, examples: list[Example]):
        self.schema = schema
        self.numeric = [s.name for s in schema if s.kind is FeatureKind.NUMERIC]
        self.one_hot = [
            (s.name, v) for s in schema if s.kind is FeatureKind.CATEGORICAL for v in s.domain
        ]
        if self.numeric:
            raw = np.array(
                [[float(ex[name]) for name in self.numeric] for ex in examples], dtype=float
            )
            self.mean = raw.mean(axis=0)
            std = raw.std(axis=0)
            self.std = np.where(std > 0, std, 1.0)
        else:
            self.mean = np.zeros(0)
            self.std = np.ones(0)

    @property
    def width(self) -> int:
        return len(self.numeric) + len(self.one_hot)

    def transform(self, examples: list[Example]) -> np.ndarray:
        n = len(examples)
        X = np.zeros((n, self.width))
        for i, ex in enumerate(examples):
            for j, name in enumerate(self.numeric):
                X[i, j] = (float(ex[name]) - self.mean[j]) / self.std[j]
            base = len(self.numeric)
            for j, (name, value) in enumerate(self.one_hot):
                X[i, base + j] = 1.0 if str(ex[name]) == value else 0.0
        return X


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class TrainedClassifier:
    """A fitted model exposing unmetered prediction.

    Wrap :meth:`predict` in a :class:`rulelens.baselines.ClassifierHandle`
    to meter calls against a budget.
    """

    kind: str
    _predict_batch: callable

    def predict(self, example: Example) -> str:
        return self._predict_batch([example])[0]

    def predict_batch(self, examples: list[Example]) -> list[str]:
        return self._predict_batch(examples)


def _train_linear(
    schema: FeatureSchema,
    examples: list[Example],
    labels: list[str],
    seed: int,
    hidden: int = 0,
    epochs: int = 300,
    lr: float = 0.5,
) -> TrainedClassifier:
    encoder = _Encoder(schema, examples)
    classes = sorted(set(labels))
    class_index = {c: i for i, c in enumerate(classes)}
    X = encoder.transform(examples)
    Y = np.zeros((len(examples), len(classes)))
    for i, y in enumerate(labels):
        Y[i, class_index[y]] = 1.0
    n, d, k = len(X), X.shape[1], len(classes)

    if hidden == 0:
        W = np.zeros((d + 1, k))
        Xb = np.hstack([X, np.ones((n, 1))])
        for _ in range(epochs):
            grad = Xb.T @ (_softmax(Xb @ W) - Y) / n
            W -= lr * grad

        def forward(Z: np.ndarray) -> np.ndarray:
            return np.hstack([Z, np.ones((len(Z), 1))]) @ W

    else:
        rng = rngmod.substream(seed, rngmod.CLASSIFIER)
        W1 = rng.normal(0.0, 0.3, size=(d + 1, hidden))
        W2 = rng.normal(0.0, 0.3, size=(hidden + 1, k))
        for _ in range(epochs):
            Xb = np.hstack([X, np.ones((n, 1))])
            H = np.tanh(Xb @ W1)
            Hb = np.hstack([H, np.ones((n, 1))])
            P = _softmax(Hb @ W2)
            delta2 = (P - Y) / n
            grad2 = Hb.T @ delta2
            delta1 = (delta2 @ W2[:-1].T) * (1 - H**2)
            grad1 = Xb.T @ delta1
            W2 -= lr * grad2
            W1 -= lr * grad1

        def forward(Z: np.ndarray) -> np.ndarray:
            H = np.tanh(np.hstack([Z, np.ones((len(Z), 1))]) @ W1)
            return np.hstack([H, np.ones((len(H), 1))]) @ W2

    def predict_batch(batch: list[Example]) -> list[str]:
        scores = forward(encoder.transform(batch))
        return [classes[i] for i in scores.argmax(axis=1)]

    return TrainedClassifier("mlp" if hidden else "logistic", predict_batch)


# ---------------------------------------------------------------------------
# Decision tree

@dataclass
class _TreeNode:
    feature: Optional[str] = None
    threshold: Optional[float] = None  # numeric split: go left when <= threshold
    category: Optional[str] = None     # categorical split: go left when == category
    left: Optional["_TreeNode"] = None
    right: Optional["_TreeNode"] = None
    label: Optional[str] = None        # set on leaves


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p**2).sum())


def _majority(labels: list[str]) -> str:
    counts: dict[str, int] = {}
    for y in labels:
        counts[y] = counts.get(y, 0) + 1
    top = max(counts.values())
    return min(y for y, c in counts.items() if c == top)


def _best_split(schema, rows, y_idx, n_classes):
    """Lowest weighted-Gini split, ties to the earliest feature/candidate."""
    n = len(y_idx)
    base_counts = np.bincount(y_idx, minlength=n_classes)
    best = None  # (impurity, feature_pos, kind, point, left_mask)
    for pos, spec in enumerate(schema):
        col = rows[spec.name]
        if spec.kind is FeatureKind.NUMERIC:
            order = np.argsort(col, kind="stable")
            sorted_vals = col[order]
            sorted_y = y_idx[order]
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), sorted_y] = 1.0
            prefix = onehot.cumsum(axis=0)
            boundaries = np.flatnonzero(sorted_vals[1:] > sorted_vals[:-1])
            for b in boundaries:
                left_counts = prefix[b]
                right_counts = base_counts - left_counts
                n_left = b + 1
                imp = (n_left * _gini(left_counts) + (n - n_left) * _gini(right_counts)) / n
                if best is None or imp < best[0] - 1e-12:
                    threshold = float((sorted_vals[b] + sorted_vals[b + 1]) / 2)
                    best = (imp, pos, "numeric", threshold, col <= threshold)
        else:
            for value in spec.domain:
                left_mask = np.array([v == value for v in col], dtype=bool)
                n_left = int(left_mask.sum())
                if n_left == 0 or n_left == n:
                    continue
                left_counts = np.bincount(y_idx[left_mask], minlength=n_classes)
                right_counts = base_counts - left_counts
                imp = (n_left * _gini(left_counts) + (n - n_left) * _gini(right_counts)) / n
                if best is None or imp < best[0] - 1e-12:
                    best = (imp, pos, "categorical", value, left_mask)
    return best


def _grow_tree(schema, rows, labels, classes, depth, max_depth) -> _TreeNode:
    y_idx = np.array([classes.index(y) for y in labels])
    if depth >= max_depth or len(set(labels)) <= 1 or len(labels) < 2:
        return _TreeNode(label=_majority(labels))
    split = _best_split(schema, rows, y_idx, len(classes))
    parent_imp = _gini(np.bincount(y_idx, minlength=len(classes)))
    if split is None or split[0] >= parent_imp - 1e-12:
        return _TreeNode(label=_majority(labels))
    _, pos, kind, point, left_mask = split
    spec = schema.features[pos]
    left_rows = {k: v[left_mask] for k, v in rows.items()}
    right_rows = {k: v[~left_mask] for k, v in rows.items()}
    left_labels = [y for y, m in zip(labels, left_mask) if m]
    right_labels = [y for y, m in zip(labels, left_mask) if not m]
    return _TreeNode(
        feature=spec.name,
        threshold=point if kind == "numeric" else None,
        category=point if kind == "categorical" else None,
        left=_grow_tree(schema, left_rows, left_labels, classes, depth + 1, max_depth),
        right=_grow_tree(schema, right_rows, right_labels, classes, depth + 1, max_depth),
    )


def _train_tree(
    schema: FeatureSchema,
    examples: list[Example],
    labels: list[str],
    max_depth: int = 3,
) -> TrainedClassifier:
    rows: dict[str, np.ndarray] = {}
    for spec in schema:
        values = [ex[spec.name] for ex in examples]
        rows[spec.name] = (
            np.asarray(values, dtype=float)
            if spec.kind is FeatureKind.NUMERIC
            else np.asarray([str(v) for v in values], dtype=object)
        )
    classes = sorted(set(labels))
    root = _grow_tree(schema, rows, labels, classes, 0, max_depth)

    def predict_one(ex: Example) -> str:
        node = root
        while node.label is None:
            if node.threshold is not None:
                go_left = float(ex[node.feature]) <= node.threshold
            else:
                go_left = str(ex[node.feature]) == node.category
            node = node.left if go_left else node.right
        return node.label

    return TrainedClassifier("tree", lambda batch: [predict_one(ex) for ex in batch])


def train(
    kind: str,
    schema: FeatureSchema,
    examples: list[Example],
    labels: list[str],
    seed: int = 0,
    max_depth: int = 3,
    hidden_units: int = 16,
) -> TrainedClassifier:
    """Train one zoo member on the given rows."""
    if not examples:
        raise ValueError("cannot train on an empty set")
    k = canonical_kind(kind)
    if len(set(labels)) == 1:
        constant = labels[0]
        return TrainedClassifier(k, lambda batch: [constant for _ in batch])
    if k == "logistic":
        return _train_linear(schema, examples, labels, seed)
    if k == "mlp":
        return _train_linear(schema, examples, labels, seed, hidden=hidden_units, epochs=400, lr=0.3)
    return _train_tree(schema, examples, labels, max_depth=max_depth)
