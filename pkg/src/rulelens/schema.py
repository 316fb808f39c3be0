"""Typed tabular feature spaces and labeled example batches."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Union

from .lang import format_value

Value = Union[float, str]


class FeatureKind(enum.Enum):
    CATEGORICAL = "categorical"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class FeatureSpec:
    """One feature: a categorical with a finite domain, or a bounded numeric."""

    name: str
    kind: FeatureKind
    domain: tuple[str, ...] = ()
    minimum: float = 0.0
    maximum: float = 0.0

    def __post_init__(self):
        if self.kind is FeatureKind.CATEGORICAL:
            if not self.domain:
                raise ValueError(f"categorical feature {self.name!r} needs a non-empty domain")
        else:
            if not self.minimum < self.maximum:
                raise ValueError(f"numeric feature {self.name!r} needs min < max")

    @staticmethod
    def categorical(name: str, domain: Iterable[str]) -> "FeatureSpec":
        return FeatureSpec(name, FeatureKind.CATEGORICAL, domain=tuple(domain))

    @staticmethod
    def numeric(name: str, minimum: float, maximum: float) -> "FeatureSpec":
        return FeatureSpec(name, FeatureKind.NUMERIC, minimum=float(minimum), maximum=float(maximum))

    def contains(self, value: Value) -> bool:
        if self.kind is FeatureKind.CATEGORICAL:
            return value in self.domain
        return isinstance(value, (int, float)) and self.minimum <= float(value) <= self.maximum

    def to_json(self) -> dict:
        if self.kind is FeatureKind.CATEGORICAL:
            return {"name": self.name, "kind": self.kind.value, "domain": list(self.domain)}
        return {"name": self.name, "kind": self.kind.value, "min": self.minimum, "max": self.maximum}

    @staticmethod
    def from_json(obj: dict) -> "FeatureSpec":
        if obj["kind"] == FeatureKind.CATEGORICAL.value:
            return FeatureSpec.categorical(obj["name"], obj["domain"])
        return FeatureSpec.numeric(obj["name"], obj["min"], obj["max"])


@dataclass(frozen=True)
class FeatureSchema:
    """An ordered feature space with unique names."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def __getitem__(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def validate_example(self, example: "Example") -> None:
        if set(example.values) != set(self.names):
            raise ValueError(
                f"example keys {sorted(example.values)} do not match schema {sorted(self.names)}"
            )
        for spec in self.features:
            if not spec.contains(example.values[spec.name]):
                raise ValueError(
                    f"value {example.values[spec.name]!r} outside {spec.name!r}'s "
                    f"{spec.kind.value} domain"
                )

    def to_json(self) -> dict:
        return {"features": [f.to_json() for f in self.features]}

    @staticmethod
    def from_json(obj: dict) -> "FeatureSchema":
        return FeatureSchema(tuple(FeatureSpec.from_json(f) for f in obj["features"]))


@dataclass(frozen=True)
class Example:
    """A single row: feature name -> value."""

    values: dict[str, Value]

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))

    def __getitem__(self, feature: str) -> Value:
        return self.values[feature]

    def __contains__(self, feature: str) -> bool:
        return feature in self.values

    def __hash__(self):
        return hash(tuple(sorted((k, format_value(v)) for k, v in self.values.items())))

    def __eq__(self, other):
        return isinstance(other, Example) and self.values == other.values


class LabelKind(enum.Enum):
    PREDICTED = "predicted"  # labels came from the classifier under study
    GOLD = "gold"            # labels are task ground truth


def complement(label: str, label_of_interest: str) -> str:
    """The other side of the binary framing: L <-> "not L"."""
    return label_of_interest if label != label_of_interest else f"not {label_of_interest}"


class LabeledBatch:
    """Examples paired with labels.

    ``label_kind`` records whether the labels are classifier predictions
    (faithfulness is measured against these) or gold labels (simulatability).
    After binarization every label is ``label_of_interest`` or
    ``"not " + label_of_interest``.
    """

    def __init__(
        self,
        schema: FeatureSchema,
        examples: list[Example],
        labels: list[str],
        label_kind: LabelKind,
        label_of_interest: str,
        validate: bool = True,
    ):
        if len(examples) != len(labels):
            raise ValueError("examples and labels must align")
        self.schema = schema
        self.examples = list(examples)
        self.labels = [str(y) for y in labels]
        self.label_kind = label_kind
        self.label_of_interest = label_of_interest
        if validate:
            for ex in self.examples:
                schema.validate_example(ex)

    def __len__(self) -> int:
        return len(self.examples)

    def __eq__(self, other):
        return (
            isinstance(other, LabeledBatch)
            and self.schema == other.schema
            and self.examples == other.examples
            and self.labels == other.labels
            and self.label_kind == other.label_kind
            and self.label_of_interest == other.label_of_interest
        )

    @property
    def is_binarized(self) -> bool:
        allowed = {self.label_of_interest, f"not {self.label_of_interest}"}
        return all(y in allowed for y in self.labels)

    def class_fractions(self) -> dict[str, float]:
        counts: dict[str, int] = {}
        for y in self.labels:
            counts[y] = counts.get(y, 0) + 1
        n = max(len(self.labels), 1)
        return {y: c / n for y, c in counts.items()}

    def subset(self, indices: Iterable[int]) -> "LabeledBatch":
        idx = list(indices)
        return LabeledBatch(
            self.schema,
            [self.examples[i] for i in idx],
            [self.labels[i] for i in idx],
            self.label_kind,
            self.label_of_interest,
            validate=False,
        )
