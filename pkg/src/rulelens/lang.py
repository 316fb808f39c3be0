"""The if-then explanation language.

An explanation is one sentence of the form

    If <clause>, then [it is|<target> is] [<quantifier>] [not] <label>

where the clause is one comparison, or two or three comparisons joined
left-associatively by AND/OR. This module defines the abstract syntax,
the quantifier-to-confidence table, a parser from surface text, and the
canonical renderers.

parse() and render() are pure functions over immutable values and are safe
to call concurrently.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional, Union


class UnknownQuantifier(ValueError):
    """Raised for a hedging word outside the fixed vocabulary."""


class MissingQuantifier(ValueError):
    """Raised when a confidence rendering is requested for an unhedged explanation."""


class ParseError(ValueError):
    """Input does not match the explanation grammar.

    Carries the byte offset of the failure and the set of token kinds that
    would have been accepted there.
    """

    def __init__(self, text: str, offset: int, expected: set[str]):
        self.text = text
        self.offset = offset
        self.expected = frozenset(expected)
        want = ", ".join(sorted(self.expected))
        super().__init__(f"at byte {offset}: expected one of {{{want}}}")


# Confidence attached to each hedging word. Monotone non-increasing along
# this ordering; "certainly" is pinned at 0.95, the tails are symmetric.
QUANTIFIER_CONFIDENCE: dict[str, float] = {
    "always": 1.00,
    "certainly": 0.95,
    "definitely": 0.95,
    "usually": 0.90,
    "generally": 0.85,
    "likely": 0.70,
    "often": 0.70,
    "frequently": 0.65,
    "sometimes": 0.50,
    "occasionally": 0.40,
    "rarely": 0.15,
    "seldom": 0.10,
    "never": 0.00,
}

QUANTIFIER_WORDS: tuple[str, ...] = tuple(QUANTIFIER_CONFIDENCE)


def quantifier_confidence(word: str) -> float:
    """Confidence value for a hedging word, per the fixed table."""
    try:
        return QUANTIFIER_CONFIDENCE[word.lower()]
    except KeyError:
        raise UnknownQuantifier(f"unknown quantifier: {word!r}") from None


class Comparator(enum.Enum):
    EQ = "equal to"
    NEQ = "not equal to"
    GT = "greater than"
    LT = "lesser than"
    GEQ = "greater than or equal to"
    LEQ = "lesser than or equal to"
    NGT = "not greater than"
    NLT = "not lesser than"

    @property
    def words(self) -> str:
        return self.value

    @property
    def numeric_only(self) -> bool:
        return self is not Comparator.EQ and self is not Comparator.NEQ


#: Comparators whose surface form carries a negation. NGT evaluates like LEQ
#: and NLT like GEQ, but the spellings are distinct and round-trip distinctly.
NEGATED_COMPARATORS = frozenset({Comparator.NEQ, Comparator.NGT, Comparator.NLT})

Value = Union[float, str]


def format_value(value: Value) -> str:
    """Canonical spelling of a condition/feature value.

    Numbers drop trailing zeros ("1014.0" renders as "1014"); text is verbatim.
    """
    if isinstance(value, bool):  # bool is an int subclass; don't format as 1/0
        return str(value)
    if isinstance(value, (int, float)):
        f = float(value)
        if f.is_integer():
            return str(int(f))
        return repr(f)
    return str(value)


def coerce_value(token: str) -> Value:
    """Interpret a surface token as a number when possible, else keep the text."""
    try:
        return float(token)
    except ValueError:
        return token


@dataclass(frozen=True)
class Condition:
    """One comparison: ``<feature> <comparator> <value>``."""

    feature: str
    comparator: Comparator
    value: Value

    def __post_init__(self):
        if not self.feature:
            raise ValueError("condition feature name must be non-empty")
        if self.comparator.numeric_only and not isinstance(self.value, (int, float)):
            raise ValueError(
                f"{self.comparator.name} requires a numeric value, got {self.value!r}"
            )

    def render(self) -> str:
        return f"{self.feature} {self.comparator.words} {format_value(self.value)}"


class BoolOp(enum.Enum):
    AND = "AND"
    OR = "OR"


@dataclass(frozen=True)
class Node:
    """Binary AND/OR over clause trees.

    Trees are kept in left-associative canonical shape (the right child is
    always a single condition) and hold at most two binary nodes, so every
    tree renders without parentheses and re-parses to itself.
    """

    op: BoolOp
    left: "ClauseTree"
    right: Condition

    def __post_init__(self):
        if isinstance(self.left, Node) and isinstance(self.left.left, Node):
            raise ValueError("clause trees are limited to two binary operators")
        if not isinstance(self.right, Condition):
            raise ValueError("clause trees are left-associative: right child must be a condition")

    def render(self) -> str:
        return f"{self.left.render()} {self.op.value} {self.right.render()}"


ClauseTree = Union[Condition, Node]


def clause_conditions(clause: ClauseTree) -> list[Condition]:
    """Conditions of a clause in left-to-right surface order."""
    if isinstance(clause, Condition):
        return [clause]
    return clause_conditions(clause.left) + [clause.right]


@dataclass(frozen=True)
class Quantifier:
    """A hedging word with its fixed confidence value."""

    word: str
    confidence: float = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "word", self.word.lower())
        object.__setattr__(self, "confidence", quantifier_confidence(self.word))


@dataclass(frozen=True)
class Explanation:
    """A full if-then explanation.

    The label never carries a textual "not "; negation lives in
    ``label_negated``. ``target_name`` is the optional subject of the
    consequent ("patient" in "then patient is generally No").
    """

    clause: ClauseTree
    quantifier: Optional[Quantifier] = None
    label: str = ""
    label_negated: bool = False
    target_name: Optional[str] = None

    def __post_init__(self):
        if not self.label:
            raise ValueError("explanation label must be non-empty")
        if self.label.startswith("not "):
            raise ValueError("label negation must use label_negated, not a 'not ' prefix")

    def render(self) -> str:
        return render(self)

    def to_json(self) -> dict:
        return {
            "clause": _clause_to_json(self.clause),
            "quantifier": self.quantifier.word if self.quantifier else None,
            "label": self.label,
            "label_negated": self.label_negated,
            "target_name": self.target_name,
        }

    @staticmethod
    def from_json(obj: dict) -> "Explanation":
        quant = obj.get("quantifier")
        return Explanation(
            clause=_clause_from_json(obj["clause"]),
            quantifier=Quantifier(quant) if quant else None,
            label=obj["label"],
            label_negated=bool(obj.get("label_negated", False)),
            target_name=obj.get("target_name"),
        )


def _clause_to_json(clause: ClauseTree) -> dict:
    if isinstance(clause, Condition):
        return {
            "feature": clause.feature,
            "comparator": clause.comparator.name,
            "value": clause.value,
        }
    return {
        "op": clause.op.value,
        "left": _clause_to_json(clause.left),
        "right": _clause_to_json(clause.right),
    }


def _clause_from_json(obj: dict) -> ClauseTree:
    if "feature" in obj:
        return Condition(obj["feature"], Comparator[obj["comparator"]], obj["value"])
    return Node(BoolOp(obj["op"]), _clause_from_json(obj["left"]), _clause_from_json(obj["right"]))


def render(expl: Explanation) -> str:
    """Canonical surface form; the inverse of parse() on canonical strings."""
    parts = []
    if expl.target_name is not None:
        parts += [expl.target_name, "is"]
    elif expl.quantifier is not None:
        parts += ["it", "is"]
    if expl.quantifier is not None:
        parts.append(expl.quantifier.word)
    if expl.label_negated:
        parts.append("not")
    parts.append(expl.label)
    return f"If {expl.clause.render()}, then {' '.join(parts)}"


def render_with_confidence(expl: Explanation) -> str:
    """Rewrite the hedging word as a percentage, e.g.

    "If Education not equal to Dropout, then Income is certainly >50K"
    becomes "95% of the time, the Income is >50K if Education not equal to Dropout".
    """
    if expl.quantifier is None:
        raise MissingQuantifier("explanation has no quantifier to convert")
    pct = round(expl.quantifier.confidence * 100)
    subject = f"the {expl.target_name}" if expl.target_name is not None else "it"
    verb = "is not" if expl.label_negated else "is"
    return f"{pct}% of the time, {subject} {verb} {expl.label} if {expl.clause.render()}"


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(r"[^\s,]+|,")

# Multi-word comparators, longest spelling first so e.g. "greater than or
# equal to" wins over "greater than". "less than" is accepted as a synonym
# for the canonical "lesser than".
_COMPARATOR_SPELLINGS: list[tuple[tuple[str, ...], Comparator]] = [
    (("greater", "than", "or", "equal", "to"), Comparator.GEQ),
    (("lesser", "than", "or", "equal", "to"), Comparator.LEQ),
    (("less", "than", "or", "equal", "to"), Comparator.LEQ),
    (("not", "equal", "to"), Comparator.NEQ),
    (("not", "greater", "than"), Comparator.NGT),
    (("not", "lesser", "than"), Comparator.NLT),
    (("not", "less", "than"), Comparator.NLT),
    (("equal", "to"), Comparator.EQ),
    (("greater", "than"), Comparator.GT),
    (("lesser", "than"), Comparator.LT),
    (("less", "than"), Comparator.LT),
]


class _Tokens:
    """Token stream with byte offsets, for error reporting."""

    def __init__(self, text: str):
        self.text = text
        clipped = text.rstrip()
        # A sentence-final period is surface sugar; strip exactly one.
        if clipped.endswith(".") and not clipped.endswith(".."):
            clipped = clipped[:-1]
        self.tokens = [(m.group(), m.start()) for m in _TOKEN_RE.finditer(clipped)]
        self.pos = 0

    def peek(self, ahead: int = 0) -> Optional[str]:
        i = self.pos + ahead
        return self.tokens[i][0] if i < len(self.tokens) else None

    def next(self) -> Optional[str]:
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def offset(self, at: Optional[int] = None) -> int:
        i = self.pos if at is None else at
        if i < len(self.tokens):
            return self.tokens[i][1]
        return len(self.text)

    def fail(self, expected: set[str]) -> ParseError:
        return ParseError(self.text, self.offset(), expected)


def _match_keyword(tok: Optional[str], word: str) -> bool:
    return tok is not None and tok.lower() == word


def _parse_comparator(ts: _Tokens) -> Comparator:
    lowered = [t.lower() for t, _ in ts.tokens[ts.pos:]]
    for spelling, comp in _COMPARATOR_SPELLINGS:
        if tuple(lowered[: len(spelling)]) == spelling:
            ts.pos += len(spelling)
            return comp
    raise ts.fail({"comparator"})


def _parse_condition(ts: _Tokens) -> Condition:
    feature = ts.peek()
    if feature is None or feature == ",":
        raise ts.fail({"feature name"})
    ts.next()
    comparator = _parse_comparator(ts)
    value_tok = ts.peek()
    if value_tok is None or value_tok == ",":
        raise ts.fail({"value"})
    ts.next()
    value = coerce_value(value_tok)
    if comparator.numeric_only and not isinstance(value, float):
        raise ParseError(ts.text, ts.offset(ts.pos - 1), {"numeric value"})
    return Condition(feature, comparator, value)


def _parse_clause(ts: _Tokens) -> ClauseTree:
    clause: ClauseTree = _parse_condition(ts)
    ops = 0
    while True:
        tok = ts.peek()
        if _match_keyword(tok, "and") or _match_keyword(tok, "or"):
            if ops == 2:
                raise ts.fail({","})
            ts.next()
            op = BoolOp.AND if tok.lower() == "and" else BoolOp.OR
            clause = Node(op, clause, _parse_condition(ts))
            ops += 1
        else:
            return clause


def _parse_consequent(ts: _Tokens) -> tuple[Optional[str], Optional[Quantifier], bool, str]:
    """Returns (target_name, quantifier, label_negated, label)."""
    words = [t for t, _ in ts.tokens[ts.pos:]]
    if not words:
        raise ts.fail({"label"})

    target: Optional[str] = None
    quantifier: Optional[Quantifier] = None
    rest = words

    # "<subject> is ..." prefix: subject "it" is sugar, anything else names
    # the target. Only split when a label remains on the right of "is".
    is_at = next((i for i, w in enumerate(words) if w.lower() == "is"), None)
    if is_at is not None and 1 <= is_at < len(words) - 1:
        subject = words[:is_at]
        rest = words[is_at + 1:]
        if not (len(subject) == 1 and subject[0].lower() == "it"):
            target = " ".join(subject)

    if rest[0].lower() in QUANTIFIER_CONFIDENCE and len(rest) > 1:
        quantifier = Quantifier(rest[0])
        rest = rest[1:]

    negated = False
    if rest[0].lower() == "not" and len(rest) > 1:
        negated = True
        rest = rest[1:]

    return target, quantifier, negated, " ".join(rest)


def parse(text: str) -> Explanation:
    """Parse one explanation sentence into its AST.

    Keywords are case-insensitive and a trailing period is ignored; feature
    names, values, labels and target names are kept verbatim.
    """
    ts = _Tokens(text)
    if not _match_keyword(ts.peek(), "if"):
        raise ts.fail({"If"})
    ts.next()
    clause = _parse_clause(ts)
    if ts.peek() != ",":
        raise ts.fail({","})
    ts.next()
    if not _match_keyword(ts.peek(), "then"):
        raise ts.fail({"then"})
    ts.next()
    target, quantifier, negated, label = _parse_consequent(ts)
    if not label:
        raise ts.fail({"label"})
    return Explanation(
        clause=clause,
        quantifier=quantifier,
        label=label,
        label_negated=negated,
        target_name=target,
    )
