"""Surface-similarity metrics between explanation strings.

Sentence-scale BLEU and ROUGE over a fixed lowercase tokenization.
BLEU uses n-grams up to 4 with uniform weights and a brevity penalty;
precisions for n > 1 get add-one smoothing because explanations are short
(10-20 tokens) and unsmoothed BLEU collapses to 0 too often at that scale.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Sequence


class EmptyInput(ValueError):
    """Candidate or reference had no tokens."""


_TOKEN_RE = re.compile(r"\d+\.\d+|\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Deterministic lowercase tokenization: words, numbers, punctuation marks."""
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[str], references: Sequence[Sequence[str]]) -> float:
    """BLEU-4 of a candidate against one or more references."""
    if not candidate:
        raise EmptyInput("empty candidate")
    if not references or any(not r for r in references):
        raise EmptyInput("empty reference")

    log_sum = 0.0
    for n in range(1, 5):
        cand_counts = _ngram_counts(candidate, n)
        max_ref: Counter = Counter()
        for ref in references:
            for gram, count in _ngram_counts(ref, n).items():
                if count > max_ref[gram]:
                    max_ref[gram] = count
        matched = sum(min(count, max_ref[gram]) for gram, count in cand_counts.items())
        total = sum(cand_counts.values())
        if n == 1:
            if matched == 0:
                return 0.0
            precision = matched / total
        else:
            precision = (matched + 1) / (total + 1)
        log_sum += math.log(precision) / 4

    cand_len = len(candidate)
    ref_len = min((len(r) for r in references), key=lambda L: (abs(L - cand_len), L))
    brevity = 1.0 if cand_len >= ref_len else math.exp(1 - ref_len / cand_len)
    return brevity * math.exp(log_sum)


def rouge_n(
    candidate: Sequence[str], reference: Sequence[str], n: int
) -> tuple[float, float, float]:
    """n-gram overlap precision, recall, and F1 (n in {1, 2})."""
    if n not in (1, 2):
        raise ValueError("rouge_n supports n in {1, 2}")
    if not candidate or not reference:
        raise EmptyInput("empty input")
    cand_counts = _ngram_counts(candidate, n)
    ref_counts = _ngram_counts(reference, n)
    overlap = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    cand_total = sum(cand_counts.values())
    ref_total = sum(ref_counts.values())
    if cand_total == 0 or ref_total == 0:
        return 0.0, 0.0, 0.0
    precision = overlap / cand_total
    recall = overlap / ref_total
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # One-row dynamic program; inputs are short sentences.
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = cur
    return row[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Longest-common-subsequence F1."""
    if not candidate or not reference:
        raise EmptyInput("empty input")
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 2 * precision * recall / (precision + recall)
