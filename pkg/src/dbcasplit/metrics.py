"""chrF / chrF++ translation scores and the min-to-max generalisation ratio."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ValidationError

_PUNCTUATION = frozenset("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")


@dataclass(frozen=True)
class ChrfConfig:
    char_ngram_max: int = 6
    word_ngram_max: int = 2
    beta: float = 2.0

    def __post_init__(self):
        if self.char_ngram_max < 1 or self.word_ngram_max < 0:
            raise ValueError("n-gram orders must be positive (word order may be 0 for plain chrF)")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def _ngrams(items, n) -> Counter:
    return Counter(tuple(items[i : i + n]) for i in range(len(items) - n + 1))


def _words(text: str) -> list[str]:
    # chrF++ word tokens: whitespace split, one leading or trailing punctuation mark split off
    out = []
    for w in text.split():
        if len(w) > 1 and w[-1] in _PUNCTUATION:
            out += [w[:-1], w[-1]]
        elif len(w) > 1 and w[0] in _PUNCTUATION:
            out += [w[0], w[1:]]
        else:
            out.append(w)
    return out


def segment_statistics(hypothesis: str, reference: str, config: ChrfConfig = ChrfConfig()) -> list[tuple[int, int, int]]:
    """Per order ``(hyp n-grams, ref n-grams, matches)``, character orders first.

    An order for which the reference has no n-grams contributes no hypothesis
    n-grams either, so it is skipped for that segment.
    """
    hyp_chars = "".join(hypothesis.split())
    ref_chars = "".join(reference.split())
    hyp_words = _words(hypothesis)
    ref_words = _words(reference)
    stats = []
    orders = [(hyp_chars, ref_chars, n) for n in range(1, config.char_ngram_max + 1)]
    orders += [(hyp_words, ref_words, n) for n in range(1, config.word_ngram_max + 1)]
    for hyp, ref, n in orders:
        h = _ngrams(hyp, n)
        r = _ngrams(ref, n)
        n_ref = sum(r.values())
        n_hyp = sum(h.values()) if n_ref else 0
        matches = sum(min(c, r[g]) for g, c in h.items() if g in r)
        stats.append((n_hyp, n_ref, matches))
    return stats


def f_score(stats: Sequence[tuple[int, int, int]], beta: float) -> float:
    """F-beta of precision and recall averaged over the orders that have both sides."""
    precision = recall = 0.0
    effective = 0
    for n_hyp, n_ref, matches in stats:
        if n_hyp > 0 and n_ref > 0:
            precision += matches / n_hyp
            recall += matches / n_ref
            effective += 1
    if effective == 0:
        return 0.0
    precision /= effective
    recall /= effective
    if precision + recall == 0:
        return 0.0
    b2 = beta * beta
    return 100.0 * (1 + b2) * precision * recall / (b2 * precision + recall)


def corpus_statistics(hypotheses: Sequence[str], references: Sequence[str], config: ChrfConfig = ChrfConfig()):
    if len(hypotheses) != len(references):
        raise ValidationError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise ValidationError("chrF needs at least one segment")
    total = [[0, 0, 0] for _ in range(config.char_ngram_max + config.word_ngram_max)]
    for hyp, ref in zip(hypotheses, references):
        for acc, seg in zip(total, segment_statistics(hyp, ref, config)):
            for k in range(3):
                acc[k] += seg[k]
    return [tuple(t) for t in total]


def chrf(hypotheses: Sequence[str], references: Sequence[str], config: ChrfConfig = ChrfConfig()) -> float:
    """Corpus-level chrF (chrF2++ with the default config), in [0, 100].

    N-gram statistics are summed over all segments before precision and recall
    are taken.
    """
    return f_score(corpus_statistics(hypotheses, references, config), config.beta)


@dataclass(frozen=True)
class LanguageResult:
    chrf_min_split: float
    chrf_max_split: float

    @property
    def generalisation_score(self) -> float:
        return self.chrf_max_split / self.chrf_min_split


@dataclass(frozen=True)
class GeneralisationReport:
    languages: dict[str, LanguageResult]

    def __getitem__(self, lang) -> LanguageResult:
        return self.languages[lang]

    def rows(self):
        for lang in sorted(self.languages):
            r = self.languages[lang]
            yield lang, r.chrf_min_split, r.chrf_max_split, r.generalisation_score


def generalisation_score(results_min: Mapping[str, float], results_max: Mapping[str, float]) -> GeneralisationReport:
    """Ratio of max-divergence to min-divergence chrF per language.

    Both absolute scores are kept in the report alongside the ratio.
    """
    if set(results_min) != set(results_max):
        missing = sorted(set(results_min) ^ set(results_max))
        raise ValidationError(f"languages missing from one of the splits: {', '.join(missing)}")
    out = {}
    for lang in results_min:
        lo, hi = results_min[lang], results_max[lang]
        if lo is None or hi is None:
            raise ValidationError(f"missing chrF value for {lang}")
        if lo <= 0:
            raise ValidationError(f"min-split chrF for {lang} must be positive, got {lo}")
        out[lang] = LanguageResult(float(lo), float(hi))
    return GeneralisationReport(out)


def mean(values: Sequence[float]) -> float:
    if not values:
        raise ValidationError("cannot average an empty list of scores")
    return sum(values) / len(values)
