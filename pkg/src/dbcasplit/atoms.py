"""Atoms (lemmas and relation tags) and compounds (head, relation, dependant triples).

Lemma atoms are frequency filtered: the most frequent lemmas and the rare ones
are left out of the distributions. Compounds carry the weight of their
(dependant, relation) sub-compound, which is low when one head lemma accounts
for most of the pair's occurrences; low-weight compounds are dropped.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable

from .corpus import SentenceRecord

LEMMA = "lemma"
RELATION = "rel"


@dataclass(frozen=True)
class FilterPolicy:
    top_k_excluded: int = 200
    min_count: int = 10
    weight_threshold: float = 0.5

    def __post_init__(self):
        if self.top_k_excluded < 0 or self.min_count < 0:
            raise ValueError("top_k_excluded and min_count must be non-negative")
        if not 0.0 <= self.weight_threshold <= 1.0:
            raise ValueError("weight_threshold must lie in [0, 1]")


def extract_edges(sentence: SentenceRecord) -> Counter:
    """Return the multiset of ``(head_lemma, relation, dependant_lemma)`` triples.

    Lemmas are lowercased. Tokens attached to ROOT yield nothing.
    """
    tokens = sentence.source_tokens
    edges = Counter()
    for tok in tokens:
        if tok.head_index is None:
            continue
        head = tokens[tok.head_index]
        edges[head.lemma.lower(), tok.relation, tok.lemma.lower()] += 1
    return edges


def lemma_counts(corpus: Iterable[SentenceRecord]) -> Counter:
    return Counter(tok.lemma.lower() for sent in corpus for tok in sent.source_tokens)


def build_lemma_filter(corpus: Iterable[SentenceRecord], policy: FilterPolicy) -> set[str]:
    """Lemmas kept as atoms: all minus the ``top_k_excluded`` most frequent minus the rare ones.

    Frequency ties at the top-k boundary go by lexicographic lemma order.
    """
    counts = lemma_counts(corpus)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    excluded = {lemma for lemma, _ in ranked[: policy.top_k_excluded]}
    return {lemma for lemma, n in counts.items() if n >= policy.min_count and lemma not in excluded}


@dataclass
class AtomInventory:
    """Interned atoms. Ids are dense and follow first occurrence in the corpus."""

    atoms: list[tuple[str, str]] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)
    index: dict[tuple[str, str], int] = field(default_factory=dict)

    def __len__(self):
        return len(self.atoms)

    def intern(self, kind: str, text: str) -> int:
        key = (kind, text)
        i = self.index.get(key)
        if i is None:
            i = self.index[key] = len(self.atoms)
            self.atoms.append(key)
            self.counts.append(0)
        return i

    def get(self, kind: str, text: str) -> int | None:
        return self.index.get((kind, text))

    def dump(self, f: IO[str]):
        for (kind, text), n in zip(self.atoms, self.counts):
            f.write(f"{kind}\t{text}\t{n}\n")


@dataclass
class CompoundInventory:
    """Every observed triple, with its sub-compound weight and retain flag."""

    compounds: list[tuple[str, str, str]] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    retained: list[bool] = field(default_factory=list)
    index: dict[tuple[str, str, str], int] = field(default_factory=dict)

    def __len__(self):
        return len(self.compounds)

    def get(self, triple) -> int | None:
        return self.index.get(tuple(triple))

    def weight(self, triple) -> float:
        return self.weights[self.index[tuple(triple)]]

    @property
    def n_retained(self) -> int:
        return sum(self.retained)

    def dump(self, f: IO[str]):
        for (h, r, d), n, w, keep in zip(self.compounds, self.counts, self.weights, self.retained):
            f.write(f"{h}\t{r}\t{d}\t{n}\t{w!r}\t{int(keep)}\n")


def compute_compound_weights(
    corpus: Iterable[SentenceRecord], retained_lemmas: set[str], weight_threshold: float = 0.5
) -> CompoundInventory:
    """Weigh each compound by head diversity of its (dependant, relation) pair.

    weight(h, r, d) = 1 - max_h' n(h', r, d) / n(., r, d), over all edges of the
    corpus. A compound is retained when its weight reaches ``weight_threshold``
    and both of its lemmas are retained.
    """
    inv = CompoundInventory()
    for sent in corpus:
        for triple, n in extract_edges(sent).items():
            i = inv.index.get(triple)
            if i is None:
                i = inv.index[triple] = len(inv.compounds)
                inv.compounds.append(triple)
                inv.counts.append(0)
            inv.counts[i] += n

    pair_total = defaultdict(int)
    pair_max = defaultdict(int)
    for (h, r, d), n in zip(inv.compounds, inv.counts):
        pair_total[r, d] += n
        pair_max[r, d] = max(pair_max[r, d], n)

    for h, r, d in inv.compounds:
        total = pair_total[r, d]
        w = (total - pair_max[r, d]) / total
        inv.weights.append(w)
        inv.retained.append(w >= weight_threshold and h in retained_lemmas and d in retained_lemmas)
    return inv


@dataclass
class Inventories:
    atoms: AtomInventory
    compounds: CompoundInventory
    retained_lemmas: set[str]
    policy: FilterPolicy


def build_atom_inventory(corpus: Iterable[SentenceRecord], retained_lemmas: set[str]) -> AtomInventory:
    """Retained lemmas and every relation tag that labels an edge."""
    inv = AtomInventory()
    for sent in corpus:
        for kind, text in _atom_occurrences(sent, retained_lemmas):
            inv.counts[inv.intern(kind, text)] += 1
    return inv


def _atom_occurrences(sent: SentenceRecord, retained_lemmas):
    for tok in sent.source_tokens:
        lemma = tok.lemma.lower()
        if lemma in retained_lemmas:
            yield LEMMA, lemma
        if tok.head_index is not None:
            yield RELATION, tok.relation


def build_inventories(corpus, policy: FilterPolicy = FilterPolicy()) -> Inventories:
    corpus = list(corpus)
    retained = build_lemma_filter(corpus, policy)
    atoms = build_atom_inventory(corpus, retained)
    compounds = compute_compound_weights(corpus, retained, policy.weight_threshold)
    return Inventories(atoms, compounds, retained, policy)


def vectorize(sentence: SentenceRecord, atom_inv: AtomInventory, compound_inv: CompoundInventory):
    """Atom and compound count bags of one sentence, keyed by inventory id.

    Lemmas count once per token occurrence; relation tags once per edge.
    Items that are not in the inventory or not retained are skipped.
    """
    atom_bag = Counter()
    for tok in sentence.source_tokens:
        i = atom_inv.get(LEMMA, tok.lemma.lower())
        if i is not None:
            atom_bag[i] += 1
        if tok.head_index is not None:
            i = atom_inv.get(RELATION, tok.relation)
            if i is not None:
                atom_bag[i] += 1

    compound_bag = Counter()
    for triple, n in extract_edges(sentence).items():
        i = compound_inv.index.get(triple)
        if i is not None and compound_inv.retained[i]:
            compound_bag[i] += n
    return atom_bag, compound_bag
