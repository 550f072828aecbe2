"""Synthetic dependency-parsed corpora for desk-scale experiments and tests.

Lemmas follow a Zipf-like distribution; each lemma prefers a few relation
labels; trees are random recursive trees over the tokens of a sentence.
"""

from __future__ import annotations

import random

from .corpus import SentenceRecord, Token


def generate_corpus(
    n_sentences: int = 2000,
    n_lemmas: int = 50,
    n_relations: int = 10,
    zipf_exponent: float = 1.7,
    min_length: int = 4,
    max_length: int = 20,
    relations_per_lemma: int = 2,
    n_topics: int = 0,
    topic_size: int = 8,
    topic_share: float = 0.5,
    languages: tuple[str, ...] = (),
    seed: int = 0,
) -> list[SentenceRecord]:
    rng = random.Random(seed)
    lemmas = [f"w{r:02d}" for r in range(n_lemmas)]
    weights = [1.0 / (r + 1) ** zipf_exponent for r in range(n_lemmas)]
    relations = [f"rel{r}" for r in range(n_relations)]
    preferred = {lemma: rng.sample(relations, min(relations_per_lemma, n_relations)) for lemma in lemmas}
    topics = [rng.sample(range(n_lemmas), min(topic_size, n_lemmas)) for _ in range(n_topics)]

    sentences = []
    for s in range(n_sentences):
        n = rng.randint(min_length, max_length)
        if topics:
            topic = rng.choice(topics)
            topic_weights = [weights[r] for r in topic]
            words = [
                lemmas[rng.choices(topic, topic_weights)[0]] if rng.random() < topic_share
                else rng.choices(lemmas, weights)[0]
                for _ in range(n)
            ]
        else:
            words = rng.choices(lemmas, weights, k=n)
        # random recursive tree over a random order of the positions
        order = list(range(n))
        rng.shuffle(order)
        heads = [None] * n
        for k in range(1, n):
            heads[order[k]] = order[rng.randrange(k)]
        tokens = tuple(
            Token(
                surface_form=w,
                lemma=w,
                head_index=h,
                relation="root" if h is None else rng.choice(preferred[w]),
            )
            for w, h in zip(words, heads)
        )
        # a sentence counter keeps source texts unique under dedup
        text = " ".join(words) + f" s{s}"
        targets = {lang: f"{lang}: {text}" for lang in languages}
        sentences.append(SentenceRecord(f"syn{s:06d}", tokens, text, targets))
    return sentences
