"""Greedy divergence-targeted train/test splitting, plus random and external splits.

All randomness comes from one ``random.Random(seed)`` (Mersenne Twister
MT19937) instance per split, so a (corpus, config, seed) triple always
produces the same split.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .cache import VectorizedCorpus
from .divergence import DivergenceConfig, Side, SplitState, TraceLog, divergences_from_assignment, score

from .errors import CannotSplitError, SplitSizeError, ValidationError

log = logging.getLogger(__name__)

DISCARDED = 2


@dataclass(frozen=True)
class SplitConfig:
    divergence: DivergenceConfig = DivergenceConfig()
    train_fraction: float = 0.85
    candidate_pool: int | None = 100  # None scores every unassigned sentence
    max_assigned: int | None = None
    seed: int = 0
    allow_discard: bool = True
    # size control and discarding start once this many sentences are assigned
    ratio_band: float = 0.02
    ratio_min_assigned: int = 1000
    # discard only while the compound divergence is this close to its target
    discard_tolerance: float = 0.01
    trace_every: int = 100
    resync_every: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.candidate_pool is not None and self.candidate_pool < 1:
            raise ValueError("candidate_pool must be at least 1")
        if self.ratio_band < 0:
            raise ValueError("ratio_band must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SplitConfig":
        data = dict(data)
        div = data.pop("divergence", {}) or {}
        return cls(divergence=DivergenceConfig(**div), **data)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SplitStatistics:
    train_sentences: int
    test_sentences: int
    train_words: int
    test_words: int
    unique_lemmas: int
    mean_train_length: float
    mean_test_length: float


@dataclass
class SplitResult:
    train_ids: list[str]
    test_ids: list[str]
    discarded_ids: list[str]
    atom_divergence: float
    compound_divergence: float
    statistics: SplitStatistics
    method: str
    seed: int
    config: SplitConfig | None = None
    trace: TraceLog = field(default_factory=TraceLog)
    cache_fingerprint: str | None = None

    @property
    def score(self) -> float:
        cfg = self.config.divergence if self.config else DivergenceConfig()
        return float(score(self.atom_divergence, self.compound_divergence, cfg))

    def summary(self) -> dict:
        out = {
            "method": self.method,
            "seed": self.seed,
            "atom_divergence": self.atom_divergence,
            "compound_divergence": self.compound_divergence,
            "statistics": asdict(self.statistics),
            "discarded_sentences": len(self.discarded_ids),
            "cache_fingerprint": self.cache_fingerprint,
        }
        if self.config is not None:
            out["config"] = self.config.to_dict()
            out["config_hash"] = self.config.config_hash()
            out["target_compound_divergence"] = self.config.divergence.target_compound_divergence
        return out


def _new_state(vc: VectorizedCorpus, config: SplitConfig) -> SplitState:
    return SplitState(
        vc.atom_bags, vc.compound_bags, vc.n_atoms, vc.n_compounds, config.divergence, config.resync_every
    )


def _seed(state: SplitState, vc: VectorizedCorpus, rng: random.Random):
    eligible = np.flatnonzero(vc.compound_bags.row_sizes() > 0).tolist()
    if len(eligible) < 2:
        raise CannotSplitError(
            f"need at least 2 sentences with retained compounds to seed a split, found {len(eligible)}"
        )
    a, b = rng.sample(eligible, 2)
    state.add(a, Side.TRAIN)
    state.add(b, Side.TEST)


def seed_split(vc: VectorizedCorpus, config: SplitConfig) -> SplitState:
    """State with one seed sentence on each side, chosen among sentences with compounds."""
    state = _new_state(vc, config)
    _seed(state, vc, random.Random(config.seed))
    return state


def permissible_sides(n_train: int, n_test: int, config: SplitConfig) -> list[Side]:
    """Sides a new sentence may join without breaking the train-fraction band.

    Below ``ratio_min_assigned`` both sides are open. Above it, a side is open
    when the resulting train fraction stays within the band; if neither does,
    the side(s) that land closest to the target stay open.
    """
    n = n_train + n_test
    if n < config.ratio_min_assigned:
        return [Side.TRAIN, Side.TEST]
    dev = {
        Side.TRAIN: abs((n_train + 1) / (n + 1) - config.train_fraction),
        Side.TEST: abs(n_train / (n + 1) - config.train_fraction),
    }
    ok = [s for s in (Side.TRAIN, Side.TEST) if dev[s] <= config.ratio_band]
    if ok:
        return ok
    best = min(dev.values())
    return [s for s in (Side.TRAIN, Side.TEST) if dev[s] == best]


def greedy_step(state: SplitState, candidates, config: SplitConfig):
    """Score every (candidate, permissible side) pair; return the best.

    Returns ``(sentence, side, score, scores)`` where ``scores`` has shape
    (2, len(candidates)) with ``-inf`` for sides that were not open. Ties go to
    the lower sentence index, then to train.
    """
    candidates = np.asarray(candidates, dtype=np.int64)
    scores = np.full((2, len(candidates)), -np.inf)
    for side in permissible_sides(state.sizes[0], state.sizes[1], config):
        scores[side] = state.peek_batch(candidates, side)[2]
    best = scores.max()
    sides, cols = np.nonzero(scores == best)
    order = np.lexsort((sides, candidates[cols]))
    k = order[0]
    return int(candidates[cols[k]]), Side(int(sides[k])), float(best), scores


def greedy_split(vc: VectorizedCorpus, config: SplitConfig) -> SplitResult:
    """Place sentences one at a time to maximise -|c - D_C| - D_A.

    Each iteration draws up to ``candidate_pool`` unassigned sentences, peeks
    every permissible placement and applies the best one. With
    ``allow_discard``, a batch is dropped instead when its best placement
    would lower the score and move D_C away from its target, provided D_C is
    already within ``discard_tolerance`` of the target and the warm-up of
    ``ratio_min_assigned`` sentences is over.
    """
    rng = random.Random(config.seed)
    state = _new_state(vc, config)
    _seed(state, vc, rng)
    status = state.assignment.astype(np.int64)

    pool = np.flatnonzero(status < 0).tolist()
    position = {i: p for p, i in enumerate(pool)}

    def take(i):
        p = position.pop(i)
        last = pool.pop()
        if last != i:
            pool[p] = last
            position[last] = p

    cap = config.max_assigned if config.max_assigned is not None else len(vc)
    target = config.divergence.target_compound_divergence
    trace = TraceLog(config.trace_every)
    iteration = 0
    current_score = state.score()
    d_a, d_c = state.divergences()
    trace.record(iteration, d_a, d_c, current_score, *state.sizes, force=True)

    while pool and sum(state.sizes) < cap:
        iteration += 1
        k = len(pool) if config.candidate_pool is None else min(config.candidate_pool, len(pool))
        if k == len(pool):
            candidates = sorted(pool)
        else:
            candidates = [pool[p] for p in rng.sample(range(len(pool)), k)]
        i, side, best, _ = greedy_step(state, candidates, config)

        discard = False
        if (
            config.allow_discard
            and sum(state.sizes) >= config.ratio_min_assigned
            and abs(target - d_c) <= config.discard_tolerance
            and best < current_score
        ):
            new_dc = state.peek_delta(i, side)[1]
            discard = abs(target - new_dc) > abs(target - d_c)
        if discard:
            for j in candidates:
                take(j)
                status[j] = DISCARDED
        else:
            state.add(i, side)
            take(i)
            status[i] = side
            d_a, d_c = state.divergences()
            current_score = float(score(d_a, d_c, config.divergence))
        trace.record(iteration, d_a, d_c, current_score, *state.sizes)

    d_a, d_c = state.divergences()
    trace.record(iteration, d_a, d_c, current_score, *state.sizes, force=True)
    for j in pool:
        status[j] = DISCARDED  # left over once max_assigned is reached
    log.info("greedy split done: %d iterations, D_A=%.4f D_C=%.4f", iteration, d_a, d_c)
    return _result(vc, status, "greedy", config.seed, config, trace)


def random_split(vc: VectorizedCorpus, train_count: int, test_count: int, seed: int,
                 divergence: DivergenceConfig = DivergenceConfig()) -> SplitResult:
    """Uniform random disjoint train/test draw of the requested sizes."""
    if train_count < 1 or test_count < 1:
        raise SplitSizeError("random split needs at least one train and one test sentence")
    if train_count + test_count > len(vc):
        raise SplitSizeError(
            f"requested {train_count} + {test_count} sentences but the corpus has {len(vc)}"
        )
    rng = random.Random(seed)
    drawn = rng.sample(range(len(vc)), train_count + test_count)
    status = np.full(len(vc), DISCARDED, dtype=np.int64)
    status[drawn[:train_count]] = Side.TRAIN
    status[drawn[train_count:]] = Side.TEST
    config = SplitConfig(divergence=divergence, seed=seed)
    return _result(vc, status, "random", seed, config, TraceLog())


def split_statistics(vc: VectorizedCorpus, train_rows, test_rows) -> SplitStatistics:
    train_rows = np.asarray(train_rows, dtype=np.int64)
    test_rows = np.asarray(test_rows, dtype=np.int64)
    words = vc.word_counts
    both = np.concatenate([train_rows, test_rows])
    _, lemma_ids, _ = vc.lemma_bags.gather(both)
    w_train = int(words[train_rows].sum())
    w_test = int(words[test_rows].sum())
    return SplitStatistics(
        train_sentences=len(train_rows),
        test_sentences=len(test_rows),
        train_words=w_train,
        test_words=w_test,
        unique_lemmas=int(len(np.unique(lemma_ids))),
        mean_train_length=w_train / len(train_rows) if len(train_rows) else 0.0,
        mean_test_length=w_test / len(test_rows) if len(test_rows) else 0.0,
    )


def _result(vc, status, method, seed, config, trace) -> SplitResult:
    cfg = config.divergence if config else DivergenceConfig()
    d_a, d_c = divergences_from_assignment(vc.atom_bags, vc.compound_bags, np.where(status == DISCARDED, -1, status), cfg)
    train = np.flatnonzero(status == Side.TRAIN)
    test = np.flatnonzero(status == Side.TEST)
    rest = np.flatnonzero((status != Side.TRAIN) & (status != Side.TEST))
    return SplitResult(
        train_ids=[vc.ids[i] for i in train],
        test_ids=[vc.ids[i] for i in test],
        discarded_ids=[vc.ids[i] for i in rest],
        atom_divergence=d_a,
        compound_divergence=d_c,
        statistics=split_statistics(vc, train, test),
        method=method,
        seed=seed,
        config=config,
        trace=trace,
        cache_fingerprint=vc.fingerprint(),
    )


@dataclass
class SplitEvaluation:
    atom_divergence: float
    compound_divergence: float
    statistics: SplitStatistics


def evaluate_external_split(vc: VectorizedCorpus, train_ids: Iterable[str], test_ids: Iterable[str],
                            divergence: DivergenceConfig = DivergenceConfig()) -> SplitEvaluation:
    """Divergences and size statistics of any train/test id split of the corpus."""
    train_ids, test_ids = list(train_ids), list(test_ids)
    index = vc.index_of()
    for name, ids in (("train", train_ids), ("test", test_ids)):
        if not ids:
            raise ValidationError(f"{name} id set is empty")
        unknown = [sid for sid in ids if sid not in index]
        if unknown:
            raise ValidationError(f"{len(unknown)} unknown {name} ids, e.g. {unknown[0]!r}")
        if len(set(ids)) != len(ids):
            raise ValidationError(f"{name} id set contains repeated ids")
    overlap = set(train_ids) & set(test_ids)
    if overlap:
        raise ValidationError(f"train and test share {len(overlap)} ids, e.g. {sorted(overlap)[0]!r}")
    assignment = np.full(len(vc), -1, dtype=np.int64)
    train_rows = sorted(index[s] for s in train_ids)
    test_rows = sorted(index[s] for s in test_ids)
    assignment[train_rows] = Side.TRAIN
    assignment[test_rows] = Side.TEST
    d_a, d_c = divergences_from_assignment(vc.atom_bags, vc.compound_bags, assignment, divergence)
    return SplitEvaluation(d_a, d_c, split_statistics(vc, train_rows, test_rows))


def write_split(result: SplitResult, vc: VectorizedCorpus, out_dir) -> Path:
    """Write id files, summary, trace and aligned parallel text exports."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, ids in (("train", result.train_ids), ("test", result.test_ids), ("discarded", result.discarded_ids)):
        with open(out / f"{name}.ids", "w", encoding="utf-8", newline="\n") as f:
            f.writelines(sid + "\n" for sid in ids)
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(result.summary(), f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out / "trace.tsv", "w", encoding="utf-8", newline="\n") as f:
        meta = f"method={result.method} seed={result.seed}"
        if result.config is not None:
            meta += f" config_hash={result.config.config_hash()}"
        result.trace.write(f, meta)

    index = vc.index_of()
    for name, ids in (("train", result.train_ids), ("test", result.test_ids)):
        rows = [index[s] for s in ids]
        _write_text(out / f"{name}.src", (vc.source_texts[i] for i in rows))
        for lang, lines in sorted(vc.target_texts.items()):
            _write_text(out / f"{name}.{lang}", (lines[i] for i in rows))
    return out


def _write_text(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.writelines(line + "\n" for line in lines)


def read_ids(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]
