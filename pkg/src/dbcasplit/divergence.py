"""Chernoff coefficients and atom/compound divergences between train and test.

The split state never normalises its count vectors. For raw counts c (train)
and d (test) with totals N and M it keeps

    S = sum_k c_k**a * d_k**(1 - a)

so that C_a = S / (N**a * M**(1 - a)). Moving one sentence changes S only on
the keys of that sentence's bags, which makes a placement O(bag size).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import StateError, UndefinedDivergenceError


class Side(IntEnum):
    TRAIN = 0
    TEST = 1


class Direction(IntEnum):
    ADD = 1
    REMOVE = -1


UNASSIGNED = -1


class SparseDistribution:
    """Unnormalised sparse counts with a cached total. Zero entries are never stored."""

    __slots__ = ("counts", "total")

    def __init__(self, counts: Mapping | None = None):
        self.counts = {}
        self.total = 0
        if counts:
            for k, n in counts.items():
                self.add(k, n)

    def add(self, key, n=1):
        if n == 0:
            return
        new = self.counts.get(key, 0) + n
        if new < 0:
            raise ValueError(f"count of {key!r} would become negative")
        if new == 0:
            del self.counts[key]
        else:
            self.counts[key] = new
        self.total += n

    def update(self, bag: Mapping, sign: int = 1):
        for k, n in bag.items():
            self.add(k, sign * n)

    def __len__(self):
        return len(self.counts)

    def __repr__(self):
        return f"SparseDistribution(total={self.total}, support={len(self.counts)})"


def chernoff(p: SparseDistribution, q: SparseDistribution, alpha: float) -> float:
    """Chernoff coefficient sum_k p_k**alpha * q_k**(1 - alpha) of the normalised distributions."""
    if p.total <= 0 or q.total <= 0:
        raise UndefinedDivergenceError("Chernoff coefficient of an empty distribution is undefined")
    if len(p.counts) == len(q.counts) and all(
        k in q.counts and n * q.total == q.counts[k] * p.total for k, n in p.counts.items()
    ):
        return 1.0  # identical after normalisation; avoids rounding just below 1
    small, large = (p.counts, q.counts) if len(p.counts) <= len(q.counts) else (q.counts, p.counts)
    s = 0.0
    for k in small:
        if k in large:
            s += (p.counts[k] / p.total) ** alpha * (q.counts[k] / q.total) ** (1.0 - alpha)
    return min(1.0, s)


@dataclass(frozen=True)
class DivergenceConfig:
    target_compound_divergence: float = 1.0
    alpha_atom: float = 0.5
    alpha_compound: float = 0.1
    target_atom_divergence: float = 0.0

    def __post_init__(self):
        for name in ("alpha_atom", "alpha_compound"):
            a = getattr(self, name)
            if not 0.0 < a < 1.0:
                raise ValueError(f"{name} must lie strictly between 0 and 1, got {a}")
        if not 0.0 <= self.target_compound_divergence <= 1.0:
            raise ValueError("target_compound_divergence must lie in [0, 1]")
        if not 0.0 <= self.target_atom_divergence <= 1.0:
            raise ValueError("target_atom_divergence must lie in [0, 1]")


def score(d_atom, d_compound, config: DivergenceConfig):
    """Greedy objective: minus the distances of both divergences from their targets.

    Works elementwise on arrays. The maximum is 0.
    """
    return -abs(config.target_compound_divergence - d_compound) - abs(
        config.target_atom_divergence - d_atom
    )


class BagMatrix:
    """Per-sentence count bags in CSR layout: row ``i`` is ``ids[indptr[i]:indptr[i+1]]``."""

    def __init__(self, indptr, ids, counts):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.ids = np.asarray(ids, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.float64)

    @classmethod
    def from_bags(cls, bags: Sequence[Mapping[int, int]]) -> "BagMatrix":
        indptr = np.zeros(len(bags) + 1, dtype=np.int64)
        ids, counts = [], []
        for i, bag in enumerate(bags):
            keys = sorted(bag)
            ids.extend(keys)
            counts.extend(bag[k] for k in keys)
            indptr[i + 1] = len(ids)
        return cls(indptr, ids, counts)

    def __len__(self):
        return len(self.indptr) - 1

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.ids[lo:hi], self.counts[lo:hi]

    def bag(self, i) -> Counter:
        ids, counts = self.row(i)
        return Counter({int(k): int(n) for k, n in zip(ids, counts)})

    def row_sizes(self):
        return np.diff(self.indptr)

    def gather(self, rows):
        """Concatenate several rows; returns (owner position, ids, counts)."""
        rows = np.asarray(rows, dtype=np.int64)
        starts = self.indptr[rows]
        lens = self.indptr[rows + 1] - starts
        total = int(lens.sum())
        owner = np.repeat(np.arange(len(rows)), lens)
        offsets = np.cumsum(lens) - lens
        flat = np.arange(total) - np.repeat(offsets, lens) + np.repeat(starts, lens)
        return owner, self.ids[flat], self.counts[flat]

    def total_counts(self, rows, size) -> np.ndarray:
        _, ids, counts = self.gather(rows)
        return np.bincount(ids, weights=counts, minlength=size)


class ChernoffAccumulator:
    """Incrementally maintained Chernoff coefficient between two dense count vectors.

    ``counts[0]`` is the train side (exponent ``alpha``), ``counts[1]`` the test
    side (exponent ``1 - alpha``). The running sum is rebuilt from the counts
    every ``resync_every`` updates, and whenever it drops below
    ``resync_ratio`` of its peak since the last rebuild.
    """

    def __init__(self, size: int, alpha: float, resync_every: int = 10_000, resync_ratio: float = 1e-6):
        self.alpha = alpha
        self.exponents = (alpha, 1.0 - alpha)
        self.counts = np.zeros((2, size), dtype=np.float64)
        self.totals = np.zeros(2, dtype=np.float64)
        self.sum_term = 0.0
        self.resync_every = resync_every
        self.resync_ratio = resync_ratio
        self._peak = 0.0
        self._ops = 0

    def _deltas(self, ids, x, side: int):
        a = self.exponents[side]
        c = self.counts[side, ids]
        other = self.counts[1 - side, ids]
        return (np.power(c + x, a) - np.power(c, a)) * np.power(other, 1.0 - a)

    def _normaliser(self, n_train, n_test):
        if np.any(np.asarray(n_train) <= 0) or np.any(np.asarray(n_test) <= 0):
            raise UndefinedDivergenceError("divergence undefined while one side is empty")
        return np.power(n_train, self.alpha) * np.power(n_test, 1.0 - self.alpha)

    def coefficient(self) -> float:
        c = self.sum_term / self._normaliser(self.totals[0], self.totals[1])
        return float(min(1.0, max(0.0, c)))

    def update(self, ids, x, side: int):
        """Add signed counts ``x`` on keys ``ids`` to one side. ``ids`` must be unique."""
        if len(ids) == 0:
            return
        new = self.counts[side, ids] + x
        if np.any(new < 0):
            raise StateError("count would become negative")
        self.sum_term += float(np.sum(self._deltas(ids, x, side)))
        self.counts[side, ids] = new
        self.totals[side] += float(np.sum(x))
        self._ops += 1
        self._peak = max(self._peak, abs(self.sum_term))
        if self._ops % self.resync_every == 0 or abs(self.sum_term) < self.resync_ratio * self._peak:
            self.recompute()

    def peek(self, ids, x, side: int) -> float:
        s = self.sum_term + float(np.sum(self._deltas(ids, x, side))) if len(ids) else self.sum_term
        totals = self.totals.copy()
        totals[side] += float(np.sum(x))
        c = s / self._normaliser(totals[0], totals[1])
        return float(min(1.0, max(0.0, c)))

    def peek_batch(self, owner, ids, x, side: int, n_owners: int) -> np.ndarray:
        """Coefficients after adding each owner's keys, one owner at a time."""
        s = self.sum_term + np.bincount(owner, weights=self._deltas(ids, x, side), minlength=n_owners)
        added = np.bincount(owner, weights=x, minlength=n_owners)
        totals = [np.full(n_owners, self.totals[0]), np.full(n_owners, self.totals[1])]
        totals[side] = totals[side] + added
        c = s / self._normaliser(totals[0], totals[1])
        return np.clip(c, 0.0, 1.0)

    def recompute(self):
        a = self.alpha
        both = (self.counts[0] > 0) & (self.counts[1] > 0)
        self.sum_term = float(np.sum(np.power(self.counts[0, both], a) * np.power(self.counts[1, both], 1.0 - a)))
        self.totals = self.counts.sum(axis=1)
        self._peak = abs(self.sum_term)


class SplitState:
    """Train/test atom and compound distributions over an indexed set of sentences."""

    def __init__(
        self,
        atom_bags: BagMatrix,
        compound_bags: BagMatrix,
        n_atoms: int,
        n_compounds: int,
        config: DivergenceConfig = DivergenceConfig(),
        resync_every: int = 10_000,
    ):
        if len(atom_bags) != len(compound_bags):
            raise ValueError("atom and compound bags must cover the same sentences")
        self.atom_bags = atom_bags
        self.compound_bags = compound_bags
        self.config = config
        self.atoms = ChernoffAccumulator(n_atoms, config.alpha_atom, resync_every)
        self.compounds = ChernoffAccumulator(n_compounds, config.alpha_compound, resync_every)
        self.assignment = np.full(len(atom_bags), UNASSIGNED, dtype=np.int8)
        self.sizes = [0, 0]

    def __len__(self):
        return len(self.assignment)

    def apply_delta(self, i: int, side: Side, direction: Direction = Direction.ADD):
        side = Side(side)
        direction = Direction(direction)
        current = self.assignment[i]
        if direction is Direction.ADD:
            if current != UNASSIGNED:
                raise StateError(f"sentence {i} is already assigned to {Side(current).name}")
        elif current != side:
            where = "unassigned" if current == UNASSIGNED else f"assigned to {Side(current).name}"
            raise StateError(f"cannot remove sentence {i} from {side.name}: it is {where}")
        ids, x = self.atom_bags.row(i)
        self.atoms.update(ids, direction * x, side)
        ids, x = self.compound_bags.row(i)
        self.compounds.update(ids, direction * x, side)
        self.assignment[i] = side if direction is Direction.ADD else UNASSIGNED
        self.sizes[side] += int(direction)

    def add(self, i: int, side: Side):
        self.apply_delta(i, side, Direction.ADD)

    def remove(self, i: int):
        side = self.assignment[i]
        if side == UNASSIGNED:
            raise StateError(f"sentence {i} is not assigned")
        self.apply_delta(i, Side(side), Direction.REMOVE)

    def divergences(self) -> tuple[float, float]:
        return 1.0 - self.atoms.coefficient(), 1.0 - self.compounds.coefficient()

    def score(self) -> float:
        d_a, d_c = self.divergences()
        return float(score(d_a, d_c, self.config))

    def peek_delta(self, i: int, side: Side) -> tuple[float, float, float]:
        """Divergences and score if sentence ``i`` were added to ``side``; state is untouched."""
        if self.assignment[i] != UNASSIGNED:
            raise StateError(f"sentence {i} is already assigned")
        ids, x = self.atom_bags.row(i)
        d_a = 1.0 - self.atoms.peek(ids, x, side)
        ids, x = self.compound_bags.row(i)
        d_c = 1.0 - self.compounds.peek(ids, x, side)
        return d_a, d_c, float(score(d_a, d_c, self.config))

    def peek_batch(self, rows, side: Side):
        """Vectorised :meth:`peek_delta` over several candidate sentences."""
        rows = np.asarray(rows, dtype=np.int64)
        owner, ids, x = self.atom_bags.gather(rows)
        d_a = 1.0 - self.atoms.peek_batch(owner, ids, x, side, len(rows))
        owner, ids, x = self.compound_bags.gather(rows)
        d_c = 1.0 - self.compounds.peek_batch(owner, ids, x, side, len(rows))
        return d_a, d_c, score(d_a, d_c, self.config)

    def resync(self):
        self.atoms.recompute()
        self.compounds.recompute()

    def recompute_divergences(self) -> tuple[float, float]:
        """Divergences rebuilt from the current assignment alone."""
        return divergences_from_assignment(self.atom_bags, self.compound_bags, self.assignment, self.config)

    def members(self, side: Side) -> np.ndarray:
        return np.flatnonzero(self.assignment == side)


def side_distributions(bags: BagMatrix, rows: Iterable[int]) -> SparseDistribution:
    dist = SparseDistribution()
    for i in rows:
        ids, x = bags.row(i)
        for k, n in zip(ids.tolist(), x.tolist()):
            dist.add(k, n)
    return dist


def divergences_from_assignment(atom_bags, compound_bags, assignment, config: DivergenceConfig):
    """Atom and compound divergences computed from scratch with sparse dictionaries."""
    assignment = np.asarray(assignment)
    train = np.flatnonzero(assignment == Side.TRAIN)
    test = np.flatnonzero(assignment == Side.TEST)
    d_a = 1.0 - chernoff(side_distributions(atom_bags, train), side_distributions(atom_bags, test), config.alpha_atom)
    d_c = 1.0 - chernoff(
        side_distributions(compound_bags, train), side_distributions(compound_bags, test), config.alpha_compound
    )
    return d_a, d_c


class TraceLog:
    """Append-only tab-separated convergence log."""

    header = "iteration\tD_A\tD_C\tscore\ttrain_size\ttest_size"

    def __init__(self, every: int = 1):
        self.every = max(1, every)
        self.rows: list[tuple[int, float, float, float, int, int]] = []

    def record(self, iteration, d_a, d_c, s, n_train, n_test, force=False):
        if force or iteration % self.every == 0:
            if self.rows and self.rows[-1][0] == iteration:
                return
            self.rows.append((iteration, d_a, d_c, s, n_train, n_test))

    def write(self, f: IO[str], preamble: str | None = None):
        if preamble:
            f.write(f"# {preamble}\n")
        f.write(self.header + "\n")
        for it, d_a, d_c, s, ntr, nte in self.rows:
            f.write(f"{it}\t{d_a:.12f}\t{d_c:.12f}\t{s:.12f}\t{ntr}\t{nte}\n")


def is_close(a: float, b: float, rel: float = 1e-9, abs_floor: float = 1e-12) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_floor)
