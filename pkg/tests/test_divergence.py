import io
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbcasplit.divergence import (
    BagMatrix,
    ChernoffAccumulator,
    DivergenceConfig,
    Side,
    SparseDistribution,
    SplitState,
    TraceLog,
    chernoff,
    divergences_from_assignment,
    is_close,
    score,
)
from dbcasplit.errors import StateError, UndefinedDivergenceError


def naive_chernoff(p: dict, q: dict, alpha: float) -> float:
    keys = sorted(set(p) | set(q))
    np_, nq = sum(p.values()), sum(q.values())
    return math.fsum((p.get(k, 0) / np_) ** alpha * (q.get(k, 0) / nq) ** (1 - alpha) for k in keys)


bags = st.dictionaries(st.integers(0, 30), st.integers(1, 50), min_size=1, max_size=20)
alphas = st.floats(0.01, 0.99)


@settings(max_examples=300, deadline=None)
@given(bags, bags, alphas)
def test_chernoff_matches_oracle_and_bounds(p, q, alpha):
    c = chernoff(SparseDistribution(p), SparseDistribution(q), alpha)
    assert abs(c - naive_chernoff(p, q, alpha)) <= 1e-12
    assert 0.0 <= c <= 1.0


@settings(max_examples=200, deadline=None)
@given(bags, bags)
def test_chernoff_symmetric_at_half(p, q):
    P, Q = SparseDistribution(p), SparseDistribution(q)
    assert abs(chernoff(P, Q, 0.5) - chernoff(Q, P, 0.5)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(bags, bags, alphas, st.integers(2, 9))
def test_chernoff_scale_invariant(p, q, alpha, k):
    P, Q = SparseDistribution(p), SparseDistribution(q)
    scaled = SparseDistribution({key: k * n for key, n in p.items()})
    assert abs(chernoff(P, Q, alpha) - chernoff(scaled, Q, alpha)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(bags, alphas, st.integers(1, 5))
def test_chernoff_equal_distributions_give_one(p, alpha, k):
    P = SparseDistribution(p)
    assert chernoff(P, P, alpha) == 1.0
    assert chernoff(P, SparseDistribution({key: k * n for key, n in p.items()}), alpha) == 1.0


@settings(max_examples=200, deadline=None)
@given(bags, bags, alphas)
def test_chernoff_below_one_when_different(p, q, alpha):
    P, Q = SparseDistribution(p), SparseDistribution(q)
    tp, tq = sum(p.values()), sum(q.values())
    same = set(p) == set(q) and all(p[k] * tq == q[k] * tp for k in p)
    assert (chernoff(P, Q, alpha) == 1.0) == same


def test_chernoff_worked_values():
    p = SparseDistribution({"a": 1, "b": 1})
    q = SparseDistribution({"a": 1})
    assert abs(chernoff(p, q, 0.5) - math.sqrt(0.5)) <= 1e-15
    assert abs((1 - chernoff(p, q, 0.5)) - 0.29289) < 1e-5
    assert chernoff(p, SparseDistribution({"c": 3}), 0.5) == 0.0


def test_chernoff_asymmetric_at_low_alpha():
    p = SparseDistribution({"a": 1, "b": 1})
    q = SparseDistribution({"a": 1})
    assert abs(chernoff(p, q, 0.1) - chernoff(q, p, 0.1)) > 0.1


def test_chernoff_empty_side_undefined():
    with pytest.raises(UndefinedDivergenceError):
        chernoff(SparseDistribution(), SparseDistribution({1: 1}), 0.5)


def test_sparse_distribution_invariants():
    d = SparseDistribution({1: 2})
    d.add(2, 3)
    d.add(1, -2)
    assert d.counts == {2: 3} and d.total == 3
    with pytest.raises(ValueError):
        d.add(2, -4)


def test_score_arithmetic():
    cfg = DivergenceConfig(target_compound_divergence=1.0)
    assert score(0.0, 1.0, cfg) == 0.0
    assert abs(score(0.1, 0.4, cfg) - (-0.7)) < 1e-15
    arr = score(np.array([0.0, 0.2]), np.array([0.5, 1.0]), cfg)
    assert np.all(arr <= 0)


def test_divergence_config_validation():
    for bad in ({"alpha_atom": 0.0}, {"alpha_compound": 1.0}, {"target_compound_divergence": 1.5}):
        with pytest.raises(ValueError):
            DivergenceConfig(**bad)


def random_bags(rng, n, n_keys, max_len=6, empty_rate=0.0):
    out = []
    for _ in range(n):
        if rng.random() < empty_rate:
            out.append({})
            continue
        bag = {}
        for _ in range(rng.randint(1, max_len)):
            k = rng.randrange(n_keys)
            bag[k] = bag.get(k, 0) + rng.randint(1, 3)
        out.append(bag)
    return out


def make_state(seed=0, n=60, n_atoms=15, n_comps=40, **kwargs):
    rng = random.Random(seed)
    atoms = BagMatrix.from_bags(random_bags(rng, n, n_atoms))
    comps = BagMatrix.from_bags(random_bags(rng, n, n_comps, empty_rate=0.1))
    return SplitState(atoms, comps, n_atoms, n_comps, DivergenceConfig(), **kwargs)


def oracle(state):
    return divergences_from_assignment(state.atom_bags, state.compound_bags, state.assignment, state.config)


def test_toy_divergence_examples():
    atoms = BagMatrix.from_bags([{0: 1, 1: 1}, {0: 1, 1: 1}, {0: 2}, {0: 2}])
    comps = BagMatrix.from_bags([{0: 1}, {0: 1}, {1: 1}, {2: 1}])
    st_ = SplitState(atoms, comps, 2, 3)
    st_.add(0, Side.TRAIN)
    st_.add(1, Side.TEST)
    assert st_.divergences() == pytest.approx((0.0, 0.0), abs=1e-12)
    st2 = SplitState(atoms, comps, 2, 3)
    st2.add(2, Side.TRAIN)
    st2.add(3, Side.TEST)
    d_a, d_c = st2.divergences()
    assert d_a == pytest.approx(0.0, abs=1e-12) and d_c == 1.0


def test_six_sentence_split_matches_oracle():
    state = make_state(seed=11, n=6)
    for i, side in enumerate([0, 1, 0, 0, 1, 0]):
        state.add(i, Side(side))
    inc = state.divergences()
    ref = oracle(state)
    assert all(is_close(a, b) for a, b in zip(inc, ref))


def test_add_remove_inverse():
    state = make_state(seed=1)
    for i in range(10):
        state.add(i, Side(i % 2))
    before = state.divergences()
    state.add(20, Side.TRAIN)
    state.remove(20)
    after = state.divergences()
    assert all(is_close(a, b) for a, b in zip(before, after))


def test_random_operations_match_oracle():
    state = make_state(seed=2, n=80)
    rng = random.Random(5)
    state.add(0, Side.TRAIN)
    state.add(1, Side.TEST)
    protected = {0, 1}
    for step in range(1000):
        assigned = [i for i in range(len(state)) if state.assignment[i] >= 0 and i not in protected]
        free = [i for i in range(len(state)) if state.assignment[i] < 0]
        if free and (not assigned or rng.random() < 0.6):
            state.add(rng.choice(free), Side(rng.randrange(2)))
        else:
            state.remove(rng.choice(assigned))
        inc, ref = state.divergences(), oracle(state)
        assert all(is_close(a, b) for a, b in zip(inc, ref)), (step, inc, ref)


def test_unnormalised_identity():
    state = make_state(seed=3)
    for i in range(20):
        state.add(i, Side(i % 3 == 0))
    acc = state.compounds
    n, m = acc.counts[0].sum(), acc.counts[1].sum()
    s = float(np.sum(acc.counts[0] ** acc.alpha * acc.counts[1] ** (1 - acc.alpha)))
    assert abs(state.compounds.coefficient() - s / (n ** acc.alpha * m ** (1 - acc.alpha))) <= 1e-12


def test_peek_is_pure_and_consistent():
    state = make_state(seed=4)
    for i in range(10):
        state.add(i, Side(i % 2))
    before = state.divergences()
    p1 = state.peek_delta(15, Side.TEST)
    p2 = state.peek_delta(15, Side.TEST)
    assert p1 == p2
    assert state.divergences() == before
    state.add(15, Side.TEST)
    d_a, d_c = state.divergences()
    assert abs(d_a - p1[0]) <= 1e-12 and abs(d_c - p1[1]) <= 1e-12


def test_peek_batch_matches_single_peeks_and_oracle():
    state = make_state(seed=5, n=200)
    for i in range(30):
        state.add(i, Side(i % 4 == 0))
    rows = np.arange(30, 200)
    for side in (Side.TRAIN, Side.TEST):
        d_a, d_c, s = state.peek_batch(rows, side)
        for k, i in enumerate(rows):
            single = state.peek_delta(int(i), side)
            assert abs(single[0] - d_a[k]) <= 1e-12 and abs(single[1] - d_c[k]) <= 1e-12
            if k % 17 == 0:
                trial = state.assignment.copy()
                trial[i] = side
                ref = divergences_from_assignment(state.atom_bags, state.compound_bags, trial, state.config)
                assert abs(ref[0] - d_a[k]) < 1e-9 and abs(ref[1] - d_c[k]) < 1e-9


def test_state_errors():
    state = make_state(seed=6)
    state.add(0, Side.TRAIN)
    with pytest.raises(StateError):
        state.add(0, Side.TEST)
    with pytest.raises(StateError):
        state.remove(1)
    with pytest.raises(StateError):
        state.apply_delta(0, Side.TEST, -1)


def test_empty_bag_leaves_divergences_unchanged():
    atoms = BagMatrix.from_bags([{0: 1}, {1: 1}, {0: 2, 1: 1}, {}])
    comps = BagMatrix.from_bags([{0: 1}, {0: 1, 1: 2}, {1: 1}, {}])
    state = SplitState(atoms, comps, 2, 2)
    state.add(0, Side.TRAIN)
    state.add(1, Side.TEST)
    state.add(2, Side.TRAIN)
    before = state.divergences()
    state.add(3, Side.TEST)
    assert state.divergences() == before


def test_empty_side_is_undefined():
    state = make_state(seed=7)
    state.add(0, Side.TRAIN)
    with pytest.raises(UndefinedDivergenceError):
        state.divergences()


def test_accumulator_resync_bounds_drift():
    acc = ChernoffAccumulator(5, 0.1, resync_every=50)
    rng = random.Random(0)
    for _ in range(2000):
        side = rng.randrange(2)
        k = rng.randrange(5)
        if acc.counts[side][k] > 0 and rng.random() < 0.4:
            acc.update(np.array([k]), np.array([-1.0]), side)
        else:
            acc.update(np.array([k]), np.array([1.0]), side)
    if acc.counts[0].sum() > 0 and acc.counts[1].sum() > 0:
        p = {k: v for k, v in enumerate(acc.counts[0]) if v}
        q = {k: v for k, v in enumerate(acc.counts[1]) if v}
        assert is_close(acc.coefficient(), naive_chernoff(p, q, 0.1))


def test_trace_log_format():
    log = TraceLog(every=2)
    for it in range(5):
        log.record(it, 0.1, 0.2, -0.3, it, 1)
    log.record(4, 0.1, 0.2, -0.3, 4, 1, force=True)
    out = io.StringIO()
    log.write(out, "seed=1")
    lines = out.getvalue().splitlines()
    assert lines[0] == "# seed=1"
    assert lines[1] == "iteration\tD_A\tD_C\tscore\ttrain_size\ttest_size"
    assert [line.split("\t")[0] for line in lines[2:]] == ["0", "2", "4"]
