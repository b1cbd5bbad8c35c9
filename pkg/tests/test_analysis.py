import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotortree.algorithms import rotor_push_serve
from rotortree.analysis import (
    InequalityViolated,
    check_random_round,
    check_reference_swap,
    check_rotor_round,
    credit,
    credits,
    expected_random_round,
    random_credit_run,
    rotor_credit_run,
    working_set_bound,
)
from rotortree.ranks import working_set_ranks
from rotortree.rotor import RotorState
from rotortree.tree import CostLedger, NodeId, TreeState, build_tree


def naive_ranks(seq):
    out = []
    for t, e in enumerate(seq):
        prev = max((i for i in range(t) if seq[i] == e), default=None)
        window = seq[prev:t + 1] if prev is not None else seq[: t + 1]
        out.append(len(set(window)))
    return out


def test_working_set_examples():
    assert working_set_bound([1, 1]) == 0.0
    assert working_set_ranks([1, 2, 1]) == [1, 2, 2]
    assert working_set_bound([1, 2, 1]) == pytest.approx(2.0)
    assert working_set_bound([4] * 50) == 0.0


@given(st.lists(st.integers(0, 9), max_size=80))
@settings(max_examples=150, deadline=None)
def test_working_set_ranks_match_naive(seq):
    assert working_set_ranks(seq) == naive_ranks(seq)


def _place(depth, e, pos, seed=0):
    """Tree with element ``e`` at ``pos``, the rest shuffled."""
    rng = random.Random(seed)
    n = (1 << (depth + 1)) - 1
    rest = [x for x in range(n) if x != e]
    rng.shuffle(rest)
    rest.insert(pos, e)
    return TreeState(depth, rest)


def test_credit_examples():
    e = 3
    tree = _place(5, e, NodeId(5, 9).pos)
    ref = _place(5, e, NodeId(1, 1).pos, seed=1)
    assert credit(e, tree, ref, flavor="random") == 16

    rotor = RotorState(3)
    leaf = NodeId(3, 5)
    assert rotor.flip_rank_pos(leaf.pos) == 5
    tree = _place(3, e, leaf.pos)
    ref = _place(3, e, NodeId(1, 0).pos, seed=2)
    assert credit(e, tree, ref, rotor) == pytest.approx(1.5)
    assert credits(tree, ref, rotor)[e] == pytest.approx(1.5)


def test_identical_trees_have_zero_credit():
    t = build_tree(5, "uniform-random", seed=3)
    assert not credits(t, t.copy(offline=True), RotorState(5, [1] * 31)).any()
    assert not credits(t, t.copy(offline=True), flavor="random").any()


@given(st.integers(1, 5), st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_vector_credits_match_scalar(depth, seed):
    rng = random.Random(seed)
    tree = build_tree(depth, "uniform-random", seed=seed)
    ref = build_tree(depth, "uniform-random", seed=seed + 1)
    rotor = RotorState(depth, [rng.getrandbits(1) for _ in range((1 << depth) - 1)])
    vec = credits(tree, ref, rotor)
    for e in range(tree.n):
        assert vec[e] == pytest.approx(credit(e, tree, ref, rotor))
        lv, h = tree.level(e), ref.level(e)
        if vec[e] > 0:
            assert lv >= 2 * h + 1


def _rotor_round(tree, rotor, ref, e):
    pre_t, pre_r = tree.copy(), rotor.copy()
    ledger = CostLedger()
    rotor_push_serve(tree, rotor, e, ledger)
    return check_rotor_round(pre_t, pre_r, tree, rotor, ref, e, ledger.total)


def test_root_request_round():
    tree = build_tree(3, "uniform-random", seed=6)
    ref = tree.copy(offline=True)
    rep = _rotor_round(tree, RotorState(3), ref, tree.el[0])
    assert rep.ok and rep.cost == 1
    assert rep.sums["amortized"] <= 1


def test_checker_flags_violation():
    tree = build_tree(3)
    with pytest.raises(InequalityViolated):
        check_rotor_round(tree, RotorState(3), tree, RotorState(3), tree, 0, cost=10**3)


def test_exhaustive_depth_one():
    """Every placement, reference, pointer state and request on 3 nodes."""
    perms = list(itertools.permutations(range(3)))
    rounds = 0
    for p, q, bit, e in itertools.product(perms, perms, (0, 1), range(3)):
        tree, ref = TreeState(1, p), TreeState(1, q, offline=True)
        assert _rotor_round(tree, RotorState(1, [bit]), ref, e).ok
        rep = check_random_round(TreeState(1, p), ref, e, range(200))
        assert rep.ok
        rounds += 1
    for p, q in itertools.product(perms, perms):
        for b in (1, 2):
            tree, ref = TreeState(1, p), TreeState(1, q, offline=True)
            assert check_reference_swap(tree, ref, 0, b, RotorState(1), "rotor").ok
            tree, ref = TreeState(1, p), TreeState(1, q, offline=True)
            assert check_reference_swap(tree, ref, 0, b, flavor="random").ok
    assert rounds == 216


def test_exhaustive_depth_two_placements():
    """All 5040 placements against a fixed reference, all pointer states."""
    ref = build_tree(2, "uniform-random", seed=7, offline=True)
    states = [RotorState(2, bits) for bits in itertools.product((0, 1), repeat=3)]
    for i, p in enumerate(itertools.permutations(range(7))):
        rotor = states[i % 8]
        e = i % 7
        assert _rotor_round(TreeState(2, p), rotor.copy(), ref, e).ok


@pytest.mark.parametrize("depth", [2, 4, 6])
@pytest.mark.parametrize("swap_prob", [0.0, 0.3])
def test_rotor_credit_runs(depth, swap_prob):
    n = (1 << (depth + 1)) - 1
    rng = random.Random(depth)
    reqs = [rng.randrange(n) for _ in range(3000)]
    tree = build_tree(depth, "uniform-random", seed=depth)
    ref = build_tree(depth, "uniform-random", seed=depth + 50, offline=True)
    summary = rotor_credit_run(tree, ref, reqs, swap_prob, seed=depth, check_ranks=True)
    assert summary.ok, summary.violations[:2]
    assert summary.rounds == 3000
    assert all(v <= 1e-9 for v in summary.max_margin.values())
    if swap_prob:
        assert summary.reference_swaps > 0


def test_random_round_root_is_deterministic():
    tree = build_tree(3, "uniform-random", seed=8)
    ref = build_tree(3, "uniform-random", seed=9, offline=True)
    rep = check_random_round(tree, ref, tree.el[0], range(50))
    assert rep.sums["others"] == 0.0 and rep.cost == 1


def test_random_round_depth_three_many_seeds():
    tree = build_tree(4, "uniform-random", seed=10)
    ref = build_tree(4, "uniform-random", seed=11, offline=True)
    e = tree.el[NodeId(3, 6).pos]
    rep = check_random_round(tree, ref, e, range(10**4))
    assert rep.ok
    exact = expected_random_round(tree, ref, e)
    assert exact["others"] <= (3 / 2 + 1) * 8
    assert exact["amortized"] <= 16 * (ref.level(e) + 1)
    # Monte Carlo mean agrees with the exact enumeration
    assert abs(rep.sums["amortized"] - exact["amortized"]) < 0.5


def test_random_reference_swap_bound():
    rng = random.Random(12)
    tree = build_tree(4, "uniform-random", seed=12)
    ref = build_tree(4, "uniform-random", seed=13, offline=True)
    for _ in range(300):
        b = rng.randrange(1, 31)
        assert check_reference_swap(tree, ref, (b - 1) >> 1, b, flavor="random").sums["total"] <= 16


def test_random_credit_run_small():
    tree = build_tree(3, "uniform-random", seed=14)
    ref = build_tree(3, "uniform-random", seed=15, offline=True)
    reqs = [random.Random(1).randrange(15) for _ in range(200)]
    summary = random_credit_run(tree, ref, reqs, seed=3, swap_prob=0.2, check_every=20, replay_seeds=2000)
    assert summary.ok and summary.rounds == 200
