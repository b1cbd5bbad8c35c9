"""Acceptance criteria 1-10, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import itertools
import math
import random
import time

import numpy as np
import pytest

from rotortree.algorithms import SELF_ADJUSTING, RandomPush, RotorPush, rotor_push_serve
from rotortree.analysis import random_credit_run, rotor_credit_run
from rotortree.experiments import (
    A_ZIPF,
    P_TEMPORAL,
    ExperimentConfig,
    preset,
    rows_to_csv,
    run_experiment,
    run_histogram,
)
from rotortree.oracle import all_sequences, competitive_report, random_sequences
from rotortree.ranks import working_set_ranks
from rotortree.rotor import RotorState, flip_rank, flip_rank_sim
from rotortree.tree import CostLedger, NodeId, build_tree
from rotortree.workloads import empirical_entropy, gen_rotor_adversary, gen_temporal, gen_uniform, gen_zipf

# Worked example: identity layout, all pointers left; the request is the element at (2, 2)
EXAMPLE_REQUEST = 5
EXAMPLE_RIGHT_PLACEMENT = [5, 0, 2, 1, 4, 3, 6] + list(range(7, 15))
EXAMPLE_RIGHT_POINTERS = [1, 1, 0, 0, 0, 0, 0]
EXAMPLE_RIGHT_RANKS = [0, 1, 0, 3, 1, 0, 2, 3, 7, 1, 5, 0, 4, 2, 6]

TEMPORAL_ENTROPY = (15.95, 15.94, 15.91, 15.87, 15.81, 15.67, 15.16)
ZIPF_ENTROPY = (11.07, 6.47, 3.88, 2.63, 1.92)

QUICK_DEPTH, QUICK_M, REPS = 11, 10**5, 10


def _random_rotor(depth, rng):
    return RotorState(depth, [rng.getrandbits(1) for _ in range((1 << depth) - 1)])


def _means(rows):
    out = {}
    for r in rows:
        if r["rep"] == "mean":
            out[(r["depth"], r["p"], r["a"], r["algorithm"])] = float(r["total_cost"])
    return out


def test_criterion_1_worked_example(criterion):
    start = time.perf_counter()
    tree, rotor = build_tree(3), RotorState(3)
    rotor_push_serve(tree, rotor, EXAMPLE_REQUEST, CostLedger())
    took = time.perf_counter() - start
    ok = (
        tree.el == EXAMPLE_RIGHT_PLACEMENT
        and list(rotor.ptr) == EXAMPLE_RIGHT_POINTERS
        and rotor.all_ranks().tolist() == EXAMPLE_RIGHT_RANKS
    )
    criterion(f"placement, pointers and 15 flip-ranks match: {ok}; {took * 1000:.1f} ms")
    assert ok and took < 1


def test_criterion_2_flip_rank_oracle(criterion):
    start = time.perf_counter()
    rng = random.Random(2)
    states = [RotorState(3, bits) for bits in itertools.product((0, 1), repeat=7)]
    states += [_random_rotor(d, rng) for d in range(4, 9) for _ in range(100)]
    mismatches = 0
    for r in states:
        for pos in range((1 << (r.depth + 1)) - 1):
            u = NodeId.from_pos(pos)
            mismatches += flip_rank(r, u) != flip_rank_sim(r, u)
    took = time.perf_counter() - start
    criterion(f"{len(states)} pointer states, {mismatches} mismatches, {took:.1f} s")
    assert mismatches == 0 and took < 60


def test_criterion_3_rank_permutation(criterion):
    start = time.perf_counter()
    rng = random.Random(3)
    bad = 0
    for depth in range(9):
        for _ in range(100):
            ranks = _random_rotor(depth, rng).all_ranks()
            lo = (1 << depth) - 1
            bad += sorted(ranks[lo : 2 * lo + 1].tolist()) != list(range(1 << depth))
    took = time.perf_counter() - start
    criterion(f"900 states, {bad} non-permutations, {took:.1f} s")
    assert bad == 0 and took < 60


def test_criterion_4_round_cost_bound(criterion):
    rounds = violations = 0
    for cls in (RotorPush, RandomPush):
        for depth in range(1, 11):
            n = (1 << (depth + 1)) - 1
            reqs = gen_uniform(n, 6000, seed=depth).requests.tolist()
            tree = build_tree(depth, "uniform-random", seed=depth)
            alg = cls(tree)
            ledger = CostLedger()
            for e in reqs:
                d = tree.level(e)
                alg.serve(e, ledger)
                cost = ledger.round_costs()[-1]
                violations += cost > 4 * d if d else cost != 1
                rounds += 1
    criterion(f"{rounds} rounds, {violations} over 4*d* (or != 1 at the root)")
    assert rounds >= 10**5 and violations == 0


def test_criterion_5_potential_inequalities(criterion):
    rng = random.Random(5)
    rotor_rounds = ref_swaps = 0
    bad = []
    margins: dict = {}
    for run in range(100):
        depth = 1 + rng.randrange(6)
        n = (1 << (depth + 1)) - 1
        for swap_prob in (0.0, 0.25):
            seed = 2 * run + (swap_prob > 0)
            tree = build_tree(depth, "uniform-random", seed=seed)
            ref = build_tree(depth, "uniform-random", seed=seed + 10**6, offline=True)
            reqs = gen_uniform(n, 10**4, seed=seed).requests
            s = rotor_credit_run(tree, ref, reqs, swap_prob, seed=seed)
            rotor_rounds += s.rounds
            ref_swaps += s.reference_swaps
            bad += s.violations
            for k, v in s.max_margin.items():
                margins[k] = max(margins.get(k, -math.inf), v)
    random_states = 0
    for run in range(10):
        depth = 2 + run % 5
        n = (1 << (depth + 1)) - 1
        for swap_prob in (0.0, 0.25):
            seed = 500 + 2 * run + (swap_prob > 0)
            tree = build_tree(depth, "uniform-random", seed=seed)
            ref = build_tree(depth, "uniform-random", seed=seed + 10**6, offline=True)
            reqs = gen_uniform(n, 10**4, seed=seed).requests
            s = random_credit_run(tree, ref, reqs, seed=seed, swap_prob=swap_prob, check_every=1000, replay_seeds=10**4)
            random_states += len(reqs) // 1000
            ref_swaps += s.reference_swaps
            bad += s.violations
            for k, v in s.max_margin.items():
                margins[k] = max(margins.get(k, -math.inf), v)
    worst = ", ".join(f"{k}={v:+.2f}" for k, v in sorted(margins.items()))
    criterion(
        f"{rotor_rounds} rotor rounds, {random_states} random states x 10^4 seeds, "
        f"{ref_swaps} reference swaps, {len(bad)} violations; max(value - bound): {worst}"
    )
    assert rotor_rounds >= 100 * 10**4 and not bad


def test_criterion_6_oracle_competitiveness(criterion):
    start = time.perf_counter()
    small = build_tree(1)
    big = build_tree(2)
    families = {
        "3-node": [(small, s) for s in all_sequences(3, 4)],
        "7-node": [(big, s) for s in random_sequences(7, 5, 200, seed=6)],
    }
    failures = []
    worst = {}
    for fam, instances in families.items():
        for name, factor, seeds in (("rotor-push", 12, 1), ("random-push", 16, 1000)):
            rows = competitive_report(name, instances, seeds=seeds, base_seed=6)
            worst[fam, name] = max(r.ratio for r in rows)
            failures += [r for r in rows if r.total > factor * r.opt + 3 * r.stderr]
    took = time.perf_counter() - start
    summary = ", ".join(f"{f} {a} {v:.2f}" for (f, a), v in worst.items())
    criterion(f"max ratios: {summary}; {len(failures)} failures; {took:.0f} s")
    assert len(families["3-node"]) == 81 and not failures and took < 600


def test_criterion_7_working_set_violation(criterion):
    start = time.perf_counter()
    x = 10
    seq, initial = gen_rotor_adversary(x, 10**4)
    ranks = working_set_ranks(seq.requests)
    tree, rotor = initial.copy(), RotorState(x - 1)
    costs = []
    for e in seq:
        costs.append(tree.level(e) + 1)
        rotor_push_serve(tree, rotor, e, CostLedger(record=False))
    took = time.perf_counter() - start
    criterion(f"max access cost {max(costs)}, max rank {max(ranks)}, {took:.1f} s")
    assert max(costs) == x and x in costs and max(ranks) <= 2 * x - 1 and took < 60


def test_criterion_8_entropy(criterion):
    n, m = 65535, 10**6
    temporal = [np.mean([empirical_entropy(gen_temporal(n, m, p, seed=s)) for s in range(10)]) for p in P_TEMPORAL]
    zipf = [np.mean([empirical_entropy(gen_zipf(n, m, a, seed=s)) for s in range(10)]) for a in A_ZIPF]
    dt = max(abs(a - b) for a, b in zip(temporal, TEMPORAL_ENTROPY))
    dz = max(abs(a - b) for a, b in zip(zipf, ZIPF_ENTROPY))
    criterion(
        "temporal " + " ".join(f"{h:.2f}" for h in temporal) + f" (max dev {dt:.3f}); "
        "zipf " + " ".join(f"{h:.2f}" for h in zipf) + f" (max dev {dz:.3f})"
    )
    assert dt <= 0.05 and dz <= 0.15


def test_criterion_9a_temporal_trend(criterion):
    cfg = preset("q2", "quick")
    cfg.p_values = [0.9]
    cfg.algorithms = ["rotor-push", "random-push", "static-oblivious"]
    assert cfg.depths == [QUICK_DEPTH] and cfg.m == QUICK_M and cfg.reps == REPS
    means = _means(run_experiment(cfg))
    rot = means[QUICK_DEPTH, "0.9", "", "rotor-push"]
    ran = means[QUICK_DEPTH, "0.9", "", "random-push"]
    obl = means[QUICK_DEPTH, "0.9", "", "static-oblivious"]
    rel = abs(rot - ran) / min(rot, ran)
    criterion(f"rotor {rot:.0f}, random {ran:.0f}, oblivious {obl:.0f}, rotor/random gap {rel:.4%}")
    assert rot < obl and ran < obl and rel < 0.01


def test_criterion_9b_zipf_trend(criterion):
    cfg = preset("q3", "quick")
    assert cfg.depths == [QUICK_DEPTH] and cfg.m == QUICK_M and cfg.reps == REPS
    means = _means(run_experiment(cfg))
    problems = []
    for a in A_ZIPF:
        key = format(a, "g")
        cell = {alg: means[QUICK_DEPTH, "", key, alg] for alg in cfg.algorithms}
        if min(cell, key=cell.get) != "static-opt":
            problems.append(f"a={key}: static-opt not minimal")
        if a >= 1.6:
            for alg in SELF_ADJUSTING:
                if cell[alg] >= cell["static-oblivious"]:
                    problems.append(f"a={key}: {alg} {cell[alg]:.0f} >= oblivious {cell['static-oblivious']:.0f}")
    criterion("; ".join(problems) if problems else "all self-adjusting below oblivious for a >= 1.6; static-opt minimal")
    assert not problems


def test_criterion_9c_depth_trend(criterion):
    cfg = preset("q1", "quick")
    cfg.workloads = ["temporal"]
    cfg.algorithms = ["rotor-push", "static-oblivious"]
    assert cfg.m == QUICK_M and cfg.reps == REPS and cfg.p_values == [0.9]
    rows = run_experiment(cfg)
    gaps = [
        float(r["total_cost"])
        for r in rows
        if r["rep"] == "diff-vs-static-oblivious" and r["algorithm"] == "rotor-push"
    ]
    criterion("rotor - oblivious by depth 7..15: " + ", ".join(f"{g:.0f}" for g in gaps))
    assert len(gaps) == 5 and all(b < a for a, b in zip(gaps, gaps[1:]))


def test_criterion_9d_histogram(criterion):
    hist = run_histogram(QUICK_DEPTH, QUICK_M, REPS)
    criterion(f"mean rotor - random per request {hist.mean:+.5f}; support [{min(hist.counts)}, {max(hist.counts)}]")
    assert abs(hist.mean) <= 0.01


def test_criterion_10_determinism(criterion):
    cfg = ExperimentConfig("q4", [6], ["rotor-push", "random-push", "max-push", "static-oblivious"],
                           ["combined"], [0.0, 0.75], [1.3, 2.2], 5000, 3, 10)
    first = rows_to_csv(run_experiment(cfg))
    second = rows_to_csv(run_experiment(cfg))
    cfg.jobs = 2
    parallel = rows_to_csv(run_experiment(cfg))
    ok = first.encode() == second.encode() == parallel.encode()
    criterion(f"{first.count(chr(10))} CSV lines; identical across reruns and job counts: {ok}")
    assert ok
