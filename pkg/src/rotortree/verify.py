"""Invariant batteries run by ``rotortree verify``.

Each battery returns a short detail string and raises on failure; any
exception counts as a failed battery.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .algorithms import (
    SELF_ADJUSTING,
    MaxPush,
    make_algorithm,
    random_push_serve,
    rotor_push_serve,
)
from .analysis import (
    credits,
    random_credit_run,
    rotor_credit_run,
)
from .experiments import ExperimentConfig, rows_to_csv, run_experiment
from .oracle import all_sequences, brute_force_opt, competitive_report, random_sequences
from .ranks import working_set_ranks
from .rotor import RotorState, flip_rank, flip_rank_sim
from .tree import CostLedger, NodeId, TreeState, build_tree
from .workloads import gen_rotor_adversary, gen_temporal, gen_uniform, gen_zipf, zipf_pmf


class VerificationFailure(AssertionError):
    pass


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise VerificationFailure(message)


@dataclass
class Scale:
    name: str
    max_depth: int
    reps: int
    rounds: int
    replay_seeds: int
    oracle: bool


SCALES = {
    "quick": Scale("quick", 6, 10, 2_000, 2_000, False),
    "full": Scale("full", 8, 100, 10_000, 10_000, True),
}


def random_rotor(depth: int, rng: random.Random) -> RotorState:
    return RotorState(depth, [rng.getrandbits(1) for _ in range((1 << depth) - 1)])


def all_rotors(depth: int):
    for bits in itertools.product((0, 1), repeat=(1 << depth) - 1):
        yield RotorState(depth, bits)


# -- rotor-state ---------------------------------------------------------------


def _rotor_states(scale: Scale, seed: int):
    rng = random.Random(seed)
    for depth in range(4):
        yield from all_rotors(depth)
    for depth in range(4, scale.max_depth + 1):
        for _ in range(scale.reps):
            yield random_rotor(depth, rng)


def battery_flip_rank_oracle(scale: Scale) -> str:
    count = 0
    for rotor in _rotor_states(scale, 1):
        for pos in range((1 << (rotor.depth + 1)) - 1):
            u = NodeId.from_pos(pos)
            a, b = flip_rank(rotor, u), flip_rank_sim(rotor, u)
            _require(a == b, f"{u}: flip_rank {a} != simulated {b} for {rotor!r}")
        count += 1
    return f"{count} pointer states"


def battery_flip_rank_permutation(scale: Scale) -> str:
    count = 0
    for rotor in _rotor_states(scale, 2):
        ranks = rotor.all_ranks()
        for level in range(rotor.depth + 1):
            lo = (1 << level) - 1
            got = sorted(ranks[lo : 2 * lo + 1].tolist())
            _require(got == list(range(1 << level)), f"level {level} ranks {got} for {rotor!r}")
        count += 1
    return f"{count} pointer states"


def check_flips_lemma(rotor: RotorState, d: int) -> None:
    """Rank changes caused by ``flip(d)`` on a copy of ``rotor``."""
    old = rotor.all_ranks()
    after = rotor.copy()
    after.flip(d)
    new = after.all_ranks()
    for pos in range(len(old)):
        level = (pos + 1).bit_length() - 1
        if level <= d:
            want = (1 << level) - 1 if old[pos] == 0 else old[pos] - 1
            _require(new[pos] == want, f"node {NodeId.from_pos(pos)}: {old[pos]} -> {new[pos]} after flip({d})")
        else:
            diff = int(new[pos] - old[pos])
            _require(diff in (-1, (1 << d) - 1), f"node {NodeId.from_pos(pos)} moved by {diff} after flip({d})")


def battery_flips_lemma(scale: Scale) -> str:
    count = 0
    for rotor in _rotor_states(scale, 3):
        for d in range(rotor.depth + 1):
            check_flips_lemma(rotor, d)
            count += 1
    return f"{count} flips"


# -- tree-core and algorithms ----------------------------------------------------


def battery_legality(scale: Scale) -> str:
    """All self-adjusting algorithms: legal swaps, bijection, cost sums, access bound."""
    rounds = 0
    for depth in range(scale.max_depth + 1):
        n = (1 << (depth + 1)) - 1
        reqs = gen_uniform(n, scale.rounds, seed=depth).requests.tolist()
        for name in SELF_ADJUSTING:
            tree = build_tree(depth, "uniform-random", seed=depth)
            alg = make_algorithm(name, tree, seed=depth)
            ledger = CostLedger()
            levels = []
            for e in reqs:
                levels.append(tree.level(e))
                alg.serve(e, ledger)
                if depth <= 3:
                    tree.check_bijection()
            tree.check_bijection()
            costs = ledger.round_costs()
            _require(sum(costs) == ledger.total, f"{name}: per-request costs do not sum to the total")
            if name in ("rotor-push", "random-push"):
                for t, (c, d) in enumerate(zip(costs, levels)):
                    bound = 4 * d if d else 1
                    _require(c <= bound, f"{name} depth {depth} round {t}: cost {c} > {bound}")
            rounds += len(reqs)
    return f"{rounds} rounds"


def battery_swap_levels(scale: Scale) -> str:
    rng = random.Random(4)
    tree = build_tree(scale.max_depth, "uniform-random", seed=4, offline=True)
    for _ in range(scale.rounds):
        b = rng.randrange(1, tree.n)
        a = (b - 1) >> 1
        before = [tree.level(e) for e in range(tree.n)]
        x, y = tree.el[a], tree.el[b]
        tree.swap_pos(a, b)
        for e in range(tree.n):
            want = before[e] + (1 if e == x else -1 if e == y else 0)
            _require(tree.level(e) == want, f"element {e} level changed wrongly on swap {a}-{b}")
    return f"{scale.rounds} swaps"


def battery_random_purity(scale: Scale) -> str:
    depth = scale.max_depth
    reqs = gen_uniform((1 << (depth + 1)) - 1, scale.rounds, seed=5).requests.tolist()
    runs = []
    for _ in range(2):
        tree = build_tree(depth, "uniform-random", seed=5)
        rng, mirror = random.Random(99), random.Random(99)
        ledger = CostLedger()
        for e in reqs:
            d = tree.level(e)
            random_push_serve(tree, rng, e, ledger)
            if d:
                mirror.getrandbits(d)
            _require(rng.getstate() == mirror.getstate(), "random-push consumed other than d* bits")
        runs.append((list(tree.el), ledger.round_costs()))
    _require(runs[0] == runs[1], "equal seeds gave different runs")
    return f"{len(reqs)} rounds twice"


def battery_max_push_mru(scale: Scale) -> str:
    checked = 0
    for depth in range(1, scale.max_depth + 1):
        n = (1 << (depth + 1)) - 1
        tree = build_tree(depth, "uniform-random", seed=depth)
        alg = MaxPush(tree)
        for e in gen_zipf(n, scale.rounds // 2, 1.3, seed=depth).requests.tolist():
            before = list(tree.el)
            key_before = list(alg.ranks.key)
            alg.serve(e, CostLedger(record=False))
            for pos in range(n):
                new, old = tree.el[pos], before[pos]
                if new != old:
                    # the newcomer was used more recently than the element it displaced;
                    # nd(e) itself takes e_k, which is older than e by definition
                    newer = e in (new, old) or key_before[new] > key_before[old]
                    _require(newer, f"depth {depth}: {new} displaced more recent {old}")
                    checked += 1
    return f"{checked} displacements"


def battery_rotor_ws(scale: Scale) -> str:
    x = 10
    m = 4**x if scale.name == "full" else 1 << (x + 2)
    seq, initial = gen_rotor_adversary(x, m)
    ranks = working_set_ranks(seq.requests)
    _require(max(ranks) <= 2 * x - 1, f"rank {max(ranks)} exceeds {2 * x - 1}")
    tree = initial.copy()
    rotor = RotorState(tree.depth)
    deepest = 0
    for e in seq:
        deepest = max(deepest, tree.level(e) + 1)
        rotor_push_serve(tree, rotor, e, CostLedger(record=False))
    _require(deepest == x, f"largest access cost {deepest}, expected {x}")
    return f"{m} adversarial requests, max rank {max(ranks)}"


# -- workloads ------------------------------------------------------------------


def battery_workloads(scale: Scale) -> str:
    for seq in (gen_uniform(100, 1000, 7), gen_temporal(100, 1000, 0.4, 7), gen_zipf(100, 1000, 1.3, 7)):
        _require(np.array_equal(seq.regenerate().requests, seq.requests), f"{seq.generator} not regenerable")
    n, m = 64, 10**6
    for p in (0.0, 0.5, 0.9):
        s = gen_temporal(n, m, p, seed=8).requests
        frac = float(np.mean(s[1:] == s[:-1]))
        hi = p + (1 - p) / n
        slack = 3 * np.sqrt(hi * (1 - hi) / (m - 1))
        _require(p - slack <= frac <= hi + slack, f"temporal p={p}: repeat fraction {frac}")
    for a in (1.001, 1.6, 2.2):
        freq = np.bincount(gen_zipf(n, m, a, seed=9).requests, minlength=n) / m
        err = float(np.abs(freq - zipf_pmf(n, a)).max())
        _require(err <= 0.005, f"zipf a={a}: max frequency error {err}")
    return "regeneration, temporal repeats, zipf fit"


# -- analysis -------------------------------------------------------------------


def battery_rotor_potential(scale: Scale) -> str:
    rounds = swaps = 0
    rng = random.Random(10)
    runs = [(2, None)] + [(1 + rng.randrange(scale.max_depth), i) for i in range(scale.reps)]
    for depth, run in runs:
        n = (1 << (depth + 1)) - 1
        for swap_prob in (0.0, 0.3):
            s = 0 if run is None else run * 2 + int(swap_prob > 0)
            tree = build_tree(depth, "uniform-random", seed=s)
            reference = build_tree(depth, "uniform-random", seed=s + 1, offline=True)
            reqs = gen_uniform(n, scale.rounds, seed=s).requests
            summary = rotor_credit_run(tree, reference, reqs, swap_prob, seed=s, check_ranks=True)
            _require(summary.ok, f"depth {depth} run {run}: {summary.violations[:3]}")
            rounds += summary.rounds
            swaps += summary.reference_swaps
    # identical trees start with zero credit
    t = build_tree(4, "uniform-random", seed=11)
    _require(not credits(t, t.copy(offline=True), RotorState(4)).any(), "identical trees carry credit")
    return f"{rounds} rounds, {swaps} reference swaps"


def battery_random_potential(scale: Scale) -> str:
    checked = 0
    for i in range(max(1, scale.reps // 5)):
        depth = 2 + i % (scale.max_depth - 1)
        n = (1 << (depth + 1)) - 1
        for swap_prob in (0.0, 0.3):
            tree = build_tree(depth, "uniform-random", seed=20 + i)
            reference = build_tree(depth, "uniform-random", seed=40 + i, offline=True)
            reqs = gen_uniform(n, scale.rounds // 4, seed=60 + i).requests
            summary = random_credit_run(
                tree, reference, reqs, seed=i, swap_prob=swap_prob,
                check_every=max(1, len(reqs) // 5), replay_seeds=scale.replay_seeds,
            )
            _require(summary.ok, f"depth {depth}: {summary.violations[:3]}")
            checked += summary.rounds
    return f"{checked} rounds"


def battery_oracle_sanity(scale: Scale) -> str:
    rng = random.Random(12)
    for n_depth in (1, 2):
        tree = build_tree(n_depth, "uniform-random", seed=12)
        for reqs in random_sequences(tree.n, 5, 20, seed=rng.randrange(1 << 30)):
            res = brute_force_opt(tree, reqs)
            oblivious = sum(tree.level(e) + 1 for e in reqs)
            _require(len(reqs) <= res.optimal_cost <= oblivious, f"OPT {res.optimal_cost} out of range")
            _require(res.replay(tree) == res.optimal_cost, "oracle witness does not replay")
    return "40 instances"


def battery_oracle_competitive(scale: Scale) -> str:
    small = build_tree(1)
    instances = [(small, s) for s in all_sequences(3, 4)]
    big = build_tree(2)
    instances += [(big, s) for s in random_sequences(7, 5, 200, seed=13)]
    for name, factor in (("rotor-push", 12), ("random-push", 16)):
        for row in competitive_report(name, instances, seeds=1000 if name == "random-push" else 1):
            _require(
                row.total <= factor * row.opt + 3 * row.stderr,
                f"{name} instance {row.instance_id}: {row.total} > {factor}*{row.opt}",
            )
    return f"{len(instances)} instances"


# -- bench ----------------------------------------------------------------------


def battery_determinism(scale: Scale) -> str:
    cfg = ExperimentConfig("custom", [4], ["rotor-push", "random-push", "static-oblivious"],
                           ["temporal"], [0.5], [1.3], 2000, 3, 14)
    rows = run_experiment(cfg)
    _require(rows_to_csv(rows) == rows_to_csv(run_experiment(cfg)), "reruns differ")
    for name in cfg.algorithms:
        reps = [r for r in rows if r["algorithm"] == name and isinstance(r["rep"], int)]
        mean = [r for r in rows if r["algorithm"] == name and r["rep"] == "mean"][0]
        want = np.mean([r["total_cost"] for r in reps])
        _require(abs(float(mean["total_cost"]) - want) < 1e-3, f"{name}: aggregate is not the mean")
    return f"{len(rows)} rows twice"


BATTERIES = [
    ("flip-rank oracle", battery_flip_rank_oracle),
    ("flip-rank permutation", battery_flip_rank_permutation),
    ("flip rank updates", battery_flips_lemma),
    ("swap legality and cost bound", battery_legality),
    ("level change per swap", battery_swap_levels),
    ("random-push purity", battery_random_purity),
    ("max-push recency", battery_max_push_mru),
    ("working-set adversary", battery_rotor_ws),
    ("workload generators", battery_workloads),
    ("rotor potential", battery_rotor_potential),
    ("random potential", battery_random_potential),
    ("oracle sanity", battery_oracle_sanity),
    ("oracle competitiveness", battery_oracle_competitive),
    ("determinism", battery_determinism),
]


@dataclass
class VerificationReport:
    scale: str
    results: list = field(default_factory=list)  # (name, passed, detail, seconds)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _, _ in self.results)

    def lines(self) -> list[str]:
        out = [f"{'PASS' if p else 'FAIL'}  {name}  ({secs:.1f}s)  {detail}" for name, p, detail, secs in self.results]
        out.append(f"{sum(p for _, p, _, _ in self.results)}/{len(self.results)} batteries passed")
        return out


def run_verification_suite(scale: str = "quick", only=None, progress=None) -> VerificationReport:
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {', '.join(SCALES)}")
    cfg = SCALES[scale]
    report = VerificationReport(scale)
    for name, fn in BATTERIES:
        if only is not None and name not in only:
            continue
        if fn is battery_oracle_competitive and not cfg.oracle:
            continue
        start = time.perf_counter()
        try:
            detail, passed = fn(cfg), True
        except Exception as exc:  # any failure, including crashes, fails the battery
            detail, passed = f"{type(exc).__name__}: {exc}", False
        report.results.append((name, passed, detail, time.perf_counter() - start))
        if progress:
            progress(report.lines()[-2])
    return report
