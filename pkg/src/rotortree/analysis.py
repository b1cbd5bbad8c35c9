"""Potential-function bookkeeping and per-round inequality checks.

Credits compare an element's level in an algorithm's tree against its level
in a reference tree (any tree evolving by arbitrary adjacent swaps).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .algorithms import augmented_push_down, random_push_serve, rotor_push_serve
from .ranks import working_set_ranks
from .rotor import RotorState
from .tree import CostLedger, TreeState

F_ROTOR = 4
F_RANDOM = 8


class InequalityViolated(AssertionError):
    def __init__(self, message: str, elements=()):
        super().__init__(message)
        self.elements = sorted(int(e) for e in elements)


def working_set_bound(requests) -> float:
    return float(sum(math.log2(r) for r in working_set_ranks(requests)))


# -- credits --------------------------------------------------------------------


def _levels(tree: TreeState) -> np.ndarray:
    nd = np.asarray(tree.nd, dtype=np.int64)
    return np.floor(np.log2(nd + 1)).astype(np.int64)


def level_weights(levels: np.ndarray, ref_levels: np.ndarray) -> np.ndarray:
    excess = levels - 2 * ref_levels - 1
    return np.where(excess >= 1, excess, 0)


def rank_weights(levels: np.ndarray, ref_levels: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    w = 1.0 - ranks / np.exp2(levels)
    return np.where(levels >= 2 * ref_levels + 1, w, 0.0)


def credits(tree: TreeState, reference: TreeState, rotor: RotorState | None = None, flavor: str = "rotor") -> np.ndarray:
    """Credit of every element, indexed by element id."""
    lv = _levels(tree)
    ref = _levels(reference)
    if flavor == "random":
        return F_RANDOM * level_weights(lv, ref).astype(np.float64)
    if flavor != "rotor":
        raise ValueError(f"unknown flavor {flavor!r}")
    if rotor is None:
        raise ValueError("rotor credits need the rotor state")
    node_ranks = rotor.all_ranks()
    ranks = node_ranks[np.asarray(tree.nd, dtype=np.int64)]
    return F_ROTOR * (level_weights(lv, ref) + rank_weights(lv, ref, ranks))


def credit(e: int, tree: TreeState, reference: TreeState, rotor: RotorState | None = None, flavor: str = "rotor") -> float:
    lvl = tree.level(e)
    ref = reference.level(e)
    wlev = lvl - 2 * ref - 1 if lvl >= 2 * ref + 2 else 0
    if flavor == "random":
        return float(F_RANDOM * wlev)
    wfrnk = 1 - rotor.flip_rank_pos(tree.nd[e]) / 2**lvl if lvl >= 2 * ref + 1 else 0.0
    return F_ROTOR * (wlev + wfrnk)


# -- reports ----------------------------------------------------------------------


@dataclass
class RoundReport:
    """Sums of credit changes in one round and the bounds they were checked against."""

    kind: str
    cost: float
    sums: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _finish(report: RoundReport, strict: bool) -> RoundReport:
    for name, bound in report.bounds.items():
        if report.sums[name] > bound:
            report.violations.append(name)
    if strict and report.violations:
        raise InequalityViolated(
            f"{report.kind}: "
            + ", ".join(f"{v}={report.sums[v]:.6g} > {report.bounds[v]:.6g}" for v in report.violations)
        )
    return report


def check_reference_swap(
    tree: TreeState,
    reference: TreeState,
    a: int,
    b: int,
    rotor: RotorState | None = None,
    flavor: str = "rotor",
    strict: bool = True,
) -> RoundReport:
    """Perform one reference swap of positions a, b and bound the credit change.

    Allowed growth is 3f per swap for rotor credits and 2f_R for random ones.
    """
    before = credits(tree, reference, rotor, flavor)
    reference.swap_pos(a, b)
    after = credits(tree, reference, rotor, flavor)
    bound = 3 * F_ROTOR if flavor == "rotor" else 2 * F_RANDOM
    report = RoundReport("reference-swap", 1, {"total": float((after - before).sum())}, {"total": float(bound)})
    return _finish(report, strict)


def check_rotor_round(
    pre_tree: TreeState,
    pre_rotor: RotorState,
    post_tree: TreeState,
    post_rotor: RotorState,
    reference: TreeState,
    e_star: int,
    cost: int,
    strict: bool = True,
    pre_credits: np.ndarray | None = None,
    post_credits: np.ndarray | None = None,
) -> RoundReport:
    """Credit-change bounds for one Rotor-Push round.

    Elements split into the requested one, the old global-path prefix P'
    (minus the request) and everyone else B.  Checks sum(P') <= f,
    sum(B) <= f and cost + total <= 12 * (reference level of e* + 1).
    """
    before = credits(pre_tree, reference, pre_rotor) if pre_credits is None else pre_credits
    after = credits(post_tree, reference, post_rotor) if post_credits is None else post_credits
    delta = after - before
    d_star = pre_tree.level(e_star)
    path = [pre_tree.el[p] for p in pre_rotor.path_positions(d_star)]
    p_prime = [e for e in path if e != e_star]
    in_b = np.ones(len(delta), dtype=bool)
    in_b[path] = False
    in_b[e_star] = False
    h_star = reference.level(e_star)
    report = RoundReport(
        "rotor-round",
        cost,
        {
            "path": float(delta[p_prime].sum()) if p_prime else 0.0,
            "bystanders": float(delta[in_b].sum()),
            "amortized": float(cost + delta.sum()),
            "access": float(cost),
        },
        {
            "path": float(F_ROTOR),
            "bystanders": float(F_ROTOR),
            "amortized": float(12 * (h_star + 1)),
            "access": float(4 * d_star if d_star else 1),
        },
    )
    return _finish(report, strict)


def check_flip_rank_updates(
    pre_tree: TreeState, pre_rotor: RotorState, post_tree: TreeState, post_rotor: RotorState, e_star: int
) -> list[str]:
    """How elements' flip-ranks change in one Rotor-Push round; returns problems found."""
    problems = []
    old = pre_rotor.all_ranks()[np.asarray(pre_tree.nd)]
    new = post_rotor.all_ranks()[np.asarray(post_tree.nd)]
    d_star = pre_tree.level(e_star)
    path = pre_rotor.path_positions(d_star)
    moved = set()
    for d, pos in enumerate(path[:-1]):
        e = pre_tree.el[pos]
        moved.add(e)
        if post_tree.level(e) != d + 1 or old[e] != 0 or new[e] != 2 ** (d + 1) - 1:
            problems.append(f"path element {e} at level {d}")
    last = pre_tree.el[path[-1]]
    if last != e_star:
        moved.add(last)
        expected = pre_rotor.flip_rank_pos(pre_tree.nd[e_star]) - 1
        if new[last] != expected or post_tree.level(last) != d_star:
            problems.append(f"last path element {last}")
    moved.add(e_star)
    if post_tree.nd[e_star] != 0 or new[e_star] != 0:
        problems.append(f"requested element {e_star}")
    for e in range(len(old)):
        if e in moved:
            continue
        if post_tree.nd[e] != pre_tree.nd[e] or new[e] < old[e] - 1:
            problems.append(f"bystander {e}")
    return problems


def check_random_round(
    tree: TreeState,
    reference: TreeState,
    e_star: int,
    seeds,
    strict: bool = True,
    slack_se: float = 3.0,
) -> RoundReport:
    """Replay one Random-Push round from the same state under many seeds.

    Sample means are compared with the expected-value bounds plus
    ``slack_se`` standard errors: sum over E' <= (d*/2 + 1) f_R and
    cost + total <= 16 * (reference level of e* + 1).
    """
    before = credits(tree, reference, flavor="random")
    d_star = tree.level(e_star)
    others = np.ones(tree.n, dtype=bool)
    others[e_star] = False
    e_prime, amortized, costs = [], [], []
    ref_levels = _levels(reference)
    for seed in seeds:
        t = tree.copy()
        ledger = CostLedger(record=False)
        random_push_serve(t, random.Random(seed), e_star, ledger)
        after = F_RANDOM * level_weights(_levels(t), ref_levels)
        delta = after - before
        costs.append(ledger.total)
        e_prime.append(float(delta[others].sum()))
        amortized.append(ledger.total + float(delta.sum()))
    e_prime_arr = np.asarray(e_prime)
    amort_arr = np.asarray(amortized)
    k = len(e_prime_arr)

    def se(x):
        return float(x.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0

    h_star = reference.level(e_star)
    report = RoundReport(
        "random-round",
        float(np.mean(costs)),
        {"others": float(e_prime_arr.mean()), "amortized": float(amort_arr.mean())},
        {
            "others": (d_star / 2 + 1) * F_RANDOM + slack_se * se(e_prime_arr),
            "amortized": 16 * (h_star + 1) + slack_se * se(amort_arr),
        },
    )
    return _finish(report, strict)


def expected_random_round(tree: TreeState, reference: TreeState, e_star: int) -> dict:
    """Exact expectations of one Random-Push round, enumerating every target node."""
    before = credits(tree, reference, flavor="random")
    d_star = tree.level(e_star)
    ref_levels = _levels(reference)
    others = np.ones(tree.n, dtype=bool)
    others[e_star] = False
    tot_e, tot_a = 0.0, 0.0
    count = 1 << d_star
    for i in range(count):
        t = tree.copy()
        ledger = CostLedger(record=False)
        t.begin_round()
        t.access(e_star, ledger)
        if d_star:
            augmented_push_down(t, t.nd[e_star], (1 << d_star) - 1 + i, ledger)
        delta = F_RANDOM * level_weights(_levels(t), ref_levels) - before
        tot_e += float(delta[others].sum())
        tot_a += ledger.total + float(delta.sum())
    return {"others": tot_e / count, "amortized": tot_a / count}


# -- run-level drivers -------------------------------------------------------------------


@dataclass
class RunSummary:
    rounds: int = 0
    reference_swaps: int = 0
    violations: list = field(default_factory=list)
    max_margin: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def note(self, report: RoundReport) -> None:
        for name in report.sums:
            bound = report.bounds[name]
            key = f"{report.kind}:{name}"
            # largest observed value minus its bound; stays <= 0 when all hold
            self.max_margin[key] = max(self.max_margin.get(key, -math.inf), report.sums[name] - bound)
        if report.violations:
            self.violations.append(report)


def rotor_credit_run(
    tree: TreeState,
    reference: TreeState,
    requests,
    swap_prob: float = 0.0,
    seed: int = 0,
    check_ranks: bool = False,
) -> RunSummary:
    """Drive Rotor-Push over ``requests`` checking every round's inequalities.

    With ``swap_prob > 0`` the reference tree makes random adjacent swaps
    between rounds, each checked against the per-swap bound.
    """
    rng = random.Random(seed)
    rotor = RotorState(tree.depth)
    summary = RunSummary()
    ledger = CostLedger(record=False)
    cur = credits(tree, reference, rotor)
    for e in requests:
        e = int(e)
        while reference.n > 1 and rng.random() < swap_prob:
            b = rng.randrange(1, reference.n)
            rep = check_reference_swap(tree, reference, (b - 1) >> 1, b, rotor, "rotor", strict=False)
            summary.reference_swaps += 1
            summary.note(rep)
            cur = credits(tree, reference, rotor)
        pre_tree, pre_rotor = tree.copy(), rotor.copy()
        total_before = ledger.total
        rotor_push_serve(tree, rotor, e, ledger)
        nxt = credits(tree, reference, rotor)
        rep = check_rotor_round(
            pre_tree, pre_rotor, tree, rotor, reference, e, ledger.total - total_before,
            strict=False, pre_credits=cur, post_credits=nxt,
        )
        summary.note(rep)
        if check_ranks:
            problems = check_flip_rank_updates(pre_tree, pre_rotor, tree, rotor, e)
            if problems:
                summary.violations.append(RoundReport("flip-rank-update", 0, {}, {}, problems))
        cur = nxt
        summary.rounds += 1
    return summary


def random_credit_run(
    tree: TreeState,
    reference: TreeState,
    requests,
    seed: int = 0,
    swap_prob: float = 0.0,
    check_every: int = 100,
    replay_seeds: int = 10_000,
) -> RunSummary:
    """Drive Random-Push; every ``check_every`` rounds replay the next round
    under ``replay_seeds`` seeds and check the expected-value bounds."""
    rng = random.Random(seed)
    alg_rng = random.Random(seed ^ 0x5EED)
    summary = RunSummary()
    ledger = CostLedger(record=False)
    for t, e in enumerate(requests):
        e = int(e)
        while reference.n > 1 and rng.random() < swap_prob:
            b = rng.randrange(1, reference.n)
            rep = check_reference_swap(tree, reference, (b - 1) >> 1, b, flavor="random", strict=False)
            summary.reference_swaps += 1
            summary.note(rep)
        if t % check_every == 0:
            base = seed * 1_000_003 + t * replay_seeds
            rep = check_random_round(tree, reference, e, range(base, base + replay_seeds), strict=False)
            summary.note(rep)
        random_push_serve(tree, alg_rng, e, ledger)
        summary.rounds += 1
    return summary
