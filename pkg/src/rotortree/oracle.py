"""Exact offline optimum for tiny trees, by dynamic programming over placements.

The offline player may swap any adjacent pair at unit cost (no marking) before
each access.  Every placement of the n elements is a state; distances between
placements are shortest paths in the swap graph.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algorithms import make_algorithm
from .tree import CostLedger, NodeId, TreeState

MAX_NODES = 7
MAX_REQUESTS = 8


class InstanceTooLarge(ValueError):
    pass


@dataclass
class OracleResult:
    optimal_cost: int
    witness: list  # per round: (list of (parent NodeId, child NodeId) swaps, element accessed)

    def replay(self, initial: TreeState) -> int:
        tree = initial.copy(offline=True)
        cost = 0
        for swaps, e in self.witness:
            for a, b in swaps:
                tree.swap(a, b)
                cost += 1
            cost += tree.access(e)
        return cost


@lru_cache(maxsize=None)
def _swap_graph(n: int):
    configs = list(itertools.permutations(range(n)))
    index = {c: i for i, c in enumerate(configs)}
    edges = [((b - 1) >> 1, b) for b in range(1, n)]
    nbr = np.empty((len(edges), len(configs)), dtype=np.int64)
    for i, c in enumerate(configs):
        for k, (a, b) in enumerate(edges):
            s = list(c)
            s[a], s[b] = s[b], s[a]
            nbr[k, i] = index[tuple(s)]
    # level of element e in configuration i
    node_level = np.array([(p + 1).bit_length() - 1 for p in range(n)])
    arr = np.array(configs, dtype=np.int64)
    levels = np.empty_like(arr)
    rows = np.arange(len(configs))[:, None]
    levels[rows, arr] = node_level[None, :]
    return configs, index, edges, nbr, levels


def brute_force_opt(initial: TreeState, requests) -> OracleResult:
    reqs = [int(e) for e in requests]
    n = initial.n
    if n > MAX_NODES or len(reqs) > MAX_REQUESTS:
        raise InstanceTooLarge(f"oracle limited to n <= {MAX_NODES}, m <= {MAX_REQUESTS}")
    configs, index, edges, nbr, levels = _swap_graph(n)
    inf = np.iinfo(np.int64).max // 4
    cost = np.full(len(configs), inf, dtype=np.int64)
    cost[index[tuple(initial.el)]] = 0
    parents = []
    for e in reqs:
        # unit-weight relaxation over the swap graph until stable
        par = np.full(len(configs), -1, dtype=np.int64)
        via = np.full(len(configs), -1, dtype=np.int64)
        while True:
            cand = cost[nbr] + 1
            k = cand.argmin(axis=0)
            best = cand[k, np.arange(len(configs))]
            better = best < cost
            if not better.any():
                break
            cost = np.where(better, best, cost)
            par = np.where(better, nbr[k, np.arange(len(configs))], par)
            via = np.where(better, k, via)
        parents.append((par, via))
        cost = cost + levels[:, e] + 1
    end = int(cost.argmin())
    total = int(cost[end])
    witness = []
    cur = end
    for e, (par, via) in zip(reversed(reqs), reversed(parents)):
        swaps = []
        while par[cur] >= 0:
            a, b = edges[via[cur]]
            swaps.append((NodeId.from_pos(a), NodeId.from_pos(b)))
            cur = int(par[cur])
        swaps.reverse()
        witness.append((swaps, e))
    witness.reverse()
    return OracleResult(total, witness)


@dataclass
class RatioRow:
    instance_id: int
    alg: str
    total: float
    opt: int
    ratio: float
    stderr: float = 0.0


def algorithm_cost(name: str, initial: TreeState, requests, seed: int = 0) -> int:
    tree = initial.copy(offline=False)
    alg = make_algorithm(name, tree, seed=seed, requests=requests)
    return alg.run(requests, CostLedger(record=False)).total


def competitive_report(name: str, instances, seeds: int = 1000, base_seed: int = 0) -> list[RatioRow]:
    """Cost ratio against the oracle for every instance ``(initial_tree, requests)``.

    Random-Push is averaged over ``seeds`` runs; ``stderr`` is the standard
    error of that mean.
    """
    rows = []
    for i, (initial, reqs) in enumerate(instances):
        opt = brute_force_opt(initial, reqs).optimal_cost
        if name == "random-push":
            costs = np.array(
                [algorithm_cost(name, initial, reqs, seed=base_seed * 7919 + i * seeds + s) for s in range(seeds)],
                dtype=float,
            )
            total = float(costs.mean())
            se = float(costs.std(ddof=1) / math.sqrt(seeds)) if seeds > 1 else 0.0
        else:
            total, se = float(algorithm_cost(name, initial, reqs)), 0.0
        rows.append(RatioRow(i, name, total, opt, total / opt if opt else 1.0, se))
    return rows


def format_report(rows: list[RatioRow]) -> str:
    out = ["instance_id, alg, total, opt, ratio"]
    for r in rows:
        total = f"{r.total:g}" if r.stderr == 0 else f"{r.total:.4f}"
        out.append(f"{r.instance_id}, {r.alg}, {total}, {r.opt}, {r.ratio:.4f}")
    return "\n".join(out) + "\n"


def all_sequences(n: int, m: int):
    return [list(s) for s in itertools.product(range(n), repeat=m)]


def random_sequences(n: int, m: int, count: int, seed: int = 0):
    rng = random.Random(seed)
    return [[rng.randrange(n) for _ in range(m)] for _ in range(count)]
