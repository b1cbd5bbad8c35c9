"""Online tree-network algorithms and the two static baselines.

Every algorithm serves one request per call to ``serve``: it starts a new
round, pays the access, rearranges its tree through legality-checked
adjacent swaps, and closes the request on the ledger.
"""

from __future__ import annotations

import random

from .ranks import RankTracker
from .rotor import RotorState
from .tree import CostLedger, NodeId, TreeState, TreeError, num_nodes, path_to_root, tree_path

ALGORITHMS = (
    "rotor-push",
    "random-push",
    "move-half",
    "max-push",
    "static-opt",
    "static-oblivious",
)
SELF_ADJUSTING = ALGORITHMS[:4]


class LevelMismatch(TreeError):
    pass


def slide_up(tree: TreeState, pos: int, ledger: CostLedger | None) -> None:
    """Move el(pos) to the root; the path above it shifts down one level."""
    if pos:
        tree.swap_along(path_to_root(pos), ledger)


def slide_down(tree: TreeState, pos: int, ledger: CostLedger | None) -> None:
    """Move the root element to ``pos``; the path below shifts up one level."""
    if pos:
        tree.swap_along(path_to_root(pos)[::-1], ledger)


def transpose(tree: TreeState, a: int, b: int, ledger: CostLedger | None) -> None:
    """Exchange el(a) and el(b) along their tree path, all else fixed.

    Costs ``2 * dist(a, b) - 1`` swaps.  The path from ``a`` up to the LCA
    must already be marked; the rest gets marked on the way down.
    """
    if a == b:
        return
    tree.transpose_along(tree_path(a, b), ledger)


def augmented_push_down(tree: TreeState, u: NodeId | int, v: NodeId | int, ledger: CostLedger | None) -> None:
    """Cyclic shift root -> v_1 -> ... -> v -> u -> root.

    Assumes el(u) was accessed this round, so the root-to-u path is marked.
    For ``u != v`` the root-to-v path is marked by an uncharged look-up of
    el(v) before el(v) is slid up.
    """
    u = u.pos if isinstance(u, NodeId) else u
    v = v.pos if isinstance(v, NodeId) else v
    d = (u + 1).bit_length() - 1
    if (v + 1).bit_length() - 1 != d:
        raise LevelMismatch(f"{NodeId.from_pos(u)} and {NodeId.from_pos(v)} are on different levels")
    if d == 0:
        return
    if u == v:
        slide_up(tree, u, ledger)
        return
    tree.mark_path(v)
    slide_up(tree, v, ledger)
    slide_down(tree, u, ledger)
    slide_up(tree, (u - 1) >> 1, ledger)


# -- serve functions ----------------------------------------------------------


def rotor_push_serve(tree: TreeState, rotor: RotorState, e: int, ledger: CostLedger) -> None:
    tree.begin_round()
    tree.access(e, ledger)
    u = tree.nd[e]
    d = (u + 1).bit_length() - 1
    augmented_push_down(tree, u, rotor.path_node(d), ledger)
    rotor.flip(d)
    ledger.end_request()


def random_push_serve(tree: TreeState, rng: random.Random, e: int, ledger: CostLedger) -> None:
    tree.begin_round()
    tree.access(e, ledger)
    u = tree.nd[e]
    d = (u + 1).bit_length() - 1
    if d:
        # d independent left/right bits pick the level-d node
        v = (1 << d) - 1 + rng.getrandbits(d)
        augmented_push_down(tree, u, v, ledger)
    ledger.end_request()


def move_half_serve(tree: TreeState, ranks: RankTracker, e: int, ledger: CostLedger) -> None:
    tree.begin_round()
    tree.access(e, ledger)
    u = tree.nd[e]
    h = ((u + 1).bit_length() - 1) // 2
    other = ranks.lru(h)
    v = tree.nd[other]
    transpose(tree, u, v, ledger)
    ranks.touch(e)
    if other != e:
        ranks.relocated(other)
    ledger.end_request()


def max_push_cycle(tree: TreeState, ranks: RankTracker, e: int) -> list[int]:
    """Node positions [nd(e_1), ..., nd(e_k)] of the per-level LRU elements."""
    k = tree.level(e)
    return [tree.nd[ranks.lru(j)] for j in range(1, k + 1)]


def max_push_serve(tree: TreeState, ranks: RankTracker, e: int, ledger: CostLedger) -> None:
    """e -> root, old root -> nd(e_1), e_j -> nd(e_{j+1}), e_k -> nd(e).

    Realized as transpositions anchored at the root: (root, a_1), ...,
    (root, a_k), (root, u) with a_j = nd(e_j) and u = nd(e).  Each one
    leaves every node but its two endpoints unchanged.
    """
    tree.begin_round()
    tree.access(e, ledger)
    u = tree.nd[e]
    if u == 0:
        ranks.touch(e)
        ledger.end_request()
        return
    slots = max_push_cycle(tree, ranks, e)
    if slots[-1] == u:
        slots.pop()
    for a in slots:
        transpose(tree, 0, a, ledger)
    transpose(tree, 0, u, ledger)
    ranks.touch(e)
    for a in slots + [u]:
        ranks.relocated(tree.el[a])
    ledger.end_request()


def static_serve(tree: TreeState, e: int, ledger: CostLedger) -> None:
    tree.begin_round()
    tree.access(e, ledger)
    ledger.end_request()


static_oblivious_serve = static_serve


def static_opt_placement(frequencies, depth: int) -> list[int]:
    n = num_nodes(depth)
    if isinstance(frequencies, dict):
        # missing elements count as never requested
        freq = [0] * n
        for e, c in frequencies.items():
            if not 0 <= int(e) < n:
                raise ValueError(f"element {e} outside 0..{n - 1}")
            freq[int(e)] = int(c)
    else:
        freq = [int(c) for c in frequencies]
        if len(freq) != n:
            raise ValueError(f"frequencies must cover exactly {n} elements")
    return sorted(range(n), key=lambda e: (-freq[e], e))


def static_opt_build(frequencies, depth: int) -> TreeState:
    """Elements in decreasing frequency order (ties: smaller id) along BFS."""
    return TreeState(depth, static_opt_placement(frequencies, depth))


# -- uniform interface ---------------------------------------------------------


class Algorithm:
    name = "base"

    def __init__(self, tree: TreeState):
        self.tree = tree

    def serve(self, e: int, ledger: CostLedger) -> None:
        raise NotImplementedError

    def run(self, requests, ledger: CostLedger | None = None) -> CostLedger:
        ledger = CostLedger() if ledger is None else ledger
        serve = self.serve
        for e in requests:
            serve(int(e), ledger)
        return ledger


class RotorPush(Algorithm):
    name = "rotor-push"

    def __init__(self, tree: TreeState, rotor: RotorState | None = None):
        super().__init__(tree)
        self.rotor = RotorState(tree.depth) if rotor is None else rotor

    def serve(self, e, ledger):
        rotor_push_serve(self.tree, self.rotor, e, ledger)


class RandomPush(Algorithm):
    name = "random-push"

    def __init__(self, tree: TreeState, seed: int = 0):
        super().__init__(tree)
        self.seed = seed
        self.rng = random.Random(seed)

    def serve(self, e, ledger):
        random_push_serve(self.tree, self.rng, e, ledger)


class MoveHalf(Algorithm):
    name = "move-half"

    def __init__(self, tree: TreeState):
        super().__init__(tree)
        self.ranks = RankTracker(tree)

    def serve(self, e, ledger):
        move_half_serve(self.tree, self.ranks, e, ledger)


class MaxPush(Algorithm):
    name = "max-push"

    def __init__(self, tree: TreeState):
        super().__init__(tree)
        self.ranks = RankTracker(tree)

    def serve(self, e, ledger):
        max_push_serve(self.tree, self.ranks, e, ledger)


class StaticOblivious(Algorithm):
    name = "static-oblivious"

    def serve(self, e, ledger):
        static_serve(self.tree, e, ledger)


class StaticOpt(StaticOblivious):
    """Tree rebuilt by request frequency; serves by access only."""

    name = "static-opt"

    def __init__(self, tree: TreeState, requests=()):
        freq = [0] * tree.n
        for e in requests:
            freq[int(e)] += 1
        super().__init__(TreeState(tree.depth, static_opt_placement(freq, tree.depth)))


def make_algorithm(name: str, tree: TreeState, seed: int = 0, requests=()) -> Algorithm:
    """Build an algorithm by name; it owns ``tree`` (static-opt builds its own)."""
    if name == "rotor-push":
        return RotorPush(tree)
    if name == "random-push":
        return RandomPush(tree, seed)
    if name == "move-half":
        return MoveHalf(tree)
    if name == "max-push":
        return MaxPush(tree)
    if name == "static-opt":
        return StaticOpt(tree, requests)
    if name == "static-oblivious":
        return StaticOblivious(tree)
    raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
