"""Complete binary tree with an element/node bijection, marks and costs.

Nodes are addressed as ``NodeId(level, index)``.  Internally a node is its
BFS position ``2**level - 1 + index`` so that parent/child are arithmetic.
"""

from __future__ import annotations

import random
from array import array
from typing import Iterable, NamedTuple


class TreeError(Exception):
    pass


class NotAdjacent(TreeError):
    pass


class IllegalUnmarkedSwap(TreeError):
    pass


class NodeId(NamedTuple):
    level: int
    index: int

    @property
    def pos(self) -> int:
        return (1 << self.level) - 1 + self.index

    @classmethod
    def from_pos(cls, pos: int) -> "NodeId":
        level = (pos + 1).bit_length() - 1
        return cls(level, pos - (1 << level) + 1)

    def parent(self) -> "NodeId":
        if self.level == 0:
            raise TreeError("root has no parent")
        return NodeId(self.level - 1, self.index >> 1)

    def children(self) -> tuple["NodeId", "NodeId"]:
        return NodeId(self.level + 1, 2 * self.index), NodeId(self.level + 1, 2 * self.index + 1)


def pos_level(pos: int) -> int:
    return (pos + 1).bit_length() - 1


def parent_pos(pos: int) -> int:
    return (pos - 1) >> 1


def num_nodes(depth: int) -> int:
    return (1 << (depth + 1)) - 1


def path_to_root(pos: int) -> list[int]:
    """Positions from ``pos`` up to the root, inclusive."""
    out = [pos]
    while pos:
        pos = (pos - 1) >> 1
        out.append(pos)
    return out


def tree_path(a: int, b: int) -> list[int]:
    """Positions on the unique tree path from ``a`` to ``b`` (through their LCA)."""
    up_a = [a]
    up_b = [b]
    la, lb = pos_level(a), pos_level(b)
    while la > lb:
        a = (a - 1) >> 1
        la -= 1
        up_a.append(a)
    while lb > la:
        b = (b - 1) >> 1
        lb -= 1
        up_b.append(b)
    while a != b:
        a = (a - 1) >> 1
        b = (b - 1) >> 1
        up_a.append(a)
        up_b.append(b)
    # both lists now end at the LCA
    return up_a + up_b[-2::-1]


class CostLedger:
    """Access and swap cost, totals plus an optional per-request log."""

    def __init__(self, record: bool = True):
        self.access_cost = 0
        self.swap_cost = 0
        self.record = record
        self.log_access = array("q")
        self.log_swap = array("q")
        self._req_access = 0
        self._req_swap = 0

    def charge_access(self, units: int) -> None:
        self.access_cost += units
        self._req_access += units

    def charge_swap(self, units: int = 1) -> None:
        self.swap_cost += units
        self._req_swap += units

    def end_request(self) -> tuple[int, int]:
        """Close the current request; returns its (access, swap) units."""
        a, s = self._req_access, self._req_swap
        if self.record:
            self.log_access.append(a)
            self.log_swap.append(s)
        self._req_access = 0
        self._req_swap = 0
        return a, s

    @property
    def total(self) -> int:
        return self.access_cost + self.swap_cost

    @property
    def num_requests(self) -> int:
        return len(self.log_access)

    def per_request_log(self) -> list[tuple[int, int, int]]:
        return [(i, a, s) for i, (a, s) in enumerate(zip(self.log_access, self.log_swap))]

    def round_costs(self) -> list[int]:
        return [a + s for a, s in zip(self.log_access, self.log_swap)]


class TreeState:
    """Placement of elements ``0..n-1`` on the nodes of a complete binary tree.

    ``el[pos]`` is the element at a node, ``nd[e]`` the node of an element.
    Marks follow the online swap rule: a swap needs at least one marked
    endpoint and marks both.  ``offline=True`` trees (the reference tree of the
    analysis) skip that rule.
    """

    __slots__ = ("depth", "n", "el", "nd", "marks", "_marked", "offline")

    def __init__(self, depth: int, placement: Iterable[int], offline: bool = False):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.depth = depth
        self.n = num_nodes(depth)
        self.el = list(placement)
        if len(self.el) != self.n or sorted(self.el) != list(range(self.n)):
            raise ValueError(f"placement must be a permutation of range({self.n})")
        self.nd = [0] * self.n
        for pos, e in enumerate(self.el):
            self.nd[e] = pos
        self.marks = bytearray(self.n)
        self._marked: list[int] = []
        self.offline = offline

    def copy(self, offline: bool | None = None) -> "TreeState":
        t = TreeState.__new__(TreeState)
        t.depth, t.n = self.depth, self.n
        t.el = self.el[:]
        t.nd = self.nd[:]
        t.marks = bytearray(self.marks)
        t._marked = self._marked[:]
        t.offline = self.offline if offline is None else offline
        return t

    # -- queries -----------------------------------------------------------
    def node_of(self, e: int) -> NodeId:
        return NodeId.from_pos(self.nd[e])

    def element_at(self, node: NodeId) -> int:
        return self.el[node.pos]

    def level(self, e: int) -> int:
        return (self.nd[e] + 1).bit_length() - 1

    def is_marked(self, node: NodeId) -> bool:
        return bool(self.marks[node.pos])

    def marked_nodes(self) -> set[NodeId]:
        return {NodeId.from_pos(p) for p in range(self.n) if self.marks[p]}

    def check_bijection(self) -> bool:
        return all(self.nd[self.el[p]] == p for p in range(self.n)) and sorted(self.el) == list(
            range(self.n)
        )

    # -- round operations --------------------------------------------------
    def begin_round(self) -> None:
        marks = self.marks
        for p in self._marked:
            marks[p] = 0
        self._marked.clear()

    def mark_path(self, pos: int) -> None:
        """Mark every node from the root down to ``pos``."""
        marks, marked = self.marks, self._marked
        while True:
            if not marks[pos]:
                marks[pos] = 1
                marked.append(pos)
            if pos == 0:
                return
            pos = (pos - 1) >> 1

    def access(self, e: int, ledger: CostLedger | None = None) -> int:
        pos = self.nd[e]
        cost = (pos + 1).bit_length()
        self.mark_path(pos)
        if ledger is not None:
            ledger.charge_access(cost)
        return cost

    def swap_pos(self, a: int, b: int, ledger: CostLedger | None = None) -> None:
        if a > b:
            a, b = b, a
        if a != (b - 1) >> 1 or b == 0:
            raise NotAdjacent(f"{NodeId.from_pos(a)} and {NodeId.from_pos(b)} are not parent/child")
        marks = self.marks
        if not self.offline:
            if not (marks[a] or marks[b]):
                raise IllegalUnmarkedSwap(
                    f"swap of unmarked {NodeId.from_pos(a)}, {NodeId.from_pos(b)}"
                )
            if not marks[a]:
                marks[a] = 1
                self._marked.append(a)
            if not marks[b]:
                marks[b] = 1
                self._marked.append(b)
        el, nd = self.el, self.nd
        x, y = el[a], el[b]
        el[a], el[b] = y, x
        nd[x], nd[y] = b, a
        if ledger is not None:
            ledger.charge_swap()

    def _mark_walk(self, path: list[int]) -> None:
        """Legality of consecutive swaps along ``path``, marking every node.

        Each swap marks the node the next swap starts from, so the walk is
        legal exactly when its first swap is.
        """
        for a, b in zip(path, path[1:]):
            lo, hi = (a, b) if a < b else (b, a)
            if lo != (hi - 1) >> 1 or hi == 0:
                raise NotAdjacent(f"{NodeId.from_pos(a)} and {NodeId.from_pos(b)} are not parent/child")
        if self.offline:
            return
        marks, marked = self.marks, self._marked
        if not (marks[path[0]] or marks[path[1]]):
            raise IllegalUnmarkedSwap(f"swap of unmarked {NodeId.from_pos(path[0])}, {NodeId.from_pos(path[1])}")
        for p in path:
            if not marks[p]:
                marks[p] = 1
                marked.append(p)

    def swap_along(self, path: list[int], ledger: CostLedger | None = None) -> None:
        """Swap consecutive nodes of ``path`` in order.

        The element starting at ``path[0]`` ends at ``path[-1]`` and every
        other element on the path moves one step back.  Costs len(path) - 1.
        """
        if len(path) < 2:
            return
        self._mark_walk(path)
        el, nd = self.el, self.nd
        first = el[path[0]]
        for i in range(len(path) - 1):
            e = el[path[i + 1]]
            el[path[i]] = e
            nd[e] = path[i]
        el[path[-1]] = first
        nd[first] = path[-1]
        if ledger is not None:
            ledger.charge_swap(len(path) - 1)

    def transpose_along(self, path: list[int], ledger: CostLedger | None = None) -> None:
        """Exchange the end elements of ``path``: swaps along it, then back
        along all but its last edge.  Costs 2 * (len(path) - 1) - 1."""
        if len(path) < 2:
            return
        self._mark_walk(path)
        el, nd = self.el, self.nd
        a, b = path[0], path[-1]
        x, y = el[a], el[b]
        el[a], el[b] = y, x
        nd[x], nd[y] = b, a
        if ledger is not None:
            ledger.charge_swap(2 * len(path) - 3)

    def swap(self, u: NodeId, v: NodeId, ledger: CostLedger | None = None) -> None:
        self.swap_pos(u.pos, v.pos, ledger)

    # -- serialization -----------------------------------------------------
    def snapshot(self) -> str:
        lines = []
        for p in range(self.n):
            node = NodeId.from_pos(p)
            lines.append(f"{node.level},{node.index},{self.el[p]},{self.marks[p]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_snapshot(cls, text: str, offline: bool = False) -> "TreeState":
        rows = [line.split(",") for line in text.strip().splitlines()]
        placement = [0] * len(rows)
        marks = []
        for lv, ix, e, mk in rows:
            p = NodeId(int(lv), int(ix)).pos
            placement[p] = int(e)
            if mk.strip() == "1":
                marks.append(p)
        depth = len(rows).bit_length() - 1
        t = cls(depth, placement, offline=offline)
        for p in marks:
            t.marks[p] = 1
            t._marked.append(p)
        return t

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TreeState) and self.el == other.el

    def __repr__(self) -> str:
        return f"TreeState(depth={self.depth}, el={self.el})"


def build_tree(
    depth: int, layout: str = "identity", seed: int | None = None, offline: bool = False
) -> TreeState:
    """Identity layout puts element ``i`` at BFS position ``i``;
    ``uniform-random`` uses a seeded permutation."""
    n = num_nodes(depth)
    if layout == "identity":
        placement = list(range(n))
    elif layout == "uniform-random":
        placement = list(range(n))
        random.Random(seed).shuffle(placement)
    else:
        raise ValueError(f"unknown layout {layout!r}")
    return TreeState(depth, placement, offline=offline)


def access(tree: TreeState, e: int, ledger: CostLedger | None = None) -> int:
    return tree.access(e, ledger)


def swap(tree: TreeState, u: NodeId, v: NodeId, ledger: CostLedger | None = None) -> None:
    tree.swap(u, v, ledger)


def begin_round(tree: TreeState) -> None:
    tree.begin_round()
