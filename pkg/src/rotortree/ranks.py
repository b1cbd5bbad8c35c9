"""Recency bookkeeping: LRU element per tree level and working-set ranks."""

from __future__ import annotations

import heapq

from .tree import TreeState


class RankTracker:
    """Recency order over all elements.

    Each element has a key; larger keys are more recent.  Accessed elements
    get the round counter, never-accessed ones get ``-1 - p`` where ``p`` is
    the BFS position of their initial node, so a deeper initial slot counts
    as less recently used.  ``lru(level)`` uses lazy per-level min-heaps.
    """

    def __init__(self, tree: TreeState):
        self.tree = tree
        self.clock = 0
        self.key = [-1 - tree.nd[e] for e in range(tree.n)]
        self.heaps: list[list[tuple[int, int]]] = [[] for _ in range(tree.depth + 1)]
        for e in range(tree.n):
            self.heaps[tree.level(e)].append((self.key[e], e))
        for h in self.heaps:
            heapq.heapify(h)

    def touch(self, e: int) -> None:
        self.clock += 1
        self.key[e] = self.clock
        self.relocated(e)

    def relocated(self, e: int) -> None:
        level = self.tree.level(e)
        heap = self.heaps[level]
        heapq.heappush(heap, (self.key[e], e))
        if len(heap) > 4 * (1 << level) + 64:
            self._compact(level)

    def _compact(self, level: int) -> None:
        tree, key = self.tree, self.key
        lo = (1 << level) - 1
        members = tree.el[lo : 2 * lo + 1]
        heap = [(key[e], e) for e in members]
        heapq.heapify(heap)
        self.heaps[level] = heap

    def lru(self, level: int) -> int:
        """Least recently used element currently on ``level``."""
        heap = self.heaps[level]
        key, nd = self.key, self.tree.nd
        lo, hi = (1 << level) - 1, (1 << (level + 1)) - 1
        while heap:
            k, e = heap[0]
            if key[e] == k and lo <= nd[e] < hi:
                return e
            heapq.heappop(heap)
        raise AssertionError(f"no element found on level {level}")  # pragma: no cover

    def rank(self, e: int) -> int:
        """Number of elements at least as recent as ``e`` (so 1 for the MRU)."""
        k = self.key[e]
        return sum(1 for x in self.key if x >= k)

    def recency_order(self) -> list[int]:
        return sorted(range(len(self.key)), key=lambda e: -self.key[e])


def working_set_ranks(requests) -> list[int]:
    """Rank of each request: distinct elements accessed since the previous
    access of the same element, inclusive.  A first access counts the
    distinct elements seen so far, itself included."""
    reqs = [int(x) for x in requests]
    m = len(reqs)
    bit = [0] * (m + 1)

    def add(i: int, v: int) -> None:
        i += 1
        while i <= m:
            bit[i] += v
            i += i & -i

    def prefix(i: int) -> int:
        # sum over positions [0, i)
        s = 0
        while i > 0:
            s += bit[i]
            i -= i & -i
        return s

    last: dict[int, int] = {}
    ranks = []
    for t, e in enumerate(reqs):
        prev = last.get(e)
        if prev is None:
            ranks.append(len(last) + 1)
        else:
            # each element counts once, at its latest access time
            ranks.append(prefix(t) - prefix(prev))
            add(prev, -1)
        add(t, 1)
        last[e] = t
    return ranks
