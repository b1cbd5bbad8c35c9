"""Rotor pointers, the global path, flips and flip-ranks."""

from __future__ import annotations

import numpy as np

from .tree import NodeId

LEFT, RIGHT = 0, 1


class LevelOutOfRange(ValueError):
    pass


class RotorState:
    """One pointer per non-leaf node, stored by BFS position (0 = left)."""

    __slots__ = ("depth", "ptr")

    def __init__(self, depth: int, pointers=None):
        self.depth = depth
        size = (1 << depth) - 1
        if pointers is None:
            self.ptr = bytearray(size)
        else:
            self.ptr = bytearray(pointers)
            if len(self.ptr) != size or any(b > 1 for b in self.ptr):
                raise ValueError(f"need {size} pointers in {{0,1}}")

    def copy(self) -> "RotorState":
        return RotorState(self.depth, self.ptr)

    def pointer(self, node: NodeId) -> int:
        return self.ptr[node.pos]

    def set_pointer(self, node: NodeId, direction: int) -> None:
        self.ptr[node.pos] = direction

    def path_positions(self, upto: int | None = None) -> list[int]:
        """Positions P_0..P_upto of the global path."""
        upto = self.depth if upto is None else upto
        ptr = self.ptr
        pos = 0
        out = [0]
        for _ in range(upto):
            pos = 2 * pos + 1 + ptr[pos]
            out.append(pos)
        return out

    def path_node(self, d: int) -> int:
        ptr = self.ptr
        pos = 0
        for _ in range(d):
            pos = 2 * pos + 1 + ptr[pos]
        return pos

    def flip(self, d: int) -> None:
        if not 0 <= d <= self.depth:
            raise LevelOutOfRange(f"level {d} outside [0, {self.depth}]")
        ptr = self.ptr
        pos = 0
        # next node is computed from the pointer before it is toggled
        for _ in range(d):
            b = ptr[pos]
            ptr[pos] = b ^ 1
            pos = 2 * pos + 1 + b

    def on_path(self, pos: int) -> bool:
        level = (pos + 1).bit_length() - 1
        return self.path_node(level) == pos

    def flip_rank_pos(self, pos: int) -> int:
        level = (pos + 1).bit_length() - 1
        index = pos - (1 << level) + 1
        ptr = self.ptr
        rank = 0
        cur = 0
        for k in range(level):
            direction = (index >> (level - k - 1)) & 1
            if ptr[cur] != direction:
                rank += 1 << k
            cur = 2 * cur + 1 + direction
        return rank

    def all_ranks(self) -> np.ndarray:
        """Flip-rank of every node, indexed by BFS position."""
        n = (1 << (self.depth + 1)) - 1
        ranks = np.zeros(n, dtype=np.int64)
        ptr = np.frombuffer(bytes(self.ptr), dtype=np.uint8).astype(np.int64)
        for level in range(self.depth):
            lo, hi = (1 << level) - 1, (1 << (level + 1)) - 1
            parents = ranks[lo:hi]
            p = ptr[lo:hi]
            # left child mismatches when the pointer is right, and vice versa
            left = parents + p * (1 << level)
            right = parents + (1 - p) * (1 << level)
            ranks[2 * lo + 1 : 2 * hi + 1 : 2] = left
            ranks[2 * lo + 2 : 2 * hi + 2 : 2] = right
        return ranks

    def snapshot(self) -> str:
        lines = []
        for p, b in enumerate(self.ptr):
            node = NodeId.from_pos(p)
            lines.append(f"{node.level},{node.index},{'R' if b else 'L'}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_snapshot(cls, text: str, depth: int) -> "RotorState":
        r = cls(depth)
        for line in text.strip().splitlines():
            lv, ix, d = line.split(",")
            r.ptr[NodeId(int(lv), int(ix)).pos] = 1 if d.strip() == "R" else 0
        return r

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RotorState) and self.ptr == other.ptr

    def __repr__(self) -> str:
        return f"RotorState(depth={self.depth}, ptr={list(self.ptr)})"


def global_path(rotor: RotorState) -> list[NodeId]:
    return [NodeId.from_pos(p) for p in rotor.path_positions()]


def flip(rotor: RotorState, d: int) -> None:
    rotor.flip(d)


def flip_rank(rotor: RotorState, u: NodeId) -> int:
    return rotor.flip_rank_pos(u.pos)


def flip_rank_sim(rotor: RotorState, u: NodeId) -> int:
    """Count flips at ``u``'s level until ``u`` joins the global path.

    Exponential in the level; kept as a reference for :func:`flip_rank`.
    """
    scratch = rotor.copy()
    pos = u.pos
    limit = 1 << u.level
    for count in range(limit):
        if scratch.on_path(pos):
            return count
        scratch.flip(u.level)
    raise AssertionError(f"{u} never reached the global path")  # pragma: no cover
