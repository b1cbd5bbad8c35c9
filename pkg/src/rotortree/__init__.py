"""Self-adjusting single-source tree networks: rotor and random push-down."""

from .tree import CostLedger, NodeId, TreeState, build_tree
from .rotor import RotorState
from .algorithms import ALGORITHMS, make_algorithm

__all__ = [
    "ALGORITHMS",
    "CostLedger",
    "NodeId",
    "RotorState",
    "TreeState",
    "build_tree",
    "make_algorithm",
]
