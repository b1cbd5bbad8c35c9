"""Request-sequence generators, corpus ingestion and empirical entropy."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rotor import RotorState
from .tree import TreeState, build_tree, num_nodes


class InputTooShort(ValueError):
    pass


@dataclass
class RequestSequence:
    requests: np.ndarray
    n: int
    generator: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests.tolist())

    @property
    def m(self) -> int:
        return len(self.requests)

    def header(self) -> str:
        params = ",".join(f"{k}:{v}" for k, v in sorted(self.params.items()))
        return f"n={self.n} m={self.m} generator={self.generator} params={params} seed={self.seed}"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.header() + "\n")
            fh.writelines(f"{int(x)}\n" for x in self.requests)

    @classmethod
    def load(cls, path) -> "RequestSequence":
        with open(path) as fh:
            head = fh.readline().split()
            body = [int(line) for line in fh if line.strip()]
        meta = dict(tok.split("=", 1) for tok in head)
        params = {}
        if meta.get("params"):
            for item in meta["params"].split(","):
                k, v = item.split(":", 1)
                params[k] = float(v)
        seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
        seq = cls(np.asarray(body, dtype=np.int64), int(meta["n"]), meta["generator"], params, seed)
        if seq.m != int(meta["m"]):
            raise ValueError(f"header says m={meta['m']} but file has {seq.m} requests")
        return seq

    def regenerate(self) -> "RequestSequence":
        """Rebuild a synthetic sequence from its metadata alone."""
        p = self.params
        if self.generator == "uniform":
            return gen_uniform(self.n, self.m, self.seed)
        if self.generator == "temporal":
            return gen_temporal(self.n, self.m, p["p"], self.seed)
        if self.generator == "zipf":
            return gen_zipf(self.n, self.m, p["a"], self.seed)
        if self.generator == "combined":
            return gen_combined(self.n, self.m, p["a"], p["p"], self.seed)
        if self.generator == "rotor-adversary":
            return gen_rotor_adversary(int(p["x"]), self.m)[0]
        raise ValueError(f"{self.generator} sequences are not regenerable from metadata")


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _repeat_pass(base: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """With probability p set s[i] = s[i-1], sequentially for i >= 1."""
    m = len(base)
    if m == 0 or p <= 0:
        return base
    repeat = rng.random(m) < p
    repeat[0] = False
    # each entry copies from the most recent position that was not overwritten
    src = np.where(repeat, 0, np.arange(m))
    np.maximum.accumulate(src, out=src)
    return base[src]


def gen_uniform(n: int, m: int, seed=None) -> RequestSequence:
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    reqs = _rng(seed).integers(0, n, size=m, dtype=np.int64)
    return RequestSequence(reqs, n, "uniform", {}, seed)


def gen_temporal(n: int, m: int, p: float, seed=None) -> RequestSequence:
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    rng = _rng(seed)
    base = rng.integers(0, n, size=m, dtype=np.int64)
    return RequestSequence(_repeat_pass(base, p, rng), n, "temporal", {"p": p}, seed)


def zipf_pmf(n: int, a: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=np.float64) ** -a
    return w / w.sum()


def _zipf_draw(n: int, m: int, a: float, rng: np.random.Generator) -> np.ndarray:
    if a <= 0:
        raise ValueError("Zipf skew must be > 0")
    cdf = np.cumsum(zipf_pmf(n, a))
    idx = np.searchsorted(cdf, rng.random(m), side="right")
    return np.minimum(idx, n - 1).astype(np.int64)


def gen_zipf(n: int, m: int, a: float, seed=None) -> RequestSequence:
    """Element i (0-based) is drawn with probability proportional to (i+1)**-a."""
    rng = _rng(seed)
    return RequestSequence(_zipf_draw(n, m, a, rng), n, "zipf", {"a": a}, seed)


def gen_combined(n: int, m: int, a: float, p: float, seed=None) -> RequestSequence:
    rng = _rng(seed)
    base = _zipf_draw(n, m, a, rng)
    return RequestSequence(_repeat_pass(base, p, rng), n, "combined", {"a": a, "p": p}, seed)


def adversary_set(x: int) -> set[int]:
    """Root plus the two leftmost nodes of every level, as BFS positions."""
    s = {0}
    for level in range(1, x):
        s.add((1 << level) - 1)
        s.add(1 << level)
    return s


def gen_rotor_adversary(x: int, m: int | None = None, check: bool = True):
    """Requests that keep Rotor-Push inside a set of 2x-1 nodes.

    Simulates Rotor-Push on an identity-placed tree of ``x`` levels with all
    pointers left and always requests the element at the deepest global-path
    node belonging to the set.  Returns ``(sequence, initial_tree)``.
    """
    from .algorithms import rotor_push_serve
    from .tree import CostLedger

    if x < 1:
        raise ValueError("x must be >= 1")
    m = 4**x if m is None else m
    tree = build_tree(x - 1)
    initial = tree.copy()
    rotor = RotorState(x - 1)
    s = adversary_set(x)
    members = {tree.el[p] for p in s}
    ledger = CostLedger(record=False)
    reqs = np.empty(m, dtype=np.int64)
    for t in range(m):
        path = rotor.path_positions()
        d = max(i for i, pos in enumerate(path) if pos in s)
        e = tree.el[path[d]]
        reqs[t] = e
        rotor_push_serve(tree, rotor, e, ledger)
        if check and {tree.el[p] for p in s} != members:
            raise AssertionError(f"request {t} moved an element out of the adversary set")
    seq = RequestSequence(reqs, num_nodes(x - 1), "rotor-adversary", {"x": x}, None)
    return seq, initial


@dataclass
class Corpus:
    universe: list[str]
    sequence: RequestSequence
    depth: int

    @property
    def unique(self) -> int:
        return len(self.universe)


def ingest_corpus(text: str | bytes) -> Corpus:
    """Sliding window of three characters, step one; ids by first appearance."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    if len(text) < 3:
        raise InputTooShort("corpus needs at least three characters")
    ids: dict[str, int] = {}
    reqs = np.empty(len(text) - 2, dtype=np.int64)
    for i in range(len(text) - 2):
        tri = text[i : i + 3]
        reqs[i] = ids.setdefault(tri, len(ids))
    depth = 0
    while num_nodes(depth) < len(ids):
        depth += 1
    seq = RequestSequence(reqs, num_nodes(depth), "corpus", {}, None)
    return Corpus(list(ids), seq, depth)


def ingest_file(path) -> Corpus:
    return ingest_corpus(Path(path).read_bytes())


def empirical_entropy(requests) -> float:
    """Entropy in bits of the request frequency distribution."""
    reqs = requests.requests if isinstance(requests, RequestSequence) else np.asarray(requests)
    if len(reqs) == 0:
        raise ValueError("empty sequence")
    counts = np.bincount(reqs)
    counts = counts[counts > 0]
    f = counts / len(reqs)
    return float(-(f * np.log2(f)).sum()) + 0.0


def initial_tree(depth: int, seed) -> TreeState:
    return build_tree(depth, "uniform-random", seed)
