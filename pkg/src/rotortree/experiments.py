"""Batch experiments over workloads, tree depths and algorithms, emitted as CSV."""

from __future__ import annotations

import csv
import hashlib
import io
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .algorithms import ALGORITHMS, SELF_ADJUSTING, make_algorithm
from .tree import CostLedger, build_tree, num_nodes
from .workloads import (
    empirical_entropy,
    gen_combined,
    gen_temporal,
    gen_uniform,
    gen_zipf,
    ingest_file,
)

COLUMNS = [
    "scenario", "depth", "algorithm", "workload", "p", "a", "m", "rep", "seed",
    "access_cost", "swap_cost", "total_cost", "entropy",
]
WORKLOADS = ("uniform", "temporal", "zipf", "combined", "corpus")
SCENARIOS = ("q1", "q2", "q3", "q4", "q5", "custom")
P_TEMPORAL = (0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9)
A_ZIPF = (1.001, 1.3, 1.6, 1.9, 2.2)
P_COMBINED = (0.0, 0.25, 0.5, 0.75, 0.9)


class BadConfig(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from any printable parts."""
    digest = hashlib.blake2b("|".join(map(str, parts)).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class ExperimentConfig:
    scenario: str = "custom"
    depths: list = field(default_factory=lambda: [7])
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    workloads: list = field(default_factory=lambda: ["uniform"])
    p_values: list = field(default_factory=lambda: [0.0])
    a_values: list = field(default_factory=lambda: [1.001])
    m: int = 10_000
    reps: int = 1
    seed: int = 0
    corpus: list = field(default_factory=list)
    out: str | None = None
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in SCENARIOS:
            raise BadConfig("scenario", f"unknown scenario {self.scenario!r}")
        if self.reps < 1:
            raise BadConfig("reps", "must be >= 1")
        if self.m < 0:
            raise BadConfig("m", "must be >= 0")
        if not self.depths or any(int(d) < 0 for d in self.depths):
            raise BadConfig("depths", "need at least one depth >= 0")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise BadConfig("algorithms", f"unknown algorithm {a!r}")
        for w in self.workloads:
            if w not in WORKLOADS:
                raise BadConfig("workloads", f"unknown workload {w!r}")
        if any(not 0 <= p <= 1 for p in self.p_values):
            raise BadConfig("p_values", "probabilities must lie in [0, 1]")
        if any(a <= 0 for a in self.a_values):
            raise BadConfig("a_values", "Zipf skew must be > 0")
        if "corpus" in self.workloads and not self.corpus:
            raise BadConfig("corpus", "corpus workload needs at least one file")
        if self.jobs < 1:
            raise BadConfig("jobs", "must be >= 1")
        return self

    def cells(self) -> list[tuple]:
        """(depth, workload, p, a, corpus_path) for every cell, in output order."""
        out = []
        for w in self.workloads:
            if w == "corpus":
                out.extend((None, w, None, None, path) for path in self.corpus)
                continue
            for d in self.depths:
                if w == "uniform":
                    out.append((int(d), w, None, None, None))
                elif w == "temporal":
                    out.extend((int(d), w, p, None, None) for p in self.p_values)
                elif w == "zipf":
                    out.extend((int(d), w, None, a, None) for a in self.a_values)
                else:
                    out.extend((int(d), w, p, a, None) for a in self.a_values for p in self.p_values)
        return out


def preset(name: str, scale: str = "full") -> ExperimentConfig:
    """Configurations of the five experiment questions.

    ``quick`` keeps the parameter grids but caps depth at 11 and m at 10**5.
    """
    quick = scale == "quick"
    m = 10**5 if quick else 10**6
    depth = 11 if quick else 15
    if name == "q1":
        return ExperimentConfig(
            "q1", [7, 9, 11, 13, 15], list(SELF_ADJUSTING) + ["static-oblivious"],
            ["temporal", "zipf"], [0.9], [2.2], m, 10,
        )
    if name == "q2":
        return ExperimentConfig("q2", [depth], list(ALGORITHMS), ["temporal"], list(P_TEMPORAL), [1.001], m, 10)
    if name == "q3":
        return ExperimentConfig("q3", [depth], list(ALGORITHMS), ["zipf"], [0.0], list(A_ZIPF), m, 10)
    if name == "q4":
        return ExperimentConfig(
            "q4", [depth], ["rotor-push", "random-push", "static-oblivious"],
            ["combined"], list(P_COMBINED), list(A_ZIPF), m, 10,
        )
    if name == "q5":
        return ExperimentConfig("q5", [0], list(ALGORITHMS), ["corpus"], [0.0], [1.001], m if quick else 0, 10)
    raise BadConfig("scenario", f"no preset named {name!r}")


# -- config files ------------------------------------------------------------------------

_LIST_FIELDS = {"depths": int, "algorithms": str, "workloads": str, "p_values": float, "a_values": float, "corpus": str}
_SCALAR_FIELDS = {"scenario": str, "m": int, "reps": int, "seed": int, "out": str, "jobs": int}


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Flat ``key = value`` lines; lists are comma separated; ``#`` starts a comment."""
    cfg = base or ExperimentConfig()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {lineno}", "expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        updates[key] = value
    return apply_overrides(cfg, updates)


def apply_overrides(cfg: ExperimentConfig, updates: dict) -> ExperimentConfig:
    changes = {}
    for key, value in updates.items():
        if value is None:
            continue
        try:
            if key in _LIST_FIELDS:
                conv = _LIST_FIELDS[key]
                items = value if isinstance(value, (list, tuple)) else str(value).split(",")
                changes[key] = [conv(str(v).strip()) for v in items if str(v).strip()]
            elif key == "out":
                changes[key] = str(value) or None
            elif key in _SCALAR_FIELDS:
                changes[key] = _SCALAR_FIELDS[key](value)
            else:
                raise BadConfig(key, "unknown configuration key")
        except ValueError as exc:
            if isinstance(exc, BadConfig):
                raise
            raise BadConfig(key, f"cannot parse {value!r}") from exc
    return replace(cfg, **changes)


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, list):
            v = ",".join(map(str, v))
        lines.append(f"{f.name} = {'' if v is None else v}")
    return "\n".join(lines) + "\n"


# -- running -----------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, "g")
    return str(x)


def cell_sequence(cfg: ExperimentConfig, cell: tuple, rep: int):
    """(requests, depth, seed) for one repetition of one workload cell."""
    depth, workload, p, a, path = cell
    seed = derive_seed(cfg.seed, workload, depth, p, a, path, cfg.m, rep)
    if workload == "corpus":
        corpus = ingest_file(path)
        reqs = corpus.sequence.requests
        if cfg.m:
            reqs = reqs[: cfg.m]
        return reqs, corpus.depth, seed
    n = num_nodes(depth)
    if workload == "uniform":
        seq = gen_uniform(n, cfg.m, seed)
    elif workload == "temporal":
        seq = gen_temporal(n, cfg.m, p, seed)
    elif workload == "zipf":
        seq = gen_zipf(n, cfg.m, a, seed)
    else:
        seq = gen_combined(n, cfg.m, a, p, seed)
    return seq.requests, depth, seed


def run_cell(cfg: ExperimentConfig, cell_index: int, rep: int) -> list[dict]:
    cell = cfg.cells()[cell_index]
    _, workload, p, a, path = cell
    reqs, depth, seed = cell_sequence(cfg, cell, rep)
    entropy = empirical_entropy(reqs) if len(reqs) else 0.0
    start = build_tree(depth, "uniform-random", derive_seed(seed, "tree"))
    req_list = reqs.tolist()
    rows = []
    for name in cfg.algorithms:
        alg = make_algorithm(name, start.copy(), seed=derive_seed(seed, name), requests=req_list)
        ledger = alg.run(req_list, CostLedger(record=False))
        rows.append(
            {
                "scenario": cfg.scenario,
                "depth": depth,
                "algorithm": name,
                "workload": Path(path).name if path else workload,
                "p": _fmt(p),
                "a": _fmt(a),
                "m": len(req_list),
                "rep": rep,
                "seed": seed,
                "access_cost": ledger.access_cost,
                "swap_cost": ledger.swap_cost,
                "total_cost": ledger.total,
                "entropy": f"{entropy:.6f}",
            }
        )
    return rows


def _run_job(args):
    cfg, cell_index, rep = args
    return cell_index, rep, run_cell(cfg, cell_index, rep)


def _mean_row(rows: list[dict], label: str = "mean") -> dict:
    out = dict(rows[0])
    out["rep"] = label
    out["seed"] = ""
    for key in ("access_cost", "swap_cost", "total_cost", "entropy"):
        out[key] = f"{np.mean([float(r[key]) for r in rows]):.4f}"
    return out


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """One row per (cell, algorithm, repetition), followed by per-cell means.

    Seeds depend on the cell parameters rather than its position, so cells
    can be added without disturbing the others.  q1 and q4 cells also get a
    ``diff-vs-static-oblivious`` row when Static-Oblivious was run.
    """
    cfg.validate()
    cells = cfg.cells()
    jobs = [(cfg, ci, rep) for ci in range(len(cells)) for rep in range(cfg.reps)]
    results: dict = {}
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, os.cpu_count() or 1)) as pool:
            for ci, rep, rows in pool.map(_run_job, jobs):
                results[ci, rep] = rows
    else:
        for job in jobs:
            ci, rep, rows = _run_job(job)
            results[ci, rep] = rows
    out = []
    for ci in range(len(cells)):
        per_alg: dict = {name: [] for name in cfg.algorithms}
        for rep in range(cfg.reps):
            for row in results[ci, rep]:
                per_alg[row["algorithm"]].append(row)
        for name in cfg.algorithms:
            out.extend(per_alg[name])
        means = {name: _mean_row(per_alg[name]) for name in cfg.algorithms}
        out.extend(means.values())
        if cfg.scenario in ("q1", "q4") and "static-oblivious" in means:
            base = means["static-oblivious"]
            for name in cfg.algorithms:
                if name == "static-oblivious":
                    continue
                diff = dict(means[name])
                diff["rep"] = "diff-vs-static-oblivious"
                for key in ("access_cost", "swap_cost", "total_cost"):
                    diff[key] = f"{float(means[name][key]) - float(base[key]):.4f}"
                out.append(diff)
    return out


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    Path(path).write_text(rows_to_csv(rows))


# -- per-request histogram -----------------------------------------------------------------


@dataclass
class Histogram:
    counts: Counter
    total: int
    mean: float

    def to_csv(self) -> str:
        lines = ["difference,count"]
        lines += [f"{d},{c}" for d, c in sorted(self.counts.items())]
        lines.append(f"mean,{self.mean:.6f}")
        return "\n".join(lines) + "\n"


def run_histogram(
    depth: int,
    m: int,
    reps: int,
    seed: int = 0,
    alg_a: str = "rotor-push",
    alg_b: str = "random-push",
) -> Histogram:
    """Per-request cost difference (alg_a - alg_b) on shared uniform sequences
    and shared initial trees."""
    counts: Counter = Counter()
    total = 0
    acc = 0
    n = num_nodes(depth)
    for rep in range(reps):
        s = derive_seed(seed, "histogram", depth, m, rep)
        reqs = gen_uniform(n, m, s).requests.tolist()
        start = build_tree(depth, "uniform-random", derive_seed(s, "tree"))
        costs = []
        for name in (alg_a, alg_b):
            # identical algorithms share one stream so self-comparison is exact
            alg = make_algorithm(name, start.copy(), seed=derive_seed(s, "alg"), requests=reqs)
            costs.append(np.asarray(alg.run(reqs).round_costs(), dtype=np.int64))
        diff = costs[0] - costs[1]
        counts.update(diff.tolist())
        total += len(diff)
        acc += int(diff.sum())
    return Histogram(counts, total, acc / total if total else 0.0)
