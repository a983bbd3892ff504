"""Seeded experiment inputs: channel topology and the payment stream.

Everything is drawn from one ``numpy.random.Generator`` (PCG64) in a fixed
order: the topology first, then for each payment its sender/receiver pair
followed by its amount. The same seed always yields the same workload.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .ledger import NodeId, Transaction
from .money import TICKS_PER_UNIT, Amount, format_amount, to_ticks

Edge = Tuple[NodeId, NodeId]

EDGES_FILE = "workload_edges.csv"
TRANSACTIONS_FILE = "workload_transactions.csv"


@dataclass(frozen=True)
class WorkloadConfig:
    n_nodes: int = 1000
    ba_m: int = 2
    n_transactions: int = 100_000
    lognormal_mu: float = 2.95
    lognormal_sigma: float = 1.2
    seed: int = 1

    def __post_init__(self) -> None:
        if self.ba_m < 1:
            raise ValueError("ba_m must be at least 1")
        if self.n_nodes <= self.ba_m:
            raise ValueError(f"n_nodes ({self.n_nodes}) must exceed ba_m ({self.ba_m})")
        if self.lognormal_sigma <= 0:
            raise ValueError("lognormal_sigma must be positive")
        if self.n_transactions < 0:
            raise ValueError("n_transactions must be non-negative")


@dataclass
class Workload:
    n_nodes: int
    edges: List[Edge]
    transactions: List[Transaction]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generate_topology(cfg: WorkloadConfig, rng: np.random.Generator) -> List[Edge]:
    """Barabasi-Albert preferential attachment.

    The first ``m`` nodes start isolated; node ``m`` links to all of them and
    every later node picks ``m`` distinct targets from the list of edge
    endpoints so far (probability proportional to degree), redrawing on
    duplicates. Produces exactly ``m * (n - m)`` edges as ``(new, old)`` pairs.
    """
    m = cfg.ba_m
    edges: List[Edge] = []
    repeated: List[NodeId] = []
    targets = list(range(m))
    for source in range(m, cfg.n_nodes):
        edges.extend((source, t) for t in targets)
        repeated.extend(targets)
        repeated.extend([source] * m)
        if source + 1 == cfg.n_nodes:
            break
        chosen: List[NodeId] = []
        while len(chosen) < m:
            pick = repeated[int(rng.integers(len(repeated)))]
            if pick not in chosen:
                chosen.append(pick)
        targets = chosen
    return edges


def amount_from_log(z: float) -> Amount:
    """``exp(z)`` units rounded to the nearest tick, never below one tick."""
    if z > 700:
        raise OverflowError(f"exp({z}) is not a sensible payment amount")
    return max(1, round(math.exp(z) * TICKS_PER_UNIT))


def sample_amount(cfg: WorkloadConfig, rng: np.random.Generator) -> Amount:
    return amount_from_log(float(rng.normal(cfg.lognormal_mu, cfg.lognormal_sigma)))


def sample_pair(cfg: WorkloadConfig, rng: np.random.Generator) -> Tuple[NodeId, NodeId]:
    """Uniform sender, then a uniform receiver among the other nodes."""
    n = cfg.n_nodes
    if n < 2:
        raise ValueError("need at least two nodes")
    sender = int(rng.integers(n))
    receiver = int(rng.integers(n - 1))
    if receiver >= sender:
        receiver += 1
    return sender, receiver


def generate_workload(cfg: WorkloadConfig) -> Workload:
    rng = make_rng(cfg.seed)
    edges = generate_topology(cfg, rng)
    txs = []
    for _ in range(cfg.n_transactions):
        s, r = sample_pair(cfg, rng)
        txs.append(Transaction(s, r, sample_amount(cfg, rng)))
    return Workload(cfg.n_nodes, edges, txs)


def write_workload(workload: Workload, directory: Path) -> None:
    """Export as two CSV files so the exact workload can be replayed elsewhere."""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / EDGES_FILE, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_nodes", workload.n_nodes])
        w.writerow(["a", "b"])
        w.writerows(workload.edges)
    with open(directory / TRANSACTIONS_FILE, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "sender", "receiver", "amount"])
        for i, tx in enumerate(workload.transactions):
            w.writerow([i, tx.sender, tx.receiver, format_amount(tx.amount)])


def read_workload(directory: Path) -> Workload:
    with open(directory / EDGES_FILE, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "n_nodes" or rows[1] != ["a", "b"]:
        raise ValueError(f"{directory / EDGES_FILE}: unexpected header")
    n_nodes = int(rows[0][1])
    edges = [(int(a), int(b)) for a, b in rows[2:]]
    for a, b in edges:
        if not (0 <= a < n_nodes and 0 <= b < n_nodes):
            raise ValueError(f"edge ({a}, {b}) references a node outside [0, {n_nodes})")
    with open(directory / TRANSACTIONS_FILE, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        txs = [
            Transaction(int(row["sender"]), int(row["receiver"]), to_ticks(row["amount"]))
            for row in reader
        ]
    return Workload(n_nodes, edges, txs)
