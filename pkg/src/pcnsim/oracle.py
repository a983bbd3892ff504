"""Brute-force ground truth for small networks.

Nothing here shares code with the router's search: routes are found by
enumerating every simple path, and route feasibility is certified against
the cut formulation (one inequality per node subset containing the sender).
Fees are evaluated with :func:`pcnsim.fees.edge_fee` in exact rationals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .fees import FeeKind, FeePolicy, ZeroForwardCapacity, edge_fee
from .ledger import NetworkState, NodeId, Transaction
from .money import Amount, format_amount, to_ticks

MAX_EXHAUSTIVE_NODES = 12
MAX_CUT_NODES = 20


class InstanceTooLarge(ValueError):
    pass


def path_flows(
    state: NetworkState, policy: FeePolicy, path: Sequence[NodeId], amount: Amount
) -> List[Amount]:
    """Per-edge flows for ``path``: the amount plus every fee charged downstream."""
    flows = [amount]
    for k in range(len(path) - 2, 0, -1):
        u, v = path[k], path[k + 1]
        fwd = state.capacity(u, v)
        if fwd == 0:
            # unroutable edge; any positive flow already fails the capacity test
            fee = 0
        else:
            fee = edge_fee(policy, fwd, state.capacity(v, u), amount)
        flows.append(flows[-1] + fee)
    flows.reverse()
    return flows


def exhaustive_cheapest_path(
    state: NetworkState, policy: FeePolicy, tx: Transaction
) -> Optional[Tuple[Tuple[NodeId, ...], Amount]]:
    """Cheapest feasible simple path by full enumeration.

    Ties are broken by hop count, then lexicographically by node sequence.
    Returns ``(path, total_fee)`` with the sender's own fee excluded, or
    ``None`` when no path fits the capacities.
    """
    if state.n_nodes > MAX_EXHAUSTIVE_NODES:
        raise InstanceTooLarge(f"{state.n_nodes} nodes > {MAX_EXHAUSTIVE_NODES}")
    best: Optional[Tuple[Amount, int, Tuple[NodeId, ...]]] = None
    stack: List[NodeId] = [tx.sender]
    on_path = {tx.sender}

    def visit(u: NodeId) -> None:
        nonlocal best
        for v in sorted(state.out_edges(u)):
            if v in on_path:
                continue
            stack.append(v)
            if v == tx.receiver:
                flows = path_flows(state, policy, stack, tx.amount)
                if all(state.capacity(a, b) >= f for a, b, f in zip(stack, stack[1:], flows)):
                    key = (flows[0] - tx.amount, len(stack) - 1, tuple(stack))
                    if best is None or key < best:
                        best = key
            else:
                on_path.add(v)
                visit(v)
                on_path.discard(v)
            stack.pop()

    visit(tx.sender)
    if best is None:
        return None
    return best[2], best[0]


@dataclass
class CutCheckReport:
    preservation_ok: Dict[NodeId, bool]
    violated_cuts: List[Tuple[FrozenSet[NodeId], Amount, Amount]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(self.preservation_ok.values()) and not self.violated_cuts


def check_lp_constraints(
    state: NetworkState, policy: FeePolicy, path: Sequence[NodeId], tx: Transaction
) -> CutCheckReport:
    """Check a route against the preservation and cut constraints.

    Edge variables are 1 exactly on ``path``. For every subset ``S`` holding
    the sender but not the receiver, the capacity of path edges leaving ``S`` must cover the amount
    plus fees on path edges lying entirely outside ``S``. Each violated cut is
    reported as ``(S, capacity_out, required)`` in ticks.
    """
    n = state.n_nodes
    if n > MAX_CUT_NODES:
        raise InstanceTooLarge(f"{n} nodes > {MAX_CUT_NODES}")
    edges = list(zip(path, path[1:]))
    for u, v in edges:
        if not state.has_channel(u, v):
            raise ValueError(f"path uses missing channel {u}-{v}")

    out_deg = [0] * n
    in_deg = [0] * n
    for u, v in edges:
        out_deg[u] += 1
        in_deg[v] += 1
    preservation: Dict[NodeId, bool] = {}
    for v in range(n):
        want = 1 if v == tx.sender else -1 if v == tx.receiver else 0
        preservation[v] = out_deg[v] - in_deg[v] == want

    caps = [state.capacity(u, v) for u, v in edges]
    fees = []
    for u, v in edges:
        try:
            fees.append(edge_fee(policy, state.capacity(u, v), state.capacity(v, u), tx.amount))
        except ZeroForwardCapacity:
            fees.append(0)

    report = CutCheckReport(preservation)
    # only s-r cuts: with the receiver inside S nothing has to leave S
    others = [v for v in range(n) if v not in (tx.sender, tx.receiver)]
    for mask in range(1 << len(others)):
        inside = {tx.sender}
        inside.update(v for bit, v in enumerate(others) if mask >> bit & 1)
        lhs = 0
        rhs = tx.amount
        for (u, v), cap, fee in zip(edges, caps, fees):
            if u in inside and v not in inside:
                lhs += cap
            elif u not in inside and v not in inside:
                rhs += fee
        if lhs < rhs:
            report.violated_cuts.append((frozenset(inside), lhs, rhs))
    return report


# --------------------------------------------------------------------- fixtures


def write_fixture(
    directory: Path, name: str, state: NetworkState, policy: FeePolicy, tx: Transaction, note: str = ""
) -> Path:
    """Save a replayable instance: the state dump plus tx/policy comment lines."""
    directory.mkdir(parents=True, exist_ok=True)
    head = [
        f"# tx {tx.sender} {tx.receiver} {format_amount(tx.amount)}",
        f"# policy {policy.kind.value} {policy.base_rate} {format_amount(policy.flat_fee)}",
    ]
    if note:
        head.append(f"# note {note}")
    target = directory / f"{name}.txt"
    target.write_text("\n".join(head) + "\n" + state.dump(), encoding="utf-8")
    return target


def read_fixture(path: Path) -> Tuple[NetworkState, FeePolicy, Transaction]:
    text = path.read_text(encoding="utf-8")
    tx = policy = None
    for line in text.splitlines():
        parts = line.split()
        if parts[:2] == ["#", "tx"]:
            tx = Transaction(int(parts[2]), int(parts[3]), to_ticks(parts[4]))
        elif parts[:2] == ["#", "policy"]:
            policy = FeePolicy(FeeKind(parts[2]), Fraction(parts[3]), to_ticks(parts[4]))
    if tx is None or policy is None:
        raise ValueError(f"{path} lacks tx/policy header lines")
    return NetworkState.load(text), policy, tx


def random_edges(rng, n_nodes: int, edge_prob: float) -> List[Tuple[NodeId, NodeId]]:
    """Erdos-Renyi style unordered pairs."""
    return [
        (a, b) for a, b in itertools.combinations(range(n_nodes), 2) if rng.random() < edge_prob
    ]


def random_instance(
    rng,
    n_nodes: int,
    edges: Sequence[Tuple[NodeId, NodeId]],
    max_cap: Amount,
    amount_range: Tuple[Amount, Amount],
) -> Tuple[NetworkState, Transaction]:
    """Channel graph over ``edges`` with independent uniform directional capacities.

    ``rng`` is a :class:`random.Random`. Nodes start with exactly enough
    balance to fund their channels and the chain fee is zero.
    """
    caps = [(a, b, rng.randint(0, max_cap), rng.randint(0, max_cap)) for a, b in edges]
    need = [0] * n_nodes
    for a, b, ca, cb in caps:
        need[a] += ca
        need[b] += cb
    state = NetworkState(need, 0)
    for a, b, ca, cb in caps:
        state.open_channel(a, b, ca, cb)
    s, r = rng.sample(range(n_nodes), 2)
    return state, Transaction(s, r, rng.randint(*amount_range))
