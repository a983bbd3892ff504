"""Cheapest feasible routes via a receiver-rooted label-setting search.

The search runs over the reversed channel graph starting at the receiver.
A node's label is the total fee its forwarders (itself included) charge to
deliver the payment, so the flow that must cross an edge ``j -> i`` is the
amount plus the label of ``i``. A smaller label is therefore both cheaper
and easier to fit through upstream edges, which keeps label setting exact
even though capacity feasibility depends on the remaining route.

Labels are compared as ``(cost, hops, next hop)`` so every tie resolves the
same way whether the tree is built once per receiver or once per sender.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Collection, Dict, List, Optional, Tuple

from .fees import FeeKind, FeePolicy
from .ledger import NetworkState, NodeId, Transaction
from .money import Amount

Label = Tuple[Amount, int, NodeId]


@dataclass(frozen=True)
class RouteQuote:
    path: Tuple[NodeId, ...]
    edge_flows: Tuple[Amount, ...]
    total_fee: Amount
    amount: Amount

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    @property
    def sender(self) -> NodeId:
        return self.path[0]

    @property
    def receiver(self) -> NodeId:
        return self.path[-1]

    def forwarder_fees(self) -> List[Amount]:
        """Fee kept by each intermediate node, in path order."""
        f = self.edge_flows
        return [f[k] - f[k + 1] for k in range(len(f) - 1)]


class Outcome(str, enum.Enum):
    ROUTED = "routed_offchain"
    TOO_EXPENSIVE = "onchain_too_expensive"
    NO_ROUTE = "onchain_no_route"
    FAILED = "failed_insufficient_funds"


@dataclass(frozen=True)
class SettlementDecision:
    outcome: Outcome
    quote: Optional[RouteQuote] = None


@dataclass
class CostTree:
    """Cheapest-fee labels toward one receiver for one payment amount.

    Only valid for the state snapshot it was built on. Nodes missing from
    ``labels`` are unreachable (infinite cost).
    """

    receiver: NodeId
    amount: Amount
    labels: Dict[NodeId, Label] = field(default_factory=dict)

    def cost(self, v: NodeId) -> float:
        lab = self.labels.get(v)
        return math.inf if lab is None else lab[0]

    def hops(self, v: NodeId) -> Optional[int]:
        lab = self.labels.get(v)
        return None if lab is None else lab[1]

    def parent_edge(self, v: NodeId) -> Optional[Tuple[NodeId, NodeId]]:
        """Next edge toward the receiver, as an original-direction edge."""
        if v == self.receiver or v not in self.labels:
            return None
        return (v, self.labels[v][2])

    def path_from(self, v: NodeId) -> List[NodeId]:
        if v not in self.labels:
            raise KeyError(f"node {v} cannot reach receiver {self.receiver}")
        path = [v]
        while v != self.receiver:
            v = self.labels[v][2]
            path.append(v)
        return path


def _search(
    state: NetworkState,
    policy: FeePolicy,
    receiver: NodeId,
    amount: Amount,
    paper_literal: bool,
    sender: Optional[NodeId] = None,
) -> Dict[NodeId, Label]:
    """Label-setting search from ``receiver`` over reversed edges.

    With ``sender`` given, stops as soon as no unsettled node can beat the
    best first hop found so far; labels already settled are final either way.
    """
    if amount <= 0:
        raise ValueError("amount must be positive")
    fee_of = policy.for_amount(amount)
    # the imbalance fee is inlined below; it dominates the inner loop
    inline = policy.kind is FeeKind.IMBALANCE
    if inline:
        scaled = policy.base_rate.numerator * amount
        den2 = 2 * policy.base_rate.denominator
    cap = state._cap
    labels: Dict[NodeId, Label] = {receiver: (0, 0, receiver)}
    settled = set()
    heap: List[Tuple[Amount, int, NodeId, NodeId]] = [(0, 0, receiver, receiver)]

    first_hops: Collection[NodeId] = ()
    remaining = 0
    best: Optional[Tuple[Amount, int, NodeId]] = None
    if sender is not None:
        first_hops = cap[sender]
        remaining = len(first_hops)
        if remaining == 0:
            return labels

    while heap:
        c, h, p, i = heapq.heappop(heap)
        if i in settled or labels[i] != (c, h, p):
            continue
        if best is not None and (c, h + 1) > best[:2]:
            break
        settled.add(i)
        if i in first_hops:
            remaining -= 1
            if cap[sender][i] >= amount + c:
                cand = (c, h + 1, i)
                if best is None or cand < best:
                    best = cand
            if remaining == 0:
                break
        need = c + amount
        for j, w_ij in cap[i].items():
            if j in settled:
                continue
            w_ji = cap[j][i]
            if paper_literal:
                if w_ji <= 0:
                    continue
                fee = fee_of(w_ji, w_ij)
                if need + fee > w_ji:
                    continue
            elif need > w_ji:
                continue
            elif inline:
                fee = -(-(scaled * (w_ji + w_ij)) // (den2 * w_ji))
            else:
                fee = fee_of(w_ji, w_ij)
            key = (c + fee, h + 1, i)
            old = labels.get(j)
            if old is None or key < old:
                labels[j] = key
                heapq.heappush(heap, (c + fee, h + 1, i, j))

    if sender is not None:
        # drop tentative labels; only settled ones are final
        return {v: labels[v] for v in settled}
    return labels


def build_cost_tree(
    state: NetworkState,
    policy: FeePolicy,
    receiver: NodeId,
    amount: Amount,
    paper_literal: bool = False,
) -> CostTree:
    """Full cheapest-fee tree toward ``receiver`` for payments of ``amount``.

    The default capacity test admits edge ``j -> i`` when ``cost(i) + amount``
    fits into it. ``paper_literal`` additionally requires room for the fee
    charged on that edge, which is stricter by exactly one fee.
    """
    state._check_node(receiver)
    return CostTree(receiver, amount, _search(state, policy, receiver, amount, paper_literal))


def quote_from_tree(state: NetworkState, tree: CostTree, sender: NodeId) -> Optional[RouteQuote]:
    """Pick the best first hop for ``sender``, ignoring the sender's own fee.

    Candidates are ordered by (fee, hop count, neighbour id).
    """
    amount = tree.amount
    labels = tree.labels
    best: Optional[Tuple[Amount, int, NodeId]] = None
    for u, w_su in state._cap[sender].items():
        lab = labels.get(u)
        if lab is None or w_su < amount + lab[0]:
            continue
        cand = (lab[0], lab[1] + 1, u)
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    path = [sender] + tree.path_from(best[2])
    flows = tuple(amount + labels[v][0] for v in path[1:])
    return RouteQuote(tuple(path), flows, best[0], amount)


def cheapest_path(
    state: NetworkState,
    policy: FeePolicy,
    tx: Transaction,
    paper_literal: bool = False,
    tree: Optional[CostTree] = None,
) -> Optional[RouteQuote]:
    """Cheapest feasible route for ``tx`` or ``None`` if there is none.

    Pass a prebuilt ``tree`` to quote many senders toward the same receiver
    and amount; otherwise a search truncated at the sender's neighbours is run.
    """
    if tree is not None:
        if tree.receiver != tx.receiver or tree.amount != tx.amount:
            raise ValueError("cost tree was built for a different receiver or amount")
    else:
        labels = _search(state, policy, tx.receiver, tx.amount, paper_literal, sender=tx.sender)
        tree = CostTree(tx.receiver, tx.amount, labels)
    return quote_from_tree(state, tree, tx.sender)


def decide(
    quote: Optional[RouteQuote], chain_fee: Amount, can_pay_onchain: bool = True
) -> SettlementDecision:
    """Choose between the quoted route and an on-chain transfer.

    Routing wins ties with the chain fee. ``can_pay_onchain`` says whether
    the sender can cover amount plus chain fee from its on-chain balance.
    """
    if chain_fee < 0:
        raise ValueError("chain_fee must be non-negative")
    if quote is not None and quote.total_fee <= chain_fee:
        return SettlementDecision(Outcome.ROUTED, quote)
    if not can_pay_onchain:
        return SettlementDecision(Outcome.FAILED, quote)
    if quote is not None:
        return SettlementDecision(Outcome.TOO_EXPENSIVE, quote)
    return SettlementDecision(Outcome.NO_ROUTE)
