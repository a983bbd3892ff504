"""Network state: on-chain accounts, bilateral channels and settlement.

Capacities are stored per direction, ``cap(u, v)`` being the funds ``u``
can push to ``v`` inside their shared channel. Every mutation keeps

    sum(balances) + sum(channel totals) + burned == initial supply

exactly, in ticks.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterator, List, Sequence, Tuple

from .money import Amount, format_amount, to_ticks

if TYPE_CHECKING:
    from .router import RouteQuote

NodeId = int
ChannelRef = Tuple[NodeId, NodeId]


class LedgerError(Exception):
    """Base class for rejected ledger operations. State is left untouched."""


class DuplicateChannel(LedgerError):
    pass


class NoSuchChannel(LedgerError):
    pass


class StaleQuote(LedgerError):
    """A route no longer fits the current capacities."""


class ConservationError(AssertionError):
    pass


class InsufficientBalance(LedgerError):
    def __init__(self, node: NodeId, needed: Amount, available: Amount):
        self.node = node
        self.needed = needed
        self.available = available
        super().__init__(
            f"node {node} needs {format_amount(needed)} but holds "
            f"{format_amount(available)} (short {format_amount(self.shortfall)})"
        )

    @property
    def shortfall(self) -> Amount:
        return self.needed - self.available


@dataclass(frozen=True)
class Channel:
    """Read-only view of one channel, oriented as it was opened."""

    a: NodeId
    b: NodeId
    cap_ab: Amount
    cap_ba: Amount

    @property
    def total(self) -> Amount:
        return self.cap_ab + self.cap_ba

    @property
    def ref(self) -> ChannelRef:
        return (self.a, self.b)


@dataclass
class NodeAccount:
    balance: Amount
    earned_fees: Amount = 0


@dataclass(frozen=True)
class Transaction:
    sender: NodeId
    receiver: NodeId
    amount: Amount

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ValueError(f"sender and receiver are both {self.sender}")
        if self.amount <= 0:
            raise ValueError(f"transaction amount must be positive, got {self.amount}")


def _key(u: NodeId, v: NodeId) -> ChannelRef:
    return (u, v) if u < v else (v, u)


class NetworkState:
    """Balances, channels and burned chain fees for a fixed node set."""

    def __init__(self, balances: Sequence[Amount], chain_fee: Amount):
        if chain_fee < 0:
            raise ValueError("chain_fee must be non-negative")
        if any(b < 0 for b in balances):
            raise ValueError("initial balances must be non-negative")
        self.accounts: List[NodeAccount] = [NodeAccount(b) for b in balances]
        self.chain_fee = chain_fee
        self.burned: Amount = 0
        self.initial_supply: Amount = sum(balances)
        # _cap[u][v] is the capacity u -> v; present iff a channel exists.
        self._cap: List[Dict[NodeId, Amount]] = [{} for _ in balances]
        # unordered pair -> orientation (a, b) used when the channel was opened
        self._orient: Dict[ChannelRef, ChannelRef] = {}

    # ------------------------------------------------------------------ queries

    @property
    def n_nodes(self) -> int:
        return len(self.accounts)

    def _check_node(self, v: NodeId) -> None:
        if not 0 <= v < len(self.accounts):
            raise ValueError(f"unknown node {v}")

    def balance(self, v: NodeId) -> Amount:
        return self.accounts[v].balance

    def capacity(self, u: NodeId, v: NodeId) -> Amount:
        """Capacity of the directed edge u -> v (KeyError if no channel)."""
        return self._cap[u][v]

    def out_edges(self, u: NodeId) -> Dict[NodeId, Amount]:
        """Live mapping neighbour -> capacity u -> neighbour. Do not mutate."""
        return self._cap[u]

    def degree(self, v: NodeId) -> int:
        return len(self._cap[v])

    def has_channel(self, u: NodeId, v: NodeId) -> bool:
        return v in self._cap[u]

    def channel(self, u: NodeId, v: NodeId) -> Channel:
        try:
            a, b = self._orient[_key(u, v)]
        except KeyError:
            raise NoSuchChannel(f"no channel between {u} and {v}") from None
        return Channel(a, b, self._cap[a][b], self._cap[b][a])

    def channels(self) -> Iterator[Channel]:
        """All channels, sorted by unordered node pair."""
        for key in sorted(self._orient):
            a, b = self._orient[key]
            yield Channel(a, b, self._cap[a][b], self._cap[b][a])

    @property
    def n_channels(self) -> int:
        return len(self._orient)

    def wealth(self, v: NodeId) -> Amount:
        """On-chain balance plus own-side capacity in every channel."""
        return self.accounts[v].balance + sum(self._cap[v].values())

    def total_locked(self) -> Amount:
        return sum(sum(caps.values()) for caps in self._cap)

    def conserved(self) -> bool:
        held = sum(acc.balance for acc in self.accounts)
        return held + self.total_locked() + self.burned == self.initial_supply

    def audit(self) -> None:
        """Raise :class:`ConservationError` if any tick went missing."""
        held = sum(acc.balance for acc in self.accounts)
        locked = self.total_locked()
        if held + locked + self.burned != self.initial_supply:
            raise ConservationError(
                f"balances {held} + channels {locked} + burned {self.burned} "
                f"!= supply {self.initial_supply}"
            )

    def snapshot(self) -> "NetworkState":
        return copy.deepcopy(self)

    # ---------------------------------------------------------------- mutations

    def _require(self, v: NodeId, needed: Amount) -> None:
        have = self.accounts[v].balance
        if have < needed:
            raise InsufficientBalance(v, needed, have)

    def open_channel(self, a: NodeId, b: NodeId, fund_a: Amount, fund_b: Amount) -> ChannelRef:
        """Open a channel funded from both on-chain balances; ``a`` pays the chain fee."""
        self._check_node(a)
        self._check_node(b)
        if a == b:
            raise ValueError("a channel needs two distinct endpoints")
        if fund_a < 0 or fund_b < 0:
            raise ValueError("channel funding must be non-negative")
        if _key(a, b) in self._orient:
            raise DuplicateChannel(f"channel {a}-{b} already open")
        self._require(a, fund_a + self.chain_fee)
        self._require(b, fund_b)
        self.accounts[a].balance -= fund_a + self.chain_fee
        self.accounts[b].balance -= fund_b
        self.burned += self.chain_fee
        self._cap[a][b] = fund_a
        self._cap[b][a] = fund_b
        self._orient[_key(a, b)] = (a, b)
        return (a, b)

    def close_channel(self, ref: ChannelRef, initiator: NodeId) -> None:
        key = _key(*ref)
        if key not in self._orient:
            raise NoSuchChannel(f"no channel between {ref[0]} and {ref[1]}")
        a, b = self._orient[key]
        if initiator not in (a, b):
            raise ValueError(f"node {initiator} is not party to channel {a}-{b}")
        self._require(initiator, self.chain_fee)
        cap_ab, cap_ba = self._cap[a][b], self._cap[b][a]
        self.accounts[a].balance += cap_ab
        self.accounts[b].balance += cap_ba
        self.accounts[initiator].balance -= self.chain_fee
        self.burned += self.chain_fee
        del self._cap[a][b]
        del self._cap[b][a]
        del self._orient[key]

    def direct_transfer(self, tx: Transaction) -> None:
        """Settle ``tx`` on chain; the sender pays amount plus chain fee."""
        self._require(tx.sender, tx.amount + self.chain_fee)
        self.accounts[tx.sender].balance -= tx.amount + self.chain_fee
        self.accounts[tx.receiver].balance += tx.amount
        self.burned += self.chain_fee

    def apply_route(self, quote: "RouteQuote") -> None:
        """Shift per-edge flows along ``quote.path``; all-or-nothing.

        Each forwarder keeps the difference between what it receives and
        what it passes on, which shows up as its channel-side wealth.
        """
        path, flows = quote.path, quote.edge_flows
        if len(flows) != len(path) - 1:
            raise ValueError("edge_flows must have one entry per path edge")
        for u, v, f in zip(path, path[1:], flows):
            caps = self._cap[u]
            if v not in caps:
                raise StaleQuote(f"channel {u}-{v} no longer exists")
            if caps[v] < f:
                raise StaleQuote(
                    f"edge {u}->{v} holds {format_amount(caps[v])}, needs {format_amount(f)}"
                )
        for u, v, f in zip(path, path[1:], flows):
            self._cap[u][v] -= f
            self._cap[v][u] += f
        for k in range(1, len(path) - 1):
            self.accounts[path[k]].earned_fees += flows[k - 1] - flows[k]

    # ------------------------------------------------------------ serialization

    def dump(self) -> str:
        """Deterministic sorted text dump, used for golden tests and fixtures."""
        lines = [
            f"nodes {self.n_nodes}",
            f"chain_fee {format_amount(self.chain_fee)}",
            f"initial_supply {format_amount(self.initial_supply)}",
            f"burned {format_amount(self.burned)}",
        ]
        for v, acc in enumerate(self.accounts):
            lines.append(
                f"node {v} balance {format_amount(acc.balance)} "
                f"earned {format_amount(acc.earned_fees)}"
            )
        for ch in self.channels():
            lines.append(
                f"channel {ch.a} {ch.b} cap_ab {format_amount(ch.cap_ab)} "
                f"cap_ba {format_amount(ch.cap_ba)} total {format_amount(ch.total)}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "NetworkState":
        """Inverse of :meth:`dump`."""
        header: Dict[str, str] = {}
        nodes: List[Tuple[Amount, Amount]] = []
        chans: List[Tuple[NodeId, NodeId, Amount, Amount]] = []
        for raw in text.splitlines():
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "node":
                if int(parts[1]) != len(nodes):
                    raise ValueError(f"node lines out of order at {raw!r}")
                nodes.append((to_ticks(parts[3]), to_ticks(parts[5])))
            elif parts[0] == "channel":
                chans.append((int(parts[1]), int(parts[2]), to_ticks(parts[4]), to_ticks(parts[6])))
            else:
                header[parts[0]] = parts[1]
        if int(header["nodes"]) != len(nodes):
            raise ValueError("node count does not match node lines")
        state = cls([bal for bal, _ in nodes], to_ticks(header["chain_fee"]))
        for acc, (_, earned) in zip(state.accounts, nodes):
            acc.earned_fees = earned
        for a, b, cap_ab, cap_ba in chans:
            if _key(a, b) in state._orient:
                raise DuplicateChannel(f"channel {a}-{b} listed twice")
            state._cap[a][b] = cap_ab
            state._cap[b][a] = cap_ba
            state._orient[_key(a, b)] = (a, b)
        state.burned = to_ticks(header["burned"])
        state.initial_supply = to_ticks(header["initial_supply"])
        return state

