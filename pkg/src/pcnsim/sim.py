"""End-to-end experiment: bootstrap the channel network, settle every
payment in order, and aggregate the statistics behind the reports."""

from __future__ import annotations

import bisect
import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

from scipy.stats import spearmanr

from .fees import FeeKind, FeePolicy
from .ledger import NetworkState
from .money import TICKS_PER_UNIT, Amount, format_amount, to_ticks
from .router import Outcome, cheapest_path, decide
from .workload import Workload, WorkloadConfig, generate_workload

log = logging.getLogger(__name__)

OUTCOMES = list(Outcome)
AUDIT_EVERY = 1000

# amount histogram: edges at 10^(k/8) units from 10^-2 to 10^4, i.e. 48 bins.
# Amounts outside the range fold into the first or last bin.
AMOUNT_BIN_EXPONENTS = range(-16, 33)
AMOUNT_BIN_EDGES = [10 ** (k / 8) * TICKS_PER_UNIT for k in AMOUNT_BIN_EXPONENTS]
N_AMOUNT_BINS = len(AMOUNT_BIN_EDGES) - 1


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int = 1000
    ba_m: int = 2
    n_transactions: int = 100_000
    lognormal_mu: float = 2.95
    lognormal_sigma: float = 1.2
    seed: int = 1
    initial_balance: Amount = to_ticks("1000000")
    funding: Amount = to_ticks("1000")
    chain_fee: Amount = to_ticks("0.41")
    fee_policy: FeeKind = FeeKind.IMBALANCE
    fee_rate: Fraction = Fraction(1, 200)
    flat_fee: Amount = 0
    paper_literal_check: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "fee_policy", FeeKind(self.fee_policy))
        object.__setattr__(self, "fee_rate", Fraction(self.fee_rate))
        for name in ("initial_balance", "funding", "chain_fee", "flat_fee"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        self.workload_config()  # validates the workload fields
        self.policy()

    def workload_config(self) -> WorkloadConfig:
        return WorkloadConfig(
            n_nodes=self.n_nodes,
            ba_m=self.ba_m,
            n_transactions=self.n_transactions,
            lognormal_mu=self.lognormal_mu,
            lognormal_sigma=self.lognormal_sigma,
            seed=self.seed,
        )

    def policy(self) -> FeePolicy:
        return FeePolicy(self.fee_policy, self.fee_rate, self.flat_fee)

    def echo(self) -> Dict[str, object]:
        """JSON-friendly copy with amounts as decimal strings."""
        out: Dict[str, object] = asdict(self)
        for name in ("initial_balance", "funding", "chain_fee", "flat_fee"):
            out[name] = format_amount(getattr(self, name))
        out["fee_policy"] = self.fee_policy.value
        out["fee_rate"] = str(self.fee_rate)
        return out


@dataclass
class TxRecord:
    id: int
    sender: int
    receiver: int
    amount: Amount
    outcome: Outcome
    hops: Optional[int]
    route_fee: Optional[Amount]
    paid_fee: Amount


@dataclass
class NodeRecord:
    node: int
    degree: int
    earned_fees: Amount
    balance: Amount
    channel_funds: Amount

    @property
    def wealth(self) -> Amount:
        return self.balance + self.channel_funds


@dataclass
class SimReport:
    config: SimConfig
    records: List[TxRecord] = field(default_factory=list)
    nodes: List[NodeRecord] = field(default_factory=list)
    bootstrap_chain_fees: Amount = 0
    n_channels: int = 0
    audits: int = 0
    state: Optional[NetworkState] = field(default=None, repr=False)

    def count(self, outcome: Outcome) -> int:
        return sum(1 for r in self.records if r.outcome is outcome)

    def amount_histogram(self) -> List[Dict[Outcome, int]]:
        bins: List[Dict[Outcome, int]] = [{o: 0 for o in OUTCOMES} for _ in range(N_AMOUNT_BINS)]
        for r in self.records:
            bins[amount_bin(r.amount)][r.outcome] += 1
        return bins

    def pathlen_histogram(self) -> Dict[int, Dict[Outcome, int]]:
        """Hop count -> outcome counts; payments without a route count as 0 hops."""
        top = max((r.hops or 0 for r in self.records), default=0)
        hist = {h: {o: 0 for o in OUTCOMES} for h in range(top + 1)}
        for r in self.records:
            hist[r.hops or 0][r.outcome] += 1
        return hist

    def summary(self) -> Dict[str, object]:
        cfg = self.config
        n = len(self.records)
        counts = {o.value: self.count(o) for o in OUTCOMES}
        routed = [r for r in self.records if r.outcome is Outcome.ROUTED]
        onchain = counts[Outcome.TOO_EXPENSIVE.value] + counts[Outcome.NO_ROUTE.value]
        routing_fees = sum(r.route_fee for r in routed)
        tx_chain_fees = onchain * cfg.chain_fee
        with_route = sum(1 for r in self.records if r.route_fee is not None)
        volume = sum(r.amount for r in self.records if r.outcome is not Outcome.FAILED)
        degrees = [nd.degree for nd in self.nodes]
        earned = [nd.earned_fees for nd in self.nodes]
        rho = None
        if len(set(degrees)) > 1 and len(set(earned)) > 1:
            rho = round(float(spearmanr(degrees, earned).statistic), 12)

        def frac(k: int) -> Optional[float]:
            return round(k / n, 12) if n else None

        return {
            "config": cfg.echo(),
            "n_transactions": n,
            "n_channels": self.n_channels,
            "outcome_counts": counts,
            "with_route_count": with_route,
            "with_route_fraction": frac(with_route),
            "offchain_fraction": frac(len(routed)),
            "mean_hops_offchain": (
                round(sum(r.hops for r in routed) / len(routed), 12) if routed else None
            ),
            "routing_fees": format_amount(routing_fees),
            "bootstrap_chain_fees": format_amount(self.bootstrap_chain_fees),
            "transaction_chain_fees": format_amount(tx_chain_fees),
            "transaction_phase_spend": format_amount(routing_fees + tx_chain_fees),
            "naive_onchain_cost": format_amount(n * cfg.chain_fee),
            "transferred_volume": format_amount(volume),
            "degree_earnings_spearman": rho,
            "conservation_audits": self.audits,
        }


def amount_bin(amount: Amount) -> int:
    k = bisect.bisect_right(AMOUNT_BIN_EDGES, amount) - 1
    return min(max(k, 0), N_AMOUNT_BINS - 1)


def bootstrap(cfg: SimConfig, workload: Workload) -> NetworkState:
    """Fund every node and open one channel per topology edge.

    The first node of each edge opens the channel and pays the chain fee.
    """
    state = NetworkState([cfg.initial_balance] * workload.n_nodes, cfg.chain_fee)
    for a, b in workload.edges:
        state.open_channel(a, b, cfg.funding, cfg.funding)
    return state


def run(cfg: SimConfig, workload: Optional[Workload] = None, audit_every: int = AUDIT_EVERY) -> SimReport:
    """Settle every payment of the workload in order and collect the report."""
    if workload is None:
        workload = generate_workload(cfg.workload_config())
    elif workload.n_nodes != cfg.n_nodes:
        raise ValueError(f"workload has {workload.n_nodes} nodes, config says {cfg.n_nodes}")
    state = bootstrap(cfg, workload)
    state.audit()
    report = SimReport(cfg, bootstrap_chain_fees=state.burned, n_channels=state.n_channels)
    policy = cfg.policy()
    chain_fee = cfg.chain_fee
    accounts = state.accounts

    for i, tx in enumerate(workload.transactions):
        quote = cheapest_path(state, policy, tx, cfg.paper_literal_check)
        can_pay = accounts[tx.sender].balance >= tx.amount + chain_fee
        decision = decide(quote, chain_fee, can_pay)
        outcome = decision.outcome
        if outcome is Outcome.ROUTED:
            state.apply_route(quote)
            paid = quote.total_fee
        elif outcome is Outcome.FAILED:
            paid = 0
        else:
            state.direct_transfer(tx)
            paid = chain_fee
        report.records.append(
            TxRecord(
                i,
                tx.sender,
                tx.receiver,
                tx.amount,
                outcome,
                quote.hops if quote else None,
                quote.total_fee if quote else None,
                paid,
            )
        )
        if (i + 1) % audit_every == 0:
            state.audit()
            report.audits += 1
            if (i + 1) % (audit_every * 10) == 0:
                log.info("settled %d/%d payments", i + 1, len(workload.transactions))
    state.audit()
    report.audits += 1

    for v, acc in enumerate(state.accounts):
        caps = state.out_edges(v)
        report.nodes.append(
            NodeRecord(v, len(caps), acc.earned_fees, acc.balance, sum(caps.values()))
        )
    report.state = state
    return report


class EmitError(OSError):
    pass


def _amount_or_blank(x: Optional[Amount]) -> str:
    return "" if x is None else format_amount(x)


def emit(report: SimReport, out_dir: Path) -> List[Path]:
    """Write the CSV reports and summary.json into ``out_dir``.

    transactions.csv      id,sender,receiver,amount,outcome,hops,route_fee,paid_fee
    amount_histogram.csv  bin,lower,upper,<one count column per outcome>
    pathlen_histogram.csv hops,<one count column per outcome>
    node_stats.csv        node,degree,earned_fees,balance,channel_funds,wealth
    summary.json          totals plus the full config echo
    """
    out_dir = Path(out_dir)
    outcome_cols = [o.value for o in OUTCOMES]
    written: List[Path] = []

    def open_out(name: str):
        path = out_dir / name
        written.append(path)
        try:
            return open(path, "w", newline="", encoding="utf-8")
        except OSError as exc:
            raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from exc

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise EmitError(f"cannot create {out_dir}: {exc.strerror or exc}") from exc

    with open_out("transactions.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "sender", "receiver", "amount", "outcome", "hops", "route_fee", "paid_fee"])
        for r in report.records:
            w.writerow([
                r.id,
                r.sender,
                r.receiver,
                format_amount(r.amount),
                r.outcome.value,
                "" if r.hops is None else r.hops,
                _amount_or_blank(r.route_fee),
                format_amount(r.paid_fee),
            ])

    with open_out("amount_histogram.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "lower", "upper"] + outcome_cols)
        for k, counts in enumerate(report.amount_histogram()):
            lo, hi = AMOUNT_BIN_EXPONENTS[k], AMOUNT_BIN_EXPONENTS[k + 1]
            w.writerow([k, f"{10 ** (lo / 8):.6g}", f"{10 ** (hi / 8):.6g}"] + [counts[o] for o in OUTCOMES])

    with open_out("pathlen_histogram.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hops"] + outcome_cols)
        for h, counts in report.pathlen_histogram().items():
            w.writerow([h] + [counts[o] for o in OUTCOMES])

    with open_out("node_stats.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "degree", "earned_fees", "balance", "channel_funds", "wealth"])
        for nd in report.nodes:
            w.writerow([
                nd.node,
                nd.degree,
                format_amount(nd.earned_fees),
                format_amount(nd.balance),
                format_amount(nd.channel_funds),
                format_amount(nd.wealth),
            ])

    with open_out("summary.json") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written
