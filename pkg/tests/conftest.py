import random
from pathlib import Path

import pytest

from pcnsim.fees import FeeKind, FeePolicy
from pcnsim.ledger import NetworkState
from pcnsim.money import to_ticks
from pcnsim.oracle import random_edges, random_instance
from pcnsim.workload import WorkloadConfig, generate_topology, make_rng

U = to_ticks  # "U('0.41')" reads as an amount in units

FIXTURES = Path(__file__).parent / "fixtures"
FAILURES = FIXTURES / "failures"

PROPORTIONAL = FeePolicy(FeeKind.PROPORTIONAL)
IMBALANCE = FeePolicy(FeeKind.IMBALANCE)


def make_state(n, channels, balance="1000000", chain_fee="0"):
    """State with ``n`` equally funded nodes and channels given as
    ``(a, b, fund_a, fund_b)`` tuples in units."""
    state = NetworkState([U(balance)] * n, U(chain_fee))
    for a, b, fa, fb in channels:
        state.open_channel(a, b, U(fa), U(fb))
    return state


@pytest.fixture
def line():
    """s=0 -- m=1 -- r=2, every direction holding 1000."""
    return make_state(3, [(0, 1, "1000", "1000"), (1, 2, "1000", "1000")])


def seeded_instance(seed):
    """Reproducible small routing instance used by the oracle comparisons.

    3..9 nodes on an Erdos-Renyi or Barabasi-Albert topology, directional
    capacities uniform in [0, 2000] units, amount uniform in [0.01, 500]
    units, policy alternating between proportional and imbalance fees.
    """
    rng = random.Random(seed)
    n = rng.randint(3, 9)
    if rng.random() < 0.5:
        edges = random_edges(rng, n, rng.uniform(0.25, 0.8))
    else:
        m = rng.randint(1, min(3, n - 1))
        edges = generate_topology(WorkloadConfig(n_nodes=n, ba_m=m), make_rng(seed))
    state, tx = random_instance(rng, n, edges, U("2000"), (U("0.01"), U("500")))
    policy = PROPORTIONAL if seed % 2 == 0 else IMBALANCE
    return state, policy, tx


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
