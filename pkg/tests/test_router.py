import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcnsim.fees import FeeKind, FeePolicy, edge_fee
from pcnsim.ledger import Transaction
from pcnsim.oracle import check_lp_constraints, exhaustive_cheapest_path
from pcnsim.router import (
    Outcome,
    RouteQuote,
    build_cost_tree,
    cheapest_path,
    decide,
    quote_from_tree,
)

from conftest import IMBALANCE, PROPORTIONAL, U, make_state, seeded_instance

S, A, B, R = 0, 1, 2, 3


def diamond(cap_br="100", cap_rb="0"):
    """s -> a -> r and s -> b -> r; every side 1000 except the b-r channel."""
    return make_state(
        4,
        [
            (S, A, "1000", "1000"),
            (A, R, "1000", "1000"),
            (S, B, "1000", "1000"),
            (B, R, cap_br, cap_rb),
        ],
    )


def test_line_tree(line):
    tree = build_cost_tree(line, PROPORTIONAL, 2, U("100"))
    assert tree.cost(2) == 0
    assert tree.cost(1) == U("0.50")
    assert tree.cost(0) == U("1.00")
    assert tree.parent_edge(0) == (0, 1)
    assert tree.parent_edge(2) is None


def test_line_quote(line):
    quote = cheapest_path(line, PROPORTIONAL, Transaction(0, 2, U("100")))
    assert quote.path == (0, 1, 2)
    assert quote.edge_flows == (U("100.50"), U("100"))
    assert quote.total_fee == U("0.50")
    assert exhaustive_cheapest_path(line, PROPORTIONAL, Transaction(0, 2, U("100"))) == (
        (0, 1, 2),
        U("0.50"),
    )


def test_amount_above_every_incoming_capacity(line):
    tree = build_cost_tree(line, PROPORTIONAL, 2, U("1000.0001"))
    assert tree.cost(2) == 0
    assert tree.cost(0) == tree.cost(1) == math.inf
    assert tree.parent_edge(1) is None


def test_direct_channel_has_no_fee(line):
    quote = cheapest_path(line, IMBALANCE, Transaction(1, 2, U("999")))
    assert quote.path == (1, 2) and quote.total_fee == 0 and quote.edge_flows == (U("999"),)


def test_first_hop_must_carry_downstream_fees():
    state = make_state(3, [(0, 1, "100", "1000"), (1, 2, "1000", "1000")])
    assert cheapest_path(state, PROPORTIONAL, Transaction(0, 2, U("100"))) is None
    assert exhaustive_cheapest_path(state, PROPORTIONAL, Transaction(0, 2, U("100"))) is None
    state._cap[0][1] = U("100.50")
    assert cheapest_path(state, PROPORTIONAL, Transaction(0, 2, U("100"))).total_fee == U("0.50")


def test_diamond_edge_feasible_at_exact_capacity():
    state = diamond()
    tx = Transaction(S, R, U("100"))
    tree = build_cost_tree(state, IMBALANCE, R, tx.amount)
    # b -> r carries exactly the amount; rebalancing discount halves b's fee
    assert tree.cost(B) == U("0.25")
    assert tree.cost(A) == U("0.50")
    assert tree.parent_edge(S) == (S, B)
    quote = cheapest_path(state, IMBALANCE, tx)
    assert quote.path == (S, B, R)
    assert quote.edge_flows == (U("100.25"), U("100"))
    assert exhaustive_cheapest_path(state, IMBALANCE, tx) == ((S, B, R), U("0.25"))


def test_diamond_one_tick_short_falls_back():
    state = diamond(cap_br="99.9999", cap_rb="0.0001")
    quote = cheapest_path(state, IMBALANCE, Transaction(S, R, U("100")))
    assert quote.path == (S, A, R) and quote.total_fee == U("0.50")


def test_diamond_tie_prefers_lower_node_id():
    state = diamond(cap_br="1000", cap_rb="1000")
    tree = build_cost_tree(state, PROPORTIONAL, R, U("100"))
    assert tree.cost(A) == tree.cost(B) == U("0.50")
    assert tree.parent_edge(S) == (S, A)
    assert cheapest_path(state, PROPORTIONAL, Transaction(S, R, U("100"))).path == (S, A, R)


def test_tie_prefers_fewer_hops():
    # 0 -> 3 directly costs nothing; 0 -> 1 -> 2 -> 3 with flat zero fees also costs nothing
    state = make_state(4, [(0, 1, "10", "10"), (1, 2, "10", "10"), (2, 3, "10", "10"), (0, 3, "10", "10")])
    free = FeePolicy(FeeKind.FLAT, flat_fee=0)
    assert cheapest_path(state, free, Transaction(0, 3, U("1"))).path == (0, 3)
    assert cheapest_path(state, free, Transaction(1, 3, U("1"))).path == (1, 0, 3)


def test_paper_literal_check_is_stricter():
    state = diamond()
    tx = Transaction(S, R, U("100"))
    tree = build_cost_tree(state, IMBALANCE, R, tx.amount, paper_literal=True)
    assert tree.parent_edge(B) == (B, S)
    quote = cheapest_path(state, IMBALANCE, tx, paper_literal=True)
    assert quote.path == (S, A, R) and quote.total_fee == U("0.50")


def test_decide():
    q = RouteQuote((0, 1, 2), (U("82.41"), U("82")), U("0.41"), U("82"))
    assert decide(q, U("0.41")).outcome is Outcome.ROUTED
    dear = RouteQuote((0, 1, 2), (U("82.45"), U("82")), U("0.45"), U("82"))
    assert decide(dear, U("0.41")).outcome is Outcome.TOO_EXPENSIVE
    assert decide(None, U("0.41")).outcome is Outcome.NO_ROUTE
    assert decide(None, U("0.41"), can_pay_onchain=False).outcome is Outcome.FAILED
    assert decide(dear, U("0.41"), can_pay_onchain=False).outcome is Outcome.FAILED
    # routing off-chain needs no on-chain funds
    assert decide(q, U("0.41"), can_pay_onchain=False).outcome is Outcome.ROUTED
    with pytest.raises(ValueError):
        decide(None, -1)


def test_tree_for_other_receiver_rejected(line):
    tree = build_cost_tree(line, PROPORTIONAL, 2, U("5"))
    with pytest.raises(ValueError):
        cheapest_path(line, PROPORTIONAL, Transaction(0, 1, U("5")), tree=tree)


def check_quote(state, policy, tx, quote):
    assert quote.path[0] == tx.sender and quote.path[-1] == tx.receiver
    assert len(set(quote.path)) == len(quote.path)
    assert quote.edge_flows[-1] == tx.amount
    assert quote.total_fee == quote.edge_flows[0] - tx.amount
    for k in range(1, len(quote.path) - 1):
        u, v = quote.path[k], quote.path[k + 1]
        fee = edge_fee(policy, state.capacity(u, v), state.capacity(v, u), tx.amount)
        assert quote.edge_flows[k - 1] - quote.edge_flows[k] == fee
    for (u, v), f in zip(zip(quote.path, quote.path[1:]), quote.edge_flows):
        assert state.capacity(u, v) >= f
    assert check_lp_constraints(state, policy, quote.path, tx).feasible


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_router_matches_oracle(seed):
    state, policy, tx = seeded_instance(seed)
    quote = cheapest_path(state, policy, tx)
    expected = exhaustive_cheapest_path(state, policy, tx)
    if expected is None:
        assert quote is None
    else:
        assert quote is not None
        assert quote.total_fee == expected[1]
        assert quote.hops == len(expected[0]) - 1
        check_quote(state, policy, tx, quote)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_tree_structure(seed):
    state, policy, tx = seeded_instance(seed)
    tree = build_cost_tree(state, policy, tx.receiver, tx.amount)
    assert tree.cost(tx.receiver) == 0
    for v in range(state.n_nodes):
        if v == tx.receiver:
            continue
        edge = tree.parent_edge(v)
        assert (edge is None) == (tree.cost(v) == math.inf)
        if edge is None:
            continue
        path = tree.path_from(v)
        assert path[-1] == tx.receiver and len(set(path)) == len(path)
        _, nxt = edge
        fee = edge_fee(policy, state.capacity(v, nxt), state.capacity(nxt, v), tx.amount)
        assert tree.cost(v) == tree.cost(nxt) + fee
        assert tree.cost(nxt) + tx.amount <= state.capacity(v, nxt)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_shared_tree_equals_per_sender_search(seed):
    state, policy, tx = seeded_instance(seed)
    tree = build_cost_tree(state, policy, tx.receiver, tx.amount)
    for s in range(state.n_nodes):
        if s == tx.receiver:
            continue
        t = Transaction(s, tx.receiver, tx.amount)
        assert cheapest_path(state, policy, t, tree=tree) == cheapest_path(state, policy, t)
        assert quote_from_tree(state, tree, s) == cheapest_path(state, policy, t)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_literal_check_never_beats_tight(seed):
    state, policy, tx = seeded_instance(seed)
    tight = cheapest_path(state, policy, tx)
    literal = cheapest_path(state, policy, tx, paper_literal=True)
    if literal is not None:
        assert tight is not None
        assert tight.total_fee <= literal.total_fee
        check_quote(state, policy, tx, literal)
