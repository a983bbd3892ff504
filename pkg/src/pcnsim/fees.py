"""Routing fee policies.

A fee is charged by the node that owns the outgoing side of an edge and is
computed from the end-to-end payment amount, not the per-edge flow. All
policies evaluate in exact rationals and round up to the next tick.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .money import Amount, ceil_div


class FeeKind(str, enum.Enum):
    FLAT = "flat"
    PROPORTIONAL = "proportional"
    IMBALANCE = "imbalance"


class ZeroForwardCapacity(ValueError):
    """The imbalance factor is undefined for an empty forward direction."""


@dataclass(frozen=True)
class FeePolicy:
    kind: FeeKind = FeeKind.IMBALANCE
    base_rate: Fraction = Fraction(1, 200)
    flat_fee: Amount = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FeeKind(self.kind))
        object.__setattr__(self, "base_rate", Fraction(self.base_rate))
        if self.base_rate < 0:
            raise ValueError("base_rate must be non-negative")
        if self.flat_fee < 0:
            raise ValueError("flat_fee must be non-negative")

    def for_amount(self, amount: Amount) -> Callable[[Amount, Amount], Amount]:
        """Return ``fee(cap_forward, cap_reverse)`` specialised to one amount.

        Used by the router's inner loop; results equal :func:`edge_fee`.
        """
        if amount <= 0:
            raise ValueError("amount must be positive")
        if self.kind is FeeKind.FLAT:
            flat = self.flat_fee
            return lambda fwd, rev: flat
        num, den = self.base_rate.numerator, self.base_rate.denominator
        if self.kind is FeeKind.PROPORTIONAL:
            fee = ceil_div(num * amount, den)
            return lambda fwd, rev: fee
        scaled = num * amount
        den2 = 2 * den

        def imbalance_fee(fwd: Amount, rev: Amount) -> Amount:
            if fwd <= 0:
                raise ZeroForwardCapacity("imbalance fee needs cap_forward > 0")
            return -(-(scaled * (fwd + rev)) // (den2 * fwd))

        return imbalance_fee


def imbalance_factor(cap_forward: Amount, cap_reverse: Amount) -> Fraction:
    """``(fwd + rev) / (2 fwd)``: 1 when balanced, below 1 when the payment
    moves funds toward balance, above 1 when it drains the forward side."""
    if cap_forward <= 0:
        raise ZeroForwardCapacity("imbalance factor needs cap_forward > 0")
    return Fraction(cap_forward + cap_reverse, 2 * cap_forward)


def edge_fee(policy: FeePolicy, cap_forward: Amount, cap_reverse: Amount, amount: Amount) -> Amount:
    """Fee in ticks for forwarding ``amount`` over an edge with the given capacities."""
    if amount <= 0:
        raise ValueError("amount must be positive")
    if policy.kind is FeeKind.FLAT:
        return policy.flat_fee
    exact = policy.base_rate * amount
    if policy.kind is FeeKind.IMBALANCE:
        exact *= imbalance_factor(cap_forward, cap_reverse)
    return ceil_div(exact.numerator, exact.denominator)
