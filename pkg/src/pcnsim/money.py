"""Fixed-point money helpers.

All ledger amounts are plain ``int`` tick counts; one currency unit is
10_000 ticks. Conversion to and from decimal text goes through
:class:`decimal.Decimal` so nothing is ever rounded through a float.
"""

from __future__ import annotations

from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from typing import Union

TICKS_PER_UNIT = 10_000
_QUANTUM = Decimal(1) / TICKS_PER_UNIT

Amount = int
"""An amount of money in ticks (10^-4 units)."""


def to_ticks(value: Union[str, int, Decimal]) -> Amount:
    """Convert a decimal unit amount such as ``"0.41"`` to ticks.

    Values with more than four decimal places are rejected rather than
    silently rounded. Floats are refused; pass a string.
    """
    if isinstance(value, float):
        raise TypeError("pass amounts as str, int or Decimal, not float")
    try:
        d = Decimal(value)
    except InvalidOperation as exc:
        raise ValueError(f"not a decimal amount: {value!r}") from exc
    scaled = d * TICKS_PER_UNIT
    if scaled != scaled.to_integral_value():
        raise ValueError(f"{value!r} has sub-tick precision")
    return int(scaled)


def format_amount(ticks: Amount) -> str:
    """Render ticks as a fixed 4-decimal unit string, e.g. ``4100 -> '0.4100'``."""
    sign = "-" if ticks < 0 else ""
    whole, frac = divmod(abs(ticks), TICKS_PER_UNIT)
    return f"{sign}{whole}.{frac:04d}"


def to_decimal(ticks: Amount) -> Decimal:
    return (Decimal(ticks) * _QUANTUM).quantize(_QUANTUM, rounding=ROUND_HALF_EVEN)


def ceil_div(num: int, den: int) -> int:
    """Ceiling of ``num / den`` for integers with ``den > 0``."""
    return -(-num // den)
