"""PCT token fixed-point arithmetic.

All ledger amounts are integers counting 10^-18 PCT so that stakes, fees
and rewards never accumulate float drift. 0.1 PCT is exactly 10^17 units.
"""

from __future__ import annotations

from decimal import Decimal

UNITS_PER_PCT = 10**18


def pct(amount: int | str | Decimal) -> int:
    """Convert a PCT amount to integer units, exactly.

    Accepts ints, decimal strings ("0.1") and Decimal. Floats are refused:
    callers that start from floats must decide their own rounding.
    """
    if isinstance(amount, float):
        raise TypeError("float PCT amounts are ambiguous; pass str or Decimal")
    scaled = Decimal(amount) * UNITS_PER_PCT
    if scaled != scaled.to_integral_value():
        raise ValueError(f"{amount} PCT is finer than 10^-18 resolution")
    return int(scaled)


def units_from_pct_float(value: float) -> int:
    """Round a float PCT amount (a computed reward) to integer units."""
    if value <= 0:
        return 0
    return int(round(value * UNITS_PER_PCT))


def pct_float(units: int) -> float:
    return units / UNITS_PER_PCT


def format_pct(units: int) -> str:
    """Human form used in error messages: '45', '0.1', '11.64'."""
    whole, frac = divmod(abs(units), UNITS_PER_PCT)
    sign = "-" if units < 0 else ""
    if frac == 0:
        return f"{sign}{whole}"
    digits = f"{frac:018d}".rstrip("0")
    return f"{sign}{whole}.{digits}"
