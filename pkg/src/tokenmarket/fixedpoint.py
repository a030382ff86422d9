"""Fixed-point money arithmetic.

Token amounts are integers in minor units (6 decimal places); prices are
integers with 4 decimal places.  All balance-moving arithmetic stays in
integers; Decimal appears only at parse/format boundaries and for derived
ratios (reserve rate), which round half to even.
"""

from __future__ import annotations

from decimal import ROUND_HALF_EVEN, Decimal

AMOUNT_SCALE = 10**6
PRICE_SCALE = 10**4


def parse_amount(text: str | int | Decimal) -> int:
    """Parse a decimal token/quote amount into minor units (6 dp)."""
    d = Decimal(str(text)) * AMOUNT_SCALE
    q = d.quantize(Decimal(1), rounding=ROUND_HALF_EVEN)
    if q != d:
        raise ValueError(f"amount {text!r} has more than 6 decimal places")
    return int(q)


def parse_price(text: str | int | Decimal) -> int:
    """Parse a decimal price into price units (4 dp)."""
    d = Decimal(str(text)) * PRICE_SCALE
    q = d.quantize(Decimal(1), rounding=ROUND_HALF_EVEN)
    if q != d:
        raise ValueError(f"price {text!r} has more than 4 decimal places")
    return int(q)


def format_amount(units: int) -> str:
    return str(Decimal(units) / AMOUNT_SCALE)


def format_price(units: int) -> str:
    return str(Decimal(units) / PRICE_SCALE)


def notional(quantity: int, price: int) -> int:
    """Quote minor units for `quantity` token minor units at `price`.

    Rounds half to even so buyer debit and seller credit are the same number.
    """
    num = quantity * price
    q, r = divmod(num, PRICE_SCALE)
    if 2 * r > PRICE_SCALE or (2 * r == PRICE_SCALE and q % 2 == 1):
        q += 1
    return q


def ratio_6dp(numerator: int, denominator: int) -> Decimal:
    """numerator / denominator rounded half to even at 6 places."""
    if denominator == 0:
        raise ZeroDivisionError("ratio denominator is zero")
    return (Decimal(numerator) / Decimal(denominator)).quantize(
        Decimal("0.000001"), rounding=ROUND_HALF_EVEN
    )
