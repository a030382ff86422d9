"""Call-auction clearing: one uniform price per round.

The clearing price is chosen among candidate prices (every distinct limit
price plus the incoming reference) to maximize matched volume, then to
minimize buy/sell imbalance, then by closeness to the reference, then by
taking the lower price.  The individual trades are derived backwards from
that aggregate outcome: fills by price-then-arrival priority, counterparty
pairing greedy in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

BUY = "buy"
SELL = "sell"


class AuctionError(Exception):
    pass


class MixedTokens(AuctionError):
    """Orders for more than one token handed to a single round."""


@dataclass(frozen=True)
class Order:
    order_id: str
    account: str
    token: str
    side: str
    quantity: int        # token minor units, > 0
    limit_price: int     # price units, > 0
    round: int
    arrival: int

    def __post_init__(self) -> None:
        if self.side not in (BUY, SELL):
            raise ValueError(f"bad side {self.side!r}")
        if self.quantity <= 0:
            raise ValueError("quantity must be positive")
        if self.limit_price <= 0:
            raise ValueError("limit_price must be positive")


@dataclass(frozen=True)
class Fill:
    order_id: str
    quantity: int


@dataclass(frozen=True)
class Pairing:
    buy_order_id: str
    sell_order_id: str
    buyer: str
    seller: str
    quantity: int


@dataclass
class ScheduleRow:
    price: int
    buy_demand: int      # qty of buys with limit >= price
    sell_supply: int     # qty of sells with limit <= price
    volume: int          # min(buy_demand, sell_supply)
    imbalance: int       # |buy_demand - sell_supply|


@dataclass
class ClearingResult:
    round: int
    clearing_price: Optional[int]
    matched_volume: int
    fills: list[Fill] = field(default_factory=list)
    pairings: list[Pairing] = field(default_factory=list)
    residual_buys: list[tuple[Order, int]] = field(default_factory=list)
    residual_sells: list[tuple[Order, int]] = field(default_factory=list)
    reference_price_next: int = 0


def candidate_schedule(orders: list[Order], reference_price: int) -> list[ScheduleRow]:
    """Demand/supply table over all candidate prices, ascending."""
    _check_single_token(orders)
    prices = sorted({o.limit_price for o in orders} | {reference_price})
    rows = []
    for p in prices:
        b = sum(o.quantity for o in orders if o.side == BUY and o.limit_price >= p)
        s = sum(o.quantity for o in orders if o.side == SELL and o.limit_price <= p)
        rows.append(ScheduleRow(p, b, s, min(b, s), abs(b - s)))
    return rows


def clear_round(orders: list[Order], reference_price: int) -> ClearingResult:
    _check_single_token(orders)
    if reference_price <= 0:
        raise AuctionError("reference_price must be positive")
    rnd = orders[0].round if orders else 0
    rows = candidate_schedule(orders, reference_price)
    best = min(
        rows,
        key=lambda r: (-r.volume, r.imbalance, abs(r.price - reference_price), r.price),
    )
    if best.volume == 0:
        # no uniform price; residuals are whatever is marketable at the
        # unchanged reference, so the sponsor backstop can still act
        result = ClearingResult(rnd, None, 0, reference_price_next=reference_price)
        result.residual_buys = [
            (o, o.quantity)
            for o in _priority(orders, BUY)
            if o.limit_price >= reference_price
        ]
        result.residual_sells = [
            (o, o.quantity)
            for o in _priority(orders, SELL)
            if o.limit_price <= reference_price
        ]
        return result

    p_star = best.price
    buys = _priority([o for o in orders if o.side == BUY and o.limit_price >= p_star], BUY)
    sells = _priority([o for o in orders if o.side == SELL and o.limit_price <= p_star], SELL)
    volume = best.volume

    buy_fills = _allocate(buys, volume)
    sell_fills = _allocate(sells, volume)

    result = ClearingResult(rnd, p_star, volume, reference_price_next=p_star)
    result.fills = [Fill(o.order_id, q) for o, q in buy_fills + sell_fills if q > 0]
    result.pairings = _pair(buy_fills, sell_fills)
    result.residual_buys = [(o, o.quantity - q) for o, q in buy_fills if q < o.quantity]
    result.residual_sells = [(o, o.quantity - q) for o, q in sell_fills if q < o.quantity]
    return result


def _check_single_token(orders: list[Order]) -> None:
    if len({o.token for o in orders}) > 1:
        raise MixedTokens("orders span multiple tokens")


def _priority(orders: list[Order], side: str) -> list[Order]:
    # more aggressive limits first, then first-come first-served
    sign = -1 if side == BUY else 1
    return sorted(
        (o for o in orders if o.side == side),
        key=lambda o: (sign * o.limit_price, o.arrival),
    )


def _allocate(queue: list[Order], volume: int) -> list[tuple[Order, int]]:
    fills = []
    remaining = volume
    for o in queue:
        q = min(o.quantity, remaining)
        fills.append((o, q))
        remaining -= q
    return fills


def _pair(
    buy_fills: list[tuple[Order, int]], sell_fills: list[tuple[Order, int]]
) -> list[Pairing]:
    pairings = []
    si = 0
    sell_left = sell_fills[0][1] if sell_fills else 0
    for bo, bq in buy_fills:
        while bq > 0:
            while sell_left == 0:
                si += 1
                if si >= len(sell_fills):
                    return pairings
                sell_left = sell_fills[si][1]
            so = sell_fills[si][0]
            q = min(bq, sell_left)
            pairings.append(Pairing(bo.order_id, so.order_id, bo.account, so.account, q))
            bq -= q
            sell_left -= q
    return pairings
