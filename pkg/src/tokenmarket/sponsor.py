"""Sponsor-side mechanics: reserve accounting, commanding prices, and
backstop fulfillment of residual demand.

The sponsor issues a token against quote-currency collateral, may re-anchor
the next round's reference price inside a pre-declared band when a trigger
condition holds, and buys/sells against residual marketable orders at the
round's uniform price, capped so collateral and inventory never go negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from .auction import BUY, SELL, ClearingResult, Order
from .fixedpoint import PRICE_SCALE, notional, ratio_6dp
from .ledger import reserve_account


class SponsorError(Exception):
    pass


class NonPositiveParameter(SponsorError):
    pass


class DuplicateToken(SponsorError):
    pass


class ZeroSupply(SponsorError):
    pass


class ConditionNotMet(SponsorError):
    """No commanding-price trigger condition currently holds."""


class OutOfBand(SponsorError):
    """Proposed commanding price violates the declared band."""


class AlreadyCommandedThisRound(SponsorError):
    pass


@dataclass(frozen=True)
class CommandingPricePolicy:
    """Pre-declared commanding-price rules; immutable after issuance."""

    band_fraction: Decimal = Decimal("0.10")
    min_reserve_rate: Decimal = Decimal("0.5")
    move_threshold: Decimal = Decimal("0.15")
    zero_volume_rounds: int = 3

    def __post_init__(self) -> None:
        if not (0 < self.band_fraction <= 1):
            raise NonPositiveParameter("band_fraction must be in (0, 1]")

    def band(self, reference: int) -> tuple[Decimal, Decimal]:
        ref = Decimal(reference)
        return ref * (1 - self.band_fraction), ref * (1 + self.band_fraction)

    def to_dict(self) -> dict:
        return {
            "band_fraction": str(self.band_fraction),
            "min_reserve_rate": str(self.min_reserve_rate),
            "move_threshold": str(self.move_threshold),
            "zero_volume_rounds": self.zero_volume_rounds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CommandingPricePolicy":
        return cls(
            band_fraction=Decimal(str(d.get("band_fraction", "0.10"))),
            min_reserve_rate=Decimal(str(d.get("min_reserve_rate", "0.5"))),
            move_threshold=Decimal(str(d.get("move_threshold", "0.15"))),
            zero_volume_rounds=int(d.get("zero_volume_rounds", 3)),
        )


@dataclass
class ReservePosition:
    token: str
    sponsor: str
    collateral: int       # quote minor units held in the reserve account
    issued_supply: int    # token minor units
    issue_price: int      # price units
    inventory: int        # sponsor's own token units, starts at issued_supply
    policy: CommandingPricePolicy = field(default_factory=CommandingPricePolicy)

    @property
    def account(self) -> str:
        return reserve_account(self.token)


@dataclass
class RoundState:
    """Trigger inputs for a commanding-price attempt."""

    reference: int
    reserve_rate: Decimal
    last_return: Optional[Decimal] = None  # fractional price move of last round
    zero_volume_streak: int = 0
    commanded_this_round: bool = False


@dataclass(frozen=True)
class SponsorFill:
    side: str        # sponsor's side: 'buy' takes residual sells into inventory
    order_id: str
    account: str
    quantity: int    # filled quantity; may be below the residual (capped)
    capped: int      # residual quantity the caps left unfilled
    price: int


def create_position(
    token: str,
    sponsor: str,
    supply: int,
    issue_price: int,
    collateral: int,
    policy: Optional[CommandingPricePolicy] = None,
) -> ReservePosition:
    if supply <= 0 or issue_price <= 0 or collateral <= 0:
        raise NonPositiveParameter("supply, issue_price and collateral must be > 0")
    return ReservePosition(
        token=token,
        sponsor=sponsor,
        collateral=collateral,
        issued_supply=supply,
        issue_price=issue_price,
        inventory=supply,
        policy=policy or CommandingPricePolicy(),
    )


def reserve_rate(position: ReservePosition) -> Decimal:
    """collateral / (issued_supply x issue_price), half-even at 6 places."""
    if position.issued_supply <= 0:
        raise ZeroSupply(position.token)
    return ratio_6dp(
        position.collateral * PRICE_SCALE,
        position.issued_supply * position.issue_price,
    )


def triggers_active(policy: CommandingPricePolicy, state: RoundState) -> list[str]:
    active = []
    if state.reserve_rate < policy.min_reserve_rate:
        active.append("low_reserve")
    if state.last_return is not None and abs(state.last_return) > policy.move_threshold:
        active.append("large_move")
    if state.zero_volume_streak >= policy.zero_volume_rounds:
        active.append("stalled_volume")
    return active


def check_command(
    policy: CommandingPricePolicy, proposed: int, state: RoundState
) -> int:
    """Validate a proposed commanding price; returns it when acceptable."""
    if state.commanded_this_round:
        raise AlreadyCommandedThisRound()
    if not triggers_active(policy, state):
        raise ConditionNotMet()
    lo, hi = policy.band(state.reference)
    if not (lo <= proposed <= hi):
        raise OutOfBand(
            f"{proposed} outside [{lo}, {hi}] around reference {state.reference}"
        )
    return proposed


def fulfill_residuals(
    clearing: ClearingResult, position: ReservePosition
) -> list[SponsorFill]:
    """Backstop residual marketable orders at the round's uniform price.

    Runs after participant matching.  Sells from inventory to residual
    buyers first (replenishing collateral), then buys residual sells with
    collateral.  Caps keep collateral >= 0 and inventory >= 0; capped
    shortfalls are reported, never an error.
    """
    price = clearing.clearing_price
    if price is None:
        price = clearing.reference_price_next
    fills: list[SponsorFill] = []
    for order, residual in clearing.residual_buys:
        qty = min(residual, position.inventory)
        if qty > 0:
            position.inventory -= qty
            position.collateral += notional(qty, price)
        fills.append(
            SponsorFill(SELL, order.order_id, order.account, qty, residual - qty, price)
        )
    for order, residual in clearing.residual_sells:
        affordable = position.collateral * PRICE_SCALE // price
        qty = min(residual, affordable)
        # half-even rounding can push notional one unit above qty*price/scale
        while qty > 0 and notional(qty, price) > position.collateral:
            qty -= 1
        if qty > 0:
            position.collateral -= notional(qty, price)
            position.inventory += qty
        fills.append(
            SponsorFill(BUY, order.order_id, order.account, qty, residual - qty, price)
        )
    return [f for f in fills if f.quantity > 0 or f.capped > 0]
