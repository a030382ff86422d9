"""Incentive tokens: performance-triggered grants with vesting schedules
and pro-rata sharing of growth pools.

Sales and design rewards differ in their time attributes: sales grants
vest quickly (default cliff 0, duration 4), design grants slowly (cliff 4,
duration 12)."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Optional


class IncentiveError(Exception):
    pass


class UnknownTrigger(IncentiveError):
    pass


class NoEligibleHolders(IncentiveError):
    pass


@dataclass(frozen=True)
class VestingSchedule:
    schedule_id: str
    cliff: int
    duration: int

    def __post_init__(self) -> None:
        if self.cliff < 0 or self.duration < self.cliff:
            raise IncentiveError("need 0 <= cliff <= duration")

    def vested_fraction(self, t: int) -> Fraction:
        """Fraction vested at period t since grant; 0 before the cliff,
        linear afterwards, 1 from t = duration on."""
        if t < self.cliff:
            return Fraction(0)
        return min(
            Fraction(1), Fraction(t - self.cliff + 1, self.duration - self.cliff + 1)
        )

    def to_dict(self) -> dict:
        return {"schedule_id": self.schedule_id, "cliff": self.cliff,
                "duration": self.duration}


SALES_SCHEDULE = VestingSchedule("sales", cliff=0, duration=4)
DESIGN_SCHEDULE = VestingSchedule("design", cliff=4, duration=12)


@dataclass
class IncentiveGrant:
    grant_id: str
    grantee: str
    token: str
    amount: int
    granted_at: int
    schedule: VestingSchedule
    trigger: str
    transferred: int = 0

    def vested(self, period: int) -> int:
        f = self.schedule.vested_fraction(period - self.granted_at)
        return int(self.amount * f.numerator // f.denominator)

    def transferable(self, period: int) -> int:
        return self.vested(period) - self.transferred


@dataclass(frozen=True)
class IncentiveRules:
    """Mint rules per trigger type."""

    token: str = "INCENT"
    sale_rate: Decimal = Decimal("0.01")        # tokens per unit of sale notional
    design_grant: int = 500 * 10**6             # fixed grant per milestone
    sales_schedule: VestingSchedule = SALES_SCHEDULE
    design_schedule: VestingSchedule = DESIGN_SCHEDULE

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "sale_rate": str(self.sale_rate),
            "design_grant": self.design_grant,
            "sales_schedule": self.sales_schedule.to_dict(),
            "design_schedule": self.design_schedule.to_dict(),
        }


def record_performance(
    grant_id: str,
    grantee: str,
    trigger: str,
    rules: IncentiveRules,
    period: int,
    sale_notional: int = 0,
) -> IncentiveGrant:
    """Mint a grant for a sale (rate x notional) or a design milestone."""
    if trigger == "sale":
        amount = int(Decimal(sale_notional) * rules.sale_rate)
        schedule = rules.sales_schedule
    elif trigger == "design":
        amount = rules.design_grant
        schedule = rules.design_schedule
    else:
        raise UnknownTrigger(trigger)
    if amount <= 0:
        raise IncentiveError("grant amount must be positive")
    return IncentiveGrant(grant_id, grantee, rules.token, amount, period, schedule, trigger)


def distribute_growth(pool: int, vested_holdings: dict[str, int]) -> list[tuple[str, int]]:
    """Split a quote pool pro-rata by vested holdings.

    Integer shares floor; the remainder goes to the largest holder
    (ties broken by account id).  Sums exactly to the pool.
    """
    if pool <= 0:
        raise IncentiveError("pool must be positive")
    eligible = {a: b for a, b in vested_holdings.items() if b > 0}
    if not eligible:
        raise NoEligibleHolders()
    total = sum(eligible.values())
    order = sorted(eligible.items(), key=lambda kv: (-kv[1], kv[0]))
    shares = [(a, pool * b // total) for a, b in order]
    remainder = pool - sum(s for _, s in shares)
    shares[0] = (shares[0][0], shares[0][1] + remainder)
    return [(a, s) for a, s in shares if s > 0]
