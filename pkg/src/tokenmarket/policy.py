"""Per-token monetary policies: scheduled inflation, bottom-flow
redistribution, and spending-domain restrictions."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Optional

DEFAULT_CATEGORIES = frozenset(
    {"food", "groceries", "luxury", "investment", "services", "general"}
)


class PolicyError(Exception):
    pass


class AlreadyAppliedThisPeriod(PolicyError):
    pass


class UnknownCategory(PolicyError):
    pass


class FewerThanTwoAccounts(PolicyError):
    """Redistribution over fewer than two accounts; callers treat as no-op."""


@dataclass(frozen=True)
class RedistributionPolicy:
    trigger_period: int = 1      # apply every N policy periods
    top_fraction: Decimal = Decimal("0.1")
    levy_fraction: Decimal = Decimal("0.05")
    bottom_fraction: Decimal = Decimal("0.1")

    def __post_init__(self) -> None:
        for name in ("top_fraction", "levy_fraction", "bottom_fraction"):
            v = getattr(self, name)
            if not (0 < v < 1):
                raise PolicyError(f"{name} must be in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "trigger_period": self.trigger_period,
            "top_fraction": str(self.top_fraction),
            "levy_fraction": str(self.levy_fraction),
            "bottom_fraction": str(self.bottom_fraction),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RedistributionPolicy":
        return cls(
            trigger_period=int(d.get("trigger_period", 1)),
            top_fraction=Decimal(str(d.get("top_fraction", "0.1"))),
            levy_fraction=Decimal(str(d.get("levy_fraction", "0.05"))),
            bottom_fraction=Decimal(str(d.get("bottom_fraction", "0.1"))),
        )


@dataclass(frozen=True)
class TokenDefinition:
    """A token's identity plus its policy bundle."""

    token: str
    inflation_rate: Decimal = Decimal("0.02")   # per policy period
    redistribution: Optional[RedistributionPolicy] = None
    spending_domains: frozenset = frozenset({"general"})
    vesting_class: Optional[str] = None
    inflation_recipients: str = "sponsor"        # 'sponsor' | 'pro_rata'

    def __post_init__(self) -> None:
        if self.inflation_rate < 0:
            raise PolicyError("inflation_rate must be >= 0")
        if not self.spending_domains:
            raise PolicyError("spending_domains must be nonempty")

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "inflation_rate": str(self.inflation_rate),
            "redistribution": self.redistribution.to_dict() if self.redistribution else None,
            "spending_domains": sorted(self.spending_domains),
            "vesting_class": self.vesting_class,
            "inflation_recipients": self.inflation_recipients,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TokenDefinition":
        redis = d.get("redistribution")
        return cls(
            token=d["token"],
            inflation_rate=Decimal(str(d.get("inflation_rate", "0.02"))),
            redistribution=RedistributionPolicy.from_dict(redis) if redis else None,
            spending_domains=frozenset(d.get("spending_domains", ["general"])),
            vesting_class=d.get("vesting_class"),
            inflation_recipients=d.get("inflation_recipients", "sponsor"),
        )


def inflation_mint(supply: int, rate: Decimal) -> int:
    """New units for one period: round(supply x rate), half to even."""
    return int((Decimal(supply) * rate).quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def inflation_credits(
    definition: TokenDefinition,
    minted: int,
    sponsor_account: str,
    holders: dict[str, int],
) -> list[tuple[str, int]]:
    """Who receives freshly minted units.

    Default is the sponsor's inventory; 'pro_rata' splits across current
    holders with the integer remainder to the largest holder.
    """
    if minted == 0:
        return []
    if definition.inflation_recipients == "sponsor" or not holders:
        return [(sponsor_account, minted)]
    total = sum(holders.values())
    order = sorted(holders.items(), key=lambda kv: (-kv[1], kv[0]))
    credits = [(a, minted * b // total) for a, b in order]
    remainder = minted - sum(c for _, c in credits)
    credits[0] = (credits[0][0], credits[0][1] + remainder)
    return [(a, c) for a, c in credits if c > 0]


def redistribute(
    balances: dict[str, int], policy: RedistributionPolicy
) -> list[tuple[str, str, int]]:
    """Transfer set levying the top balances and splitting to the bottom.

    Top set: first max(1, floor(tau x N)) accounts by (balance desc, id asc);
    bottom set likewise from the other end.  Each levy is additionally
    capped so no payer falls below the pre-redistribution minimum balance
    (keeps the minimum monotone).  Split is equal with the integer
    remainder to the single poorest account.  Supply is conserved exactly.
    """
    if len(balances) < 2:
        raise FewerThanTwoAccounts()
    n = len(balances)
    n_top = max(1, int(policy.top_fraction * n))
    n_bot = max(1, int(policy.bottom_fraction * n))
    desc = sorted(balances.items(), key=lambda kv: (-kv[1], kv[0]))
    asc = sorted(balances.items(), key=lambda kv: (kv[1], kv[0]))
    top = desc[:n_top]
    bottom = [a for a, _ in asc[:n_bot]]
    floor = asc[0][1]
    poorest = asc[0][0]

    levies: list[tuple[str, int]] = []
    for account, bal in top:
        levy = int((Decimal(bal) * policy.levy_fraction).quantize(
            Decimal(1), rounding=ROUND_HALF_EVEN))
        levy = min(levy, bal - floor)
        if levy > 0:
            levies.append((account, levy))
    pot = sum(v for _, v in levies)
    share, remainder = divmod(pot, len(bottom))

    transfers: list[tuple[str, str, int]] = []
    li = 0
    left = levies[li][1] if levies else 0
    for receiver in bottom:
        want = share + (remainder if receiver == poorest else 0)
        while want > 0:
            payer, _ = levies[li]
            q = min(want, left)
            transfers.append((payer, receiver, q))
            want -= q
            left -= q
            if left == 0 and li + 1 < len(levies):
                li += 1
                left = levies[li][1]
    return [t for t in transfers if t[2] > 0]


def check_spend(
    definition: TokenDefinition,
    category: str,
    categories: frozenset = DEFAULT_CATEGORIES,
) -> bool:
    """True iff the token may be spent in `category`."""
    if category not in categories:
        raise UnknownCategory(category)
    return category in definition.spending_domains
