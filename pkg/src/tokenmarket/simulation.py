"""Agent-based scenarios exercising the full exchange stack.

Agents carry a self-assertiveness multiplier alpha >= 1 (the overconfident
share of the population, default 89%, draws alpha > 1), submit limit orders
around their private valuations, and adapt those valuations toward each
round's clearing price.  Growth-gap arithmetic reproduces the doubling-law
figures alongside exact compounding.

Randomness comes from one `random.Random(seed)` (Mersenne Twister) per
scenario, so identical configs produce bit-identical metric series.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from typing import Optional

from .engine import TREASURY, Exchange
from .fixedpoint import AMOUNT_SCALE, PRICE_SCALE
from .ledger import QUOTE_TOKEN, reserve_account
from .policy import TokenDefinition
from .sponsor import CommandingPricePolicy


class SimulationError(Exception):
    pass


class ConfigInvalid(SimulationError):
    pass


class NonPositiveRate(SimulationError):
    pass


# Bloch 1989 is the default; Myers' and Svenson's figures are presets.
OVERCONFIDENT_PRESETS = {
    "bloch": 0.89,
    "myers_performance": 0.90,
    "myers_ethics": 0.86,
    "svenson": 0.80,
}


@dataclass
class AgentSpec:
    account: str
    alpha: float          # >= 1; 1 for non-overconfident agents
    valuation: float      # private valuation, price units
    budget: int           # quote minor units


@dataclass
class ScenarioConfig:
    fundamental: int = 10 * PRICE_SCALE      # price units
    rounds: int = 100
    n_agents: int = 40
    overconfident_fraction: float = OVERCONFIDENT_PRESETS["bloch"]
    alpha_spread: float = 0.10               # overconfident alpha in (1, 1+spread]
    noise: float = 0.02                      # per-order valuation noise
    initial_spread: float = 0.25             # dispersion of starting valuations
    adapt_rate: float = 0.25                 # pull toward last clearing price
    liquidity_prob: float = 0.3              # chance an agent trades for
                                             # liquidity, side drawn at random
    order_size: int = 10 * AMOUNT_SCALE      # token minor units per order
    budget: int = 2_000 * AMOUNT_SCALE       # quote per agent
    endowment: int = 100 * AMOUNT_SCALE      # tokens per agent
    asset_growth: float = 0.10               # r, per period
    gdp_growth: float = 0.03                 # g, per period
    horizon: int = 100
    bubble_threshold: float = 2.0
    seed: int = 0
    token: str = "SIM"

    def validate(self) -> None:
        if self.rounds < 0 or self.n_agents < 0:
            raise ConfigInvalid("rounds and n_agents must be >= 0")
        if self.fundamental <= 0:
            raise ConfigInvalid("fundamental must be positive")
        if not (0 <= self.overconfident_fraction <= 1):
            raise ConfigInvalid("overconfident_fraction must be in [0, 1]")


@dataclass
class MetricsRow:
    round: int
    clearing_price: Optional[int]
    matched_volume: int
    reserve_rate: str
    gini: float
    dispersion: float
    price_to_fundamental: float = 0.0

    @staticmethod
    def csv_header() -> list[str]:
        return ["round", "clearing_price", "matched_volume", "reserve_rate",
                "gini", "dispersion", "price_to_fundamental"]

    def csv_row(self) -> list:
        return [self.round, self.clearing_price if self.clearing_price is not None else "",
                self.matched_volume, self.reserve_rate,
                f"{self.gini:.6f}", f"{self.dispersion:.6f}",
                f"{self.price_to_fundamental:.6f}"]


@dataclass
class BubbleReport:
    fired_round: Optional[int]
    max_drawdown: float
    rows: list[MetricsRow] = field(default_factory=list)


def metrics_to_csv(rows: list[MetricsRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(MetricsRow.csv_header())
    for r in rows:
        w.writerow(r.csv_row())
    return out.getvalue()


# ---------------------------------------------------------------------------
# growth-gap arithmetic


def rule_of_72(rate_percent: float) -> float:
    """Doubling time in periods: 72 / rate."""
    if rate_percent <= 0:
        raise NonPositiveRate(rate_percent)
    return 72.0 / rate_percent


def describe_doubling(rate_percent: float) -> str:
    return f"about {round(rule_of_72(rate_percent))} years"


@dataclass(frozen=True)
class GrowthGap:
    asset_multiple: int      # doubling-law mode: 2^(doublings in horizon)
    gdp_multiple: int
    gap_ratio: int
    asset_exact: float       # (1+r)^horizon
    gdp_exact: float
    gap_exact: float


def growth_gap(r_percent: float, g_percent: float, horizon: int) -> GrowthGap:
    """Asset-vs-GDP multiples over `horizon` periods.

    The headline mode uses the doubling law with the doubling time rounded
    to whole periods (10% -> "about 7"), i.e. 2^(horizon // doubling); the
    exact compounded values are returned alongside.
    """
    if r_percent <= 0 or g_percent <= 0:
        raise NonPositiveRate((r_percent, g_percent))
    if horizon <= 0:
        raise SimulationError("horizon must be positive")
    asset = 2 ** (horizon // round(rule_of_72(r_percent)))
    gdp = 2 ** (horizon // round(rule_of_72(g_percent)))
    getcontext().prec = 50
    asset_exact = float((1 + Decimal(str(r_percent)) / 100) ** horizon)
    gdp_exact = float((1 + Decimal(str(g_percent)) / 100) ** horizon)
    return GrowthGap(asset, gdp, asset // gdp, asset_exact, gdp_exact,
                     asset_exact / gdp_exact)


# ---------------------------------------------------------------------------
# market scenarios


def _build_exchange(config: ScenarioConfig) -> tuple[Exchange, list[AgentSpec]]:
    rng = random.Random(config.seed)
    exchange = Exchange()
    total_quote = (config.budget + 10**12) * (config.n_agents + 2)
    exchange.init_quote(total_quote)

    sponsor_account = "sponsor"
    collateral = max(config.budget * config.n_agents // 2, 10**9)
    exchange.transfer(TREASURY, sponsor_account, QUOTE_TOKEN, collateral)
    supply = config.endowment * max(config.n_agents, 1) * 4 + 10**9
    issue_price = max(config.fundamental * 8 // 10, 1)  # open 20% below value
    exchange.issue_token(
        config.token, sponsor_account, supply, issue_price, collateral,
        TokenDefinition(token=config.token, inflation_rate=Decimal(0)),
        CommandingPricePolicy(),
    )

    agents = []
    n_over = round(config.overconfident_fraction * config.n_agents)
    for i in range(config.n_agents):
        account = f"agent{i:03d}"
        exchange.transfer(TREASURY, account, QUOTE_TOKEN, config.budget)
        exchange.transfer(reserve_account(config.token), account,
                          config.token, config.endowment)
        alpha = 1.0 + rng.uniform(0.0, config.alpha_spread) if i < n_over else 1.0
        valuation = config.fundamental * (
            1.0 + rng.uniform(-config.initial_spread, config.initial_spread)
        )
        agents.append(AgentSpec(account, alpha, valuation, config.budget))
    return exchange, agents


def _gini(values: list[int]) -> float:
    vals = sorted(v for v in values if v >= 0)
    n = len(vals)
    total = sum(vals)
    if n == 0 or total == 0:
        return 0.0
    cum = sum((i + 1) * v for i, v in enumerate(vals))
    return (2.0 * cum) / (n * total) - (n + 1) / n


def _run_round(
    exchange: Exchange,
    agents: list[AgentSpec],
    config: ScenarioConfig,
    rng: random.Random,
    fundamental: float,
    expected_growth: float = 0.0,
):
    token = config.token
    market = exchange.markets[token]
    reference = market.reference
    # agents anchor buy/sell decisions on where they expect the price to be;
    # with compounding expectations the stale reference would otherwise turn
    # the whole population into buyers every round
    anchor = reference * (1.0 + expected_growth)
    limits = []
    for i, agent in enumerate(agents):
        eps = rng.uniform(-config.noise, config.noise) if config.noise else 0.0
        belief = agent.valuation * agent.alpha * (1.0 + eps)
        limit = max(int(round(belief)), 1)
        limits.append(limit)
        if config.liquidity_prob and rng.random() < config.liquidity_prob:
            side = rng.choice(("buy", "sell"))
        elif limit > anchor:
            side = "buy"
        elif limit < anchor:
            side = "sell"
        else:
            side = "buy" if i % 2 == 0 else "sell"
        qty = config.order_size
        if side == "buy":
            affordable = exchange.available(agent.account, QUOTE_TOKEN) * PRICE_SCALE // limit
            qty = min(qty, affordable)
        else:
            qty = min(qty, exchange.available(agent.account, token))
        if qty > 0:
            exchange.submit_order(agent.account, token, side, qty, limit)
    result = exchange.trigger_clear(token)
    if result.clearing_price is not None:
        # pull each agent's quoted price (valuation x alpha) toward the
        # uniform price; without the alpha correction overconfidence would
        # compound into unbounded drift instead of consensus
        for agent in agents:
            target = result.clearing_price / agent.alpha
            agent.valuation += config.adapt_rate * (target - agent.valuation)
    dispersion = statistics.pstdev(limits) if len(limits) > 1 else 0.0
    wealth = [
        exchange.balance(a.account, QUOTE_TOKEN)
        + exchange.balance(a.account, token) * market.reference // PRICE_SCALE
        for a in agents
    ]
    price = result.clearing_price
    return MetricsRow(
        round=result.round,
        clearing_price=price,
        matched_volume=result.matched_volume,
        reserve_rate=str(exchange.reserve_rate(token)),
        gini=_gini(wealth),
        dispersion=dispersion,
        price_to_fundamental=(price / fundamental) if price is not None else 0.0,
    )


def run_market_scenario(config: ScenarioConfig) -> list[MetricsRow]:
    """Price-consensus scenario: metrics per round, deterministic per seed."""
    config.validate()
    if config.n_agents == 0 or config.rounds == 0:
        return []
    exchange, agents = _build_exchange(config)
    rng = random.Random(config.seed + 1)
    rows = []
    for _ in range(config.rounds):
        rows.append(_run_round(exchange, agents, config, rng, float(config.fundamental)))
    return rows


def run_bubble_scenario(config: ScenarioConfig) -> BubbleReport:
    """Credit-fueled run: expectations compound at r while the fundamental
    grows at g; reports when price first exceeds the bubble threshold over
    fundamental, and the max drawdown after the burst."""
    config.validate()
    if config.n_agents == 0 or config.rounds == 0:
        return BubbleReport(None, 0.0, [])
    exchange, agents = _build_exchange(config)
    rng = random.Random(config.seed + 1)
    fundamental = float(config.fundamental)
    fired = None
    rows: list[MetricsRow] = []
    peak = 0.0
    drawdown = 0.0
    for _ in range(config.rounds):
        expected = config.asset_growth if fired is None else 0.0
        row = _run_round(exchange, agents, config, rng, fundamental, expected)
        rows.append(row)
        price = row.clearing_price
        if price is not None:
            if fired is None and price > config.bubble_threshold * fundamental:
                fired = row.round
            if fired is not None:
                peak = max(peak, float(price))
                if peak > 0:
                    drawdown = max(drawdown, (peak - price) / peak)
        # expectations run at r; real value at g
        growth = 1.0 + config.asset_growth
        for agent in agents:
            agent.valuation *= growth
            if fired is not None:
                # burst: beliefs collapse back toward the fundamental
                agent.valuation += 0.5 * (fundamental - agent.valuation)
        fundamental *= 1.0 + config.gdp_growth
        if fired is not None:
            continue  # credit dries up once the bubble pops
        # credit top-up keeps budgets compounding at r
        for agent in agents:
            target = int(agent.budget * growth)
            topup = target - agent.budget
            if topup > 0:
                exchange.transfer(TREASURY, agent.account, QUOTE_TOKEN, topup)
            agent.budget = target
    return BubbleReport(fired, drawdown, rows)
