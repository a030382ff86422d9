"""Configuration files (YAML key/value) for the exchange and scenarios.

Exchange config keys:

    ledger: ledger.bin            # relative to the config file
    sync: false                   # fsync every append
    quote_supply: "1000000000"    # whole quote units minted at genesis
    categories: [food, groceries, luxury, investment, services, general]
    incentives:
      token: INCENT
      sale_rate: "0.01"
      design_grant: "500"
      sales_schedule: {cliff: 0, duration: 4}
      design_schedule: {cliff: 4, duration: 12}
    tokens:                       # issued by `init` if present
      - token: DEMO
        sponsor: treasury
        supply: "1000000"
        issue_price: "0.1"
        collateral: "80000"
        definition: {inflation_rate: "0.02", spending_domains: [general]}
        commanding: {band_fraction: "0.10", min_reserve_rate: "0.5",
                     move_threshold: "0.15", zero_volume_rounds: 3}

Scenario files reuse ScenarioConfig field names with human decimals for
`fundamental`, `order_size`, `budget` and `endowment`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from decimal import Decimal

import yaml

from .fixedpoint import parse_amount, parse_price
from .incentives import IncentiveRules, VestingSchedule
from .policy import DEFAULT_CATEGORIES
from .simulation import OVERCONFIDENT_PRESETS, ScenarioConfig


@dataclass
class AppConfig:
    base_dir: str
    ledger_path: str
    sync: bool
    quote_supply: int
    categories: frozenset
    incentive_rules: IncentiveRules
    token_specs: list = field(default_factory=list)


def load_app_config(path: str) -> AppConfig:
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    base = os.path.dirname(os.path.abspath(path))
    inc = raw.get("incentives", {})
    rules = IncentiveRules(
        token=inc.get("token", "INCENT"),
        sale_rate=Decimal(str(inc.get("sale_rate", "0.01"))),
        design_grant=parse_amount(str(inc.get("design_grant", "500"))),
        sales_schedule=_schedule("sales", inc.get("sales_schedule"), 0, 4),
        design_schedule=_schedule("design", inc.get("design_schedule"), 4, 12),
    )
    return AppConfig(
        base_dir=base,
        ledger_path=os.path.join(base, raw.get("ledger", "ledger.bin")),
        sync=bool(raw.get("sync", False)),
        quote_supply=parse_amount(str(raw.get("quote_supply", "1000000000"))),
        categories=frozenset(raw.get("categories", sorted(DEFAULT_CATEGORIES))),
        incentive_rules=rules,
        token_specs=raw.get("tokens", []),
    )


def _schedule(name: str, d, cliff: int, duration: int) -> VestingSchedule:
    if d:
        cliff = int(d.get("cliff", cliff))
        duration = int(d.get("duration", duration))
    return VestingSchedule(name, cliff, duration)


def default_config_yaml() -> str:
    return (
        "ledger: ledger.bin\n"
        "sync: false\n"
        'quote_supply: "1000000000"\n'
        f"categories: [{', '.join(sorted(DEFAULT_CATEGORIES))}]\n"
        "incentives:\n"
        "  token: INCENT\n"
        '  sale_rate: "0.01"\n'
        '  design_grant: "500"\n'
        "  sales_schedule: {cliff: 0, duration: 4}\n"
        "  design_schedule: {cliff: 4, duration: 12}\n"
        "tokens: []\n"
    )


def load_scenario(path: str) -> ScenarioConfig:
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if "overconfident_preset" in raw:
        cfg.overconfident_fraction = OVERCONFIDENT_PRESETS[raw.pop("overconfident_preset")]
    for key, value in raw.items():
        if not hasattr(cfg, key):
            raise KeyError(f"unknown scenario key {key!r}")
        if key == "fundamental":
            value = parse_price(str(value))
        elif key in ("order_size", "budget", "endowment"):
            value = parse_amount(str(value))
        elif key in ("rounds", "n_agents", "horizon", "seed"):
            value = int(value)
        elif key != "token":
            value = float(value)
        setattr(cfg, key, value)
    return cfg
