"""Sponsored-token exchange: collateral-reserve issuance, call-auction
price formation with sponsor commanding-price overrides, a hash-chained
event ledger, vesting incentive grants, per-token monetary policies, and
an agent-based simulation harness."""

from .auction import ClearingResult, Order, candidate_schedule, clear_round
from .engine import Exchange
from .incentives import IncentiveGrant, IncentiveRules, VestingSchedule
from .ledger import BalanceSheet, Ledger, LedgerEntry
from .policy import RedistributionPolicy, TokenDefinition
from .simulation import ScenarioConfig, growth_gap, rule_of_72
from .sponsor import CommandingPricePolicy, ReservePosition

__version__ = "0.1.0"

__all__ = [
    "BalanceSheet",
    "ClearingResult",
    "CommandingPricePolicy",
    "Exchange",
    "IncentiveGrant",
    "IncentiveRules",
    "Ledger",
    "LedgerEntry",
    "Order",
    "RedistributionPolicy",
    "ReservePosition",
    "ScenarioConfig",
    "TokenDefinition",
    "VestingSchedule",
    "candidate_schedule",
    "clear_round",
    "growth_gap",
    "rule_of_72",
]
