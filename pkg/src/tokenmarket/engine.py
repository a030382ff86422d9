"""Exchange engine: a single-writer state machine over the event ledger.

Every mutation appends ledger events first (write-ahead); in-memory state
(markets, reserve positions, grants) is a fold over those events, so a
restart rebuilds the exact same state from the ledger file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Optional

from . import auction, incentives, policy as token_policy, sponsor
from .auction import BUY, SELL, ClearingResult, Order
from .events import (
    CommandingPriceSet,
    IncentiveMinted,
    InflationApplied,
    OrderSubmitted,
    RedistributionApplied,
    RoundCleared,
    SpendDenied,
    TokenIssued,
    TradeExecuted,
)
from .fixedpoint import PRICE_SCALE, notional
from .incentives import IncentiveGrant, IncentiveRules
from .ledger import QUOTE_TOKEN, Ledger, ValidationFailed, reserve_account
from .policy import TokenDefinition
from .sponsor import CommandingPricePolicy, ReservePosition, RoundState

TREASURY = "treasury"


class EngineError(Exception):
    pass


class UnknownToken(EngineError):
    pass


class InsufficientBalance(EngineError):
    pass


@dataclass
class MarketState:
    token: str
    round: int = 0
    reference: int = 0
    pending: list[Order] = field(default_factory=list)
    arrival_seq: int = 0
    commanded_price: Optional[int] = None
    zero_volume_streak: int = 0
    last_return: Optional[Decimal] = None
    last_clearing_price: Optional[int] = None


class Exchange:
    """All mutations go through methods of this class, in arrival order."""

    def __init__(
        self,
        ledger: Optional[Ledger] = None,
        incentive_rules: Optional[IncentiveRules] = None,
    ) -> None:
        self.ledger = ledger or Ledger()
        self.rules = incentive_rules or IncentiveRules()
        self.tokens: dict[str, TokenDefinition] = {}
        self.positions: dict[str, ReservePosition] = {}
        self.markets: dict[str, MarketState] = {}
        self.grants: dict[str, IncentiveGrant] = {}
        self.policy_period: dict[str, int] = {}
        self.categories = token_policy.DEFAULT_CATEGORIES
        self._committed: dict[tuple[str, str], int] = {}
        self._idempotency: dict[str, dict] = {}
        self._tick = 0
        self._observers: list = []
        self._rebuild()

    # ------------------------------------------------------------------
    # queries

    @property
    def sheet(self):
        return self.ledger._replayer.sheet

    def balance(self, account: str, token: str) -> int:
        return self.sheet.balance(account, token)

    def available(self, account: str, token: str) -> int:
        return self.balance(account, token) - self._committed.get((account, token), 0)

    def reserve_rate(self, token: str) -> Decimal:
        return sponsor.reserve_rate(self._position(token))

    def round_state(self, token: str) -> RoundState:
        market = self._market(token)
        return RoundState(
            reference=market.reference,
            reserve_rate=self.reserve_rate(token),
            last_return=market.last_return,
            zero_volume_streak=market.zero_volume_streak,
            commanded_this_round=market.commanded_price is not None,
        )

    def candidate_schedule(self, token: str):
        market = self._market(token)
        return auction.candidate_schedule(market.pending, market.reference)

    # ------------------------------------------------------------------
    # command intake

    def apply(self, command: dict) -> dict:
        """Apply one gateway command; idempotency keys replay the stored ack."""
        key = command.get("idempotency_key")
        if key is not None and key in self._idempotency:
            return self._idempotency[key]
        result = self._dispatch(command)
        if key is not None:
            self._idempotency[key] = result
        return result

    def _dispatch(self, command: dict) -> dict:
        kind = command["kind"]
        args = {k: v for k, v in command.items() if k not in ("kind", "idempotency_key")}
        handler = {
            "IssueToken": self._cmd_issue,
            "SubmitOrder": self._cmd_order,
            "TriggerClear": self._cmd_clear,
            "SetCommandingPrice": self._cmd_command_price,
            "RecordPerformance": self._cmd_performance,
            "ApplyPolicyPeriod": self._cmd_policy_tick,
            "InjectGrowthPool": self._cmd_growth_pool,
            "Transfer": self._cmd_transfer,
            "Spend": self._cmd_spend,
        }.get(kind)
        if handler is None:
            raise EngineError(f"unknown command kind {kind!r}")
        return handler(**args)

    # ------------------------------------------------------------------
    # genesis / issuance

    def init_quote(self, supply: int, treasury: str = TREASURY) -> None:
        """Create the quote currency and hand the whole float to a treasury
        account.  The quote token has zero inflation and universal domains."""
        if QUOTE_TOKEN in self.tokens:
            raise sponsor.DuplicateToken(QUOTE_TOKEN)
        definition = TokenDefinition(
            token=QUOTE_TOKEN,
            inflation_rate=Decimal(0),
            spending_domains=frozenset(self.categories),
        )
        event = TokenIssued(
            token=QUOTE_TOKEN,
            sponsor=treasury,
            supply=supply,
            issue_price=PRICE_SCALE,
            collateral=0,
            policy=json.dumps({"definition": definition.to_dict()}, sort_keys=True),
        )
        self._append(event)
        self._fold_issue(event)
        self._append(
            TradeExecuted(QUOTE_TOKEN, None, treasury, reserve_account(QUOTE_TOKEN),
                          supply, 0)
        )
        self._bump()

    def issue_token(
        self,
        token: str,
        sponsor_account: str,
        supply: int,
        issue_price: int,
        collateral: int,
        definition: Optional[TokenDefinition] = None,
        command_policy: Optional[CommandingPricePolicy] = None,
    ) -> ReservePosition:
        if token in self.tokens:
            raise sponsor.DuplicateToken(token)
        if supply <= 0 or issue_price <= 0 or collateral <= 0:
            raise sponsor.NonPositiveParameter(
                "supply, issue_price and collateral must be > 0")
        definition = definition or TokenDefinition(token=token)
        command_policy = command_policy or CommandingPricePolicy()
        bundle = json.dumps(
            {"definition": definition.to_dict(), "commanding": command_policy.to_dict()},
            sort_keys=True,
        )
        event = TokenIssued(token, sponsor_account, supply, issue_price, collateral, bundle)
        self._append(event)
        self._fold_issue(event)
        self._bump()
        return self.positions[token]

    def _cmd_issue(self, **a) -> dict:
        definition = TokenDefinition.from_dict(a["definition"]) if a.get("definition") else None
        cp = CommandingPricePolicy.from_dict(a["commanding"]) if a.get("commanding") else None
        pos = self.issue_token(
            a["token"], a["sponsor"], int(a["supply"]), int(a["issue_price"]),
            int(a["collateral"]), definition, cp,
        )
        return {"ok": True, "token": pos.token,
                "reserve_rate": str(sponsor.reserve_rate(pos))}

    # ------------------------------------------------------------------
    # orders and clearing

    def submit_order(
        self, account: str, token: str, side: str, quantity: int, limit_price: int
    ) -> Order:
        market = self._market(token)
        if side == SELL:
            if self._sellable(account, token) < quantity:
                raise InsufficientBalance(
                    f"{account} cannot sell {quantity} of {token}")
            self._commit(account, token, quantity)
        elif side == BUY:
            cost = notional(quantity, limit_price)
            if self.available(account, QUOTE_TOKEN) < cost:
                raise InsufficientBalance(
                    f"{account} cannot cover notional {cost} of {token}")
            self._commit(account, QUOTE_TOKEN, cost)
        else:
            raise EngineError(f"bad side {side!r}")
        order = Order(
            order_id=f"{token}-r{market.round}-{market.arrival_seq}",
            account=account,
            token=token,
            side=side,
            quantity=quantity,
            limit_price=limit_price,
            round=market.round,
            arrival=market.arrival_seq,
        )
        market.arrival_seq += 1
        market.pending.append(order)
        self._append(
            OrderSubmitted(order.order_id, account, token, side, quantity,
                           limit_price, order.round, order.arrival)
        )
        self._bump()
        return order

    def _cmd_order(self, **a) -> dict:
        order = self.submit_order(
            a["account"], a["token"], a["side"], int(a["quantity"]),
            int(a["limit_price"]),
        )
        return {"ok": True, "order_id": order.order_id, "round": order.round,
                "arrival": order.arrival}

    def trigger_clear(self, token: str) -> ClearingResult:
        market = self._market(token)
        position = self._position(token)
        result = auction.clear_round(market.pending, market.reference)
        result.round = market.round

        reference_next = result.reference_price_next
        if market.commanded_price is not None:
            reference_next = market.commanded_price

        self._append(
            RoundCleared(token, market.round, result.clearing_price,
                         result.matched_volume, reference_next)
        )
        price = result.clearing_price
        if price is not None:
            for p in result.pairings:
                self._append(
                    TradeExecuted(token, market.round, p.buyer, p.seller,
                                  p.quantity, price)
                )
                self._note_incentive_outflow(p.seller, token, p.quantity)
        fills = sponsor.fulfill_residuals(result, position)
        for f in fills:
            if f.quantity == 0:
                continue
            if f.side == SELL:
                buyer, seller = f.account, position.account
            else:
                buyer, seller = position.account, f.account
            self._append(
                TradeExecuted(token, market.round, buyer, seller, f.quantity, f.price)
            )
            if seller != position.account:
                self._note_incentive_outflow(seller, token, f.quantity)
        self._advance_round(market, result, reference_next)
        self._bump()
        return result

    def _advance_round(
        self, market: MarketState, result: ClearingResult, reference_next: int
    ) -> None:
        if result.matched_volume > 0:
            market.zero_volume_streak = 0
            market.last_return = (
                Decimal(result.clearing_price) / Decimal(market.reference) - 1
            )
            market.last_clearing_price = result.clearing_price
        else:
            market.zero_volume_streak += 1
            market.last_return = None
        for order in market.pending:
            if order.side == SELL:
                self._uncommit(order.account, market.token, order.quantity)
            else:
                self._uncommit(order.account, QUOTE_TOKEN,
                               notional(order.quantity, order.limit_price))
        market.pending = []
        market.arrival_seq = 0
        market.commanded_price = None
        market.reference = reference_next
        market.round += 1

    def _cmd_clear(self, **a) -> dict:
        result = self.trigger_clear(a["token"])
        return {
            "ok": True,
            "round": result.round,
            "clearing_price": result.clearing_price,
            "matched_volume": result.matched_volume,
            "reference_next": self._market(a["token"]).reference,
        }

    # ------------------------------------------------------------------
    # commanding price

    def set_commanding_price(self, token: str, proposed: int) -> int:
        market = self._market(token)
        position = self._position(token)
        state = self.round_state(token)
        sponsor.check_command(position.policy, proposed, state)
        self._append(
            CommandingPriceSet(token, market.round, proposed, market.reference)
        )
        market.commanded_price = proposed
        self._bump()
        return proposed

    def _cmd_command_price(self, **a) -> dict:
        price = self.set_commanding_price(a["token"], int(a["price"]))
        return {"ok": True, "commanded_price": price}

    # ------------------------------------------------------------------
    # incentives

    def record_performance(
        self, grantee: str, trigger: str, sale_notional: int = 0
    ) -> IncentiveGrant:
        grant_id = f"grant-{len(self.grants)}"
        period = self.policy_period.get(self.rules.token, 0)
        grant = incentives.record_performance(
            grant_id, grantee, trigger, self.rules, period, sale_notional
        )
        self._append(
            IncentiveMinted(grant.grant_id, grant.grantee, grant.token, grant.amount,
                            grant.granted_at, grant.schedule.schedule_id, grant.trigger)
        )
        self.grants[grant_id] = grant
        self._bump()
        return grant

    def _cmd_performance(self, **a) -> dict:
        grant = self.record_performance(
            a["grantee"], a["trigger"], int(a.get("sale_notional", 0))
        )
        return {"ok": True, "grant_id": grant.grant_id, "amount": grant.amount,
                "schedule": grant.schedule.schedule_id}

    def vested_holdings(self, period: Optional[int] = None) -> dict[str, int]:
        period = self.policy_period.get(self.rules.token, 0) if period is None else period
        out: dict[str, int] = {}
        for g in self.grants.values():
            v = g.vested(period)
            if v > 0:
                out[g.grantee] = out.get(g.grantee, 0) + v
        return out

    def transferable(self, account: str, period: Optional[int] = None) -> int:
        period = self.policy_period.get(self.rules.token, 0) if period is None else period
        return sum(
            g.transferable(period) for g in self.grants.values() if g.grantee == account
        )

    def inject_growth_pool(self, amount: int, source: str = TREASURY) -> list[tuple[str, int]]:
        shares = incentives.distribute_growth(amount, self.vested_holdings())
        for grantee, share in shares:
            self.transfer(source, grantee, QUOTE_TOKEN, share)
        return shares

    def _cmd_growth_pool(self, **a) -> dict:
        shares = self.inject_growth_pool(int(a["amount"]), a.get("source", TREASURY))
        return {"ok": True, "shares": [[g, s] for g, s in shares]}

    # ------------------------------------------------------------------
    # token policy

    def apply_policy_period(self, token: str) -> dict:
        definition = self._definition(token)
        period = self.policy_period.get(token, 0) + 1
        supply = self.sheet.total_supply(token)
        minted = token_policy.inflation_mint(supply, definition.inflation_rate)
        sponsor_acct = reserve_account(token)
        credits = token_policy.inflation_credits(
            definition, minted, sponsor_acct, self.sheet.holders(token)
        )
        self._append(InflationApplied(token, period, minted, tuple(tuple(c) for c in credits)))
        self._fold_inflation(token, credits)

        transfers: list[tuple[str, str, int]] = []
        rp = definition.redistribution
        if rp is not None and period % rp.trigger_period == 0:
            balances = {
                a: b for a, b in self.sheet.holders(token).items()
                if not a.startswith("reserve:") and a != TREASURY
            }
            if len(balances) >= 2:
                transfers = token_policy.redistribute(balances, rp)
            self._append(
                RedistributionApplied(token, period, tuple(tuple(t) for t in transfers))
            )
        self.policy_period[token] = period
        self._bump()
        return {"token": token, "period": period, "minted": minted,
                "transfers": len(transfers)}

    def _cmd_policy_tick(self, **a) -> dict:
        tokens = [a["token"]] if a.get("token") else [
            t for t in self.tokens if t != QUOTE_TOKEN
        ]
        reports = [self.apply_policy_period(t) for t in tokens]
        # incentive-token vesting advances with the same clock; persist the
        # clock even when the incentive token has no issued market
        it = self.rules.token
        if it not in tokens and it not in self.tokens:
            period = self.policy_period.get(it, 0) + 1
            self._append(InflationApplied(it, period, 0, ()))
            self.policy_period[it] = period
            self._bump()
        return {"ok": True, "reports": reports}

    def check_spend(self, token: str, category: str) -> bool:
        return token_policy.check_spend(self._definition(token), category, self.categories)

    def spend(
        self, account: str, token: str, amount: int, category: str, recipient: str
    ) -> bool:
        """Domain-checked transfer; denials are ledger-recorded and move nothing."""
        if not self.check_spend(token, category):
            self._append(SpendDenied(token, account, category, amount))
            self._bump()
            return False
        self.transfer(account, recipient, token, amount)
        return True

    def _cmd_spend(self, **a) -> dict:
        ok = self.spend(a["account"], a["token"], int(a["amount"]), a["category"],
                        a["recipient"])
        return {"ok": ok, "denied": not ok}

    # ------------------------------------------------------------------
    # transfers

    def transfer(self, source: str, dest: str, token: str, amount: int) -> None:
        if amount <= 0:
            raise EngineError("transfer amount must be positive")
        if self._sellable(source, token) < amount:
            raise InsufficientBalance(f"{source} cannot transfer {amount} of {token}")
        self._append(TradeExecuted(token, None, dest, source, amount, 0))
        position = self.positions.get(token)
        if position is not None:
            if source == position.account:
                position.inventory -= amount
            if dest == position.account:
                position.inventory += amount
        self._note_incentive_outflow(source, token, amount)
        self._bump()

    def _cmd_transfer(self, **a) -> dict:
        self.transfer(a["source"], a["dest"], a["token"], int(a["amount"]))
        return {"ok": True}

    def _sellable(self, account: str, token: str) -> int:
        """Available balance, additionally capped by vesting for the
        incentive token."""
        avail = self.available(account, token)
        if token == self.rules.token and not account.startswith("reserve:"):
            avail = min(avail, self.transferable(account))
        return max(avail, 0)

    def _note_incentive_outflow(self, account: str, token: str, amount: int) -> None:
        if token != self.rules.token:
            return
        period = self.policy_period.get(self.rules.token, 0)
        remaining = amount
        for g in sorted(self.grants.values(), key=lambda g: g.grant_id):
            if g.grantee != account or remaining == 0:
                continue
            take = min(g.transferable(period), remaining)
            g.transferred += take
            remaining -= take

    # ------------------------------------------------------------------
    # internals

    def _market(self, token: str) -> MarketState:
        if token not in self.markets:
            raise UnknownToken(token)
        return self.markets[token]

    def _position(self, token: str) -> ReservePosition:
        if token not in self.positions:
            raise UnknownToken(token)
        return self.positions[token]

    def _definition(self, token: str) -> TokenDefinition:
        if token not in self.tokens:
            raise UnknownToken(token)
        return self.tokens[token]

    def _commit(self, account: str, token: str, amount: int) -> None:
        key = (account, token)
        self._committed[key] = self._committed.get(key, 0) + amount

    def _uncommit(self, account: str, token: str, amount: int) -> None:
        key = (account, token)
        left = self._committed.get(key, 0) - amount
        if left > 0:
            self._committed[key] = left
        else:
            self._committed.pop(key, None)

    def _append(self, event) -> None:
        entry = self.ledger.append(event, self._tick)
        for observer in self._observers:
            observer(entry)

    def _bump(self) -> None:
        self._tick += 1

    def subscribe(self, observer) -> None:
        """observer(entry) is called after each committed ledger entry."""
        self._observers.append(observer)

    # ------------------------------------------------------------------
    # fold: rebuild in-memory state from the ledger

    def _fold_issue(self, event: TokenIssued) -> None:
        bundle = json.loads(event.policy) if event.policy else {}
        definition = (
            TokenDefinition.from_dict(bundle["definition"])
            if bundle.get("definition")
            else TokenDefinition(token=event.token)
        )
        self.tokens[event.token] = definition
        if event.token == QUOTE_TOKEN:
            return
        cp = (
            CommandingPricePolicy.from_dict(bundle["commanding"])
            if bundle.get("commanding")
            else CommandingPricePolicy()
        )
        self.positions[event.token] = ReservePosition(
            token=event.token,
            sponsor=event.sponsor,
            collateral=event.collateral,
            issued_supply=event.supply,
            issue_price=event.issue_price,
            inventory=event.supply,
            policy=cp,
        )
        self.markets[event.token] = MarketState(
            token=event.token, reference=event.issue_price
        )

    def _fold_inflation(self, token: str, credits: list[tuple[str, int]]) -> None:
        position = self.positions.get(token)
        if position is None:
            return
        reserve = reserve_account(token)
        for account, amount in credits:
            position.issued_supply += amount
            if account == reserve:
                position.inventory += amount

    def _rebuild(self) -> None:
        for entry in self.ledger.entries:
            self._fold_entry(entry)
        if self.ledger.entries:
            self._tick = self.ledger.entries[-1].timestamp + 1

    def _fold_entry(self, entry) -> None:
        ev = entry.event
        if isinstance(ev, TokenIssued):
            self._fold_issue(ev)
        elif isinstance(ev, OrderSubmitted):
            market = self.markets[ev.token]
            order = Order(ev.order_id, ev.account, ev.token, ev.side, ev.quantity,
                          ev.limit_price, ev.round, ev.arrival)
            market.pending.append(order)
            market.arrival_seq = max(market.arrival_seq, ev.arrival + 1)
            if ev.side == SELL:
                self._commit(ev.account, ev.token, ev.quantity)
            else:
                self._commit(ev.account, QUOTE_TOKEN, notional(ev.quantity, ev.limit_price))
        elif isinstance(ev, RoundCleared):
            market = self.markets[ev.token]
            if ev.matched_volume > 0:
                market.zero_volume_streak = 0
                market.last_return = (
                    Decimal(ev.clearing_price) / Decimal(market.reference) - 1
                )
                market.last_clearing_price = ev.clearing_price
            else:
                market.zero_volume_streak += 1
                market.last_return = None
            for order in market.pending:
                if order.side == SELL:
                    self._uncommit(order.account, market.token, order.quantity)
                else:
                    self._uncommit(order.account, QUOTE_TOKEN,
                                   notional(order.quantity, order.limit_price))
            market.pending = []
            market.arrival_seq = 0
            market.commanded_price = None
            market.reference = ev.reference_next
            market.round += 1
        elif isinstance(ev, TradeExecuted):
            position = self.positions.get(ev.token)
            if position is not None:
                if ev.buyer == position.account:
                    position.inventory += ev.quantity
                    position.collateral -= notional(ev.quantity, ev.price)
                elif ev.seller == position.account:
                    position.inventory -= ev.quantity
                    position.collateral += notional(ev.quantity, ev.price)
            if ev.token == self.rules.token and not ev.seller.startswith("reserve:"):
                self._note_incentive_outflow(ev.seller, ev.token, ev.quantity)
        elif isinstance(ev, CommandingPriceSet):
            self.markets[ev.token].commanded_price = ev.price
        elif isinstance(ev, IncentiveMinted):
            schedule = (
                self.rules.sales_schedule
                if ev.schedule_id == self.rules.sales_schedule.schedule_id
                else self.rules.design_schedule
            )
            self.grants[ev.grant_id] = IncentiveGrant(
                ev.grant_id, ev.grantee, ev.token, ev.amount, ev.granted_at,
                schedule, ev.trigger,
            )
        elif isinstance(ev, InflationApplied):
            self._fold_inflation(ev.token, list(ev.credits))
            self.policy_period[ev.token] = ev.period
        elif isinstance(ev, RedistributionApplied):
            self.policy_period[ev.token] = ev.period
        # SpendDenied changes nothing
