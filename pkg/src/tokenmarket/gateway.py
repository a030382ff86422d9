"""HTTP gateway: JSON endpoints over the exchange engine plus a
server-sent-events stream of ledger entries.

All mutations funnel through a single lock (one writer); the ledger append
completes before any acknowledgment.  Amounts and prices travel as decimal
strings on the wire and are fixed-point integers internally.
"""

from __future__ import annotations

import json
import queue
import threading
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from . import sponsor as sponsor_mod
from .engine import EngineError, Exchange, InsufficientBalance, UnknownToken
from .fixedpoint import format_amount, format_price, parse_amount, parse_price
from .incentives import IncentiveError, IncentiveRules
from .ledger import Ledger, ValidationFailed
from .policy import PolicyError
from .sponsor import SponsorError

_DOMAIN_ERRORS = (
    SponsorError, EngineError, PolicyError, IncentiveError, ValidationFailed,
)


class IssueBody(BaseModel):
    token: str
    sponsor: str = "treasury"
    supply: str
    issue_price: str
    collateral: str
    definition: Optional[dict] = None
    commanding: Optional[dict] = None
    idempotency_key: Optional[str] = None


class OrderBody(BaseModel):
    account: str
    token: str
    side: str
    quantity: str
    limit_price: str
    idempotency_key: Optional[str] = None


class ClearBody(BaseModel):
    token: str
    idempotency_key: Optional[str] = None


class CommandPriceBody(BaseModel):
    token: str
    price: str
    idempotency_key: Optional[str] = None


class PerformanceBody(BaseModel):
    grantee: str
    trigger: str
    sale_notional: str = "0"
    idempotency_key: Optional[str] = None


class PolicyTickBody(BaseModel):
    token: Optional[str] = None
    idempotency_key: Optional[str] = None


class GrowthPoolBody(BaseModel):
    amount: str
    source: str = "treasury"
    idempotency_key: Optional[str] = None


class TransferBody(BaseModel):
    source: str
    dest: str
    token: str
    amount: str
    idempotency_key: Optional[str] = None


def create_app(
    ledger_path: Optional[str] = None,
    sync: bool = False,
    incentive_rules: Optional[IncentiveRules] = None,
    quote_supply: Optional[int] = None,
) -> FastAPI:
    ledger = Ledger(ledger_path, sync=sync) if ledger_path else Ledger()
    exchange = Exchange(ledger, incentive_rules)
    if quote_supply and "QUOTE" not in exchange.tokens:
        exchange.init_quote(quote_supply)

    app = FastAPI(title="sponsored-token exchange")
    app.state.exchange = exchange
    write_lock = threading.Lock()
    subscribers: list[queue.Queue] = []

    def broadcast(entry) -> None:
        payload = json.dumps(entry.to_dict(), sort_keys=True)
        for q in list(subscribers):
            q.put(payload)

    exchange.subscribe(broadcast)

    def mutate(command: dict) -> dict:
        with write_lock:
            try:
                return exchange.apply(command)
            except _DOMAIN_ERRORS as exc:
                raise HTTPException(
                    status_code=409 if isinstance(
                        exc, (sponsor_mod.AlreadyCommandedThisRound,)) else 400,
                    detail={"error": type(exc).__name__, "message": str(exc)},
                )

    # -- mutations --------------------------------------------------------

    @app.post("/tokens")
    def issue(body: IssueBody):
        return mutate({
            "kind": "IssueToken",
            "token": body.token,
            "sponsor": body.sponsor,
            "supply": parse_amount(body.supply),
            "issue_price": parse_price(body.issue_price),
            "collateral": parse_amount(body.collateral),
            "definition": {**(body.definition or {}), "token": body.token}
                          if body.definition is not None else None,
            "commanding": body.commanding,
            "idempotency_key": body.idempotency_key,
        })

    @app.post("/orders")
    def submit_order(body: OrderBody):
        return mutate({
            "kind": "SubmitOrder",
            "account": body.account,
            "token": body.token,
            "side": body.side,
            "quantity": parse_amount(body.quantity),
            "limit_price": parse_price(body.limit_price),
            "idempotency_key": body.idempotency_key,
        })

    @app.post("/rounds/clear")
    def clear(body: ClearBody):
        out = mutate({"kind": "TriggerClear", "token": body.token,
                      "idempotency_key": body.idempotency_key})
        price = out.get("clearing_price")
        return {
            **out,
            "clearing_price": format_price(price) if price is not None else None,
            "matched_volume": format_amount(out["matched_volume"]),
            "reference_next": format_price(out["reference_next"]),
        }

    @app.post("/sponsor/commanding-price")
    def command_price(body: CommandPriceBody):
        out = mutate({"kind": "SetCommandingPrice", "token": body.token,
                      "price": parse_price(body.price),
                      "idempotency_key": body.idempotency_key})
        return {"ok": True, "commanded_price": format_price(out["commanded_price"])}

    @app.post("/incentives/performance")
    def performance(body: PerformanceBody):
        out = mutate({"kind": "RecordPerformance", "grantee": body.grantee,
                      "trigger": body.trigger,
                      "sale_notional": parse_amount(body.sale_notional),
                      "idempotency_key": body.idempotency_key})
        return {**out, "amount": format_amount(out["amount"])}

    @app.post("/policy/tick")
    def policy_tick(body: PolicyTickBody):
        return mutate({"kind": "ApplyPolicyPeriod", "token": body.token,
                       "idempotency_key": body.idempotency_key})

    @app.post("/growth-pool")
    def growth_pool(body: GrowthPoolBody):
        out = mutate({"kind": "InjectGrowthPool", "amount": parse_amount(body.amount),
                      "source": body.source,
                      "idempotency_key": body.idempotency_key})
        return {"ok": True,
                "shares": [[g, format_amount(s)] for g, s in out["shares"]]}

    @app.post("/transfers")
    def transfer(body: TransferBody):
        return mutate({"kind": "Transfer", "source": body.source, "dest": body.dest,
                       "token": body.token, "amount": parse_amount(body.amount),
                       "idempotency_key": body.idempotency_key})

    # -- reads ------------------------------------------------------------

    @app.get("/tokens")
    def list_tokens():
        return {"tokens": [d.to_dict() for d in exchange.tokens.values()]}

    @app.get("/rounds/current")
    def current_round(token: str):
        try:
            market = exchange.markets[token]
        except KeyError:
            raise HTTPException(404, detail={"error": "UnknownToken", "message": token})
        schedule = exchange.candidate_schedule(token)
        return {
            "token": token,
            "round": market.round,
            "reference": format_price(market.reference),
            "commanded_price": format_price(market.commanded_price)
                               if market.commanded_price is not None else None,
            "zero_volume_streak": market.zero_volume_streak,
            "last_clearing_price": format_price(market.last_clearing_price)
                                   if market.last_clearing_price is not None else None,
            "orders": [
                {
                    "order_id": o.order_id, "account": o.account, "side": o.side,
                    "quantity": format_amount(o.quantity),
                    "limit_price": format_price(o.limit_price),
                    "arrival": o.arrival,
                }
                for o in market.pending
            ],
            "candidate_schedule": [
                {
                    "price": format_price(r.price),
                    "buy_demand": format_amount(r.buy_demand),
                    "sell_supply": format_amount(r.sell_supply),
                    "volume": format_amount(r.volume),
                    "imbalance": format_amount(r.imbalance),
                }
                for r in schedule
            ],
        }

    @app.get("/reserve/{token}")
    def reserve(token: str):
        try:
            position = exchange.positions[token]
        except KeyError:
            raise HTTPException(404, detail={"error": "UnknownToken", "message": token})
        state = exchange.round_state(token)
        lo, hi = position.policy.band(state.reference)
        return {
            "token": token,
            "collateral": format_amount(position.collateral),
            "inventory": format_amount(position.inventory),
            "issued_supply": format_amount(position.issued_supply),
            "issue_price": format_price(position.issue_price),
            "reserve_rate": str(exchange.reserve_rate(token)),
            "policy": position.policy.to_dict(),
            "triggers_active": sponsor_mod.triggers_active(position.policy, state),
            "commanded_this_round": state.commanded_this_round,
            "band": {"min": str(lo / 10**4), "max": str(hi / 10**4)},
        }

    @app.get("/balances/{account}")
    def balances(account: str):
        sheet = exchange.sheet.as_dict().get(account, {})
        return {"account": account,
                "balances": {t: format_amount(v) for t, v in sheet.items()}}

    @app.get("/ledger")
    def ledger_entries(from_seq: int = Query(0, alias="from")):
        return {
            "head_hash": exchange.ledger.head_hash.hex(),
            "entries": [
                e.to_dict() for e in exchange.ledger.entries[from_seq:]
            ],
        }

    @app.get("/stream")
    def stream(request: Request, max_events: Optional[int] = None):
        q: queue.Queue = queue.Queue()
        subscribers.append(q)

        def gen():
            sent = 0
            try:
                while max_events is None or sent < max_events:
                    try:
                        payload = q.get(timeout=1.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {payload}\n\n"
                    sent += 1
            finally:
                subscribers.remove(q)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app
