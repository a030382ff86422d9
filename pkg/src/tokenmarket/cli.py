"""Command-line interface.

Operates on a data directory holding config.yaml and the ledger file.
Every subcommand exits 0 on success; domain errors print the error name
(e.g. OutOfBand) on stderr and exit nonzero.  --format=json switches to
machine-readable output.
"""

from __future__ import annotations

import json
import os
import sys
from decimal import Decimal

import click

from . import simulation
from .config import (
    AppConfig,
    default_config_yaml,
    load_app_config,
    load_scenario,
    scenario_from_dict,
)
from .engine import Exchange, TREASURY
from .fixedpoint import format_amount, format_price, parse_amount, parse_price
from .ledger import ChainInvalid, Ledger, QUOTE_TOKEN, verify_file
from .policy import TokenDefinition
from .sponsor import CommandingPricePolicy


def _fail(exc: Exception) -> None:
    click.echo(f"{type(exc).__name__}: {exc}", err=True)
    sys.exit(1)


def _open(ctx) -> tuple[AppConfig, Exchange]:
    cfg_path = os.path.join(ctx.obj["data_dir"], "config.yaml")
    if not os.path.exists(cfg_path):
        _fail(FileNotFoundError(f"{cfg_path} (run `init` first)"))
    cfg = load_app_config(cfg_path)
    try:
        ledger = Ledger(cfg.ledger_path, sync=cfg.sync)
    except ChainInvalid as exc:
        _fail(exc)
    exchange = Exchange(ledger, cfg.incentive_rules)
    exchange.categories = cfg.categories
    return cfg, exchange


def _emit(ctx, payload: dict, text: str) -> None:
    if ctx.obj["fmt"] == "json":
        click.echo(json.dumps(payload, sort_keys=True))
    else:
        click.echo(text)


@click.group()
@click.option("--data-dir", default=".", show_default=True,
              help="directory with config.yaml and the ledger file")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
@click.pass_context
def main(ctx, data_dir, fmt):
    """Sponsored-token exchange."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = data_dir
    ctx.obj["fmt"] = fmt


@main.command()
@click.pass_context
def init(ctx):
    """Create config.yaml and a ledger with the quote-currency genesis."""
    data_dir = ctx.obj["data_dir"]
    os.makedirs(data_dir, exist_ok=True)
    cfg_path = os.path.join(data_dir, "config.yaml")
    if not os.path.exists(cfg_path):
        with open(cfg_path, "w") as f:
            f.write(default_config_yaml())
    cfg = load_app_config(cfg_path)
    exchange = Exchange(Ledger(cfg.ledger_path, sync=cfg.sync), cfg.incentive_rules)
    if QUOTE_TOKEN not in exchange.tokens:
        exchange.init_quote(cfg.quote_supply)
    for spec in cfg.token_specs:
        _issue_from_spec(exchange, spec)
    exchange.ledger.close()
    _emit(ctx, {"ok": True, "ledger": cfg.ledger_path},
          f"initialized {data_dir} (ledger: {cfg.ledger_path})")


def _issue_from_spec(exchange: Exchange, spec: dict) -> None:
    collateral = parse_amount(str(spec["collateral"]))
    sponsor_acct = spec.get("sponsor", TREASURY)
    if exchange.available(sponsor_acct, QUOTE_TOKEN) < collateral:
        need = collateral - exchange.available(sponsor_acct, QUOTE_TOKEN)
        exchange.transfer(TREASURY, sponsor_acct, QUOTE_TOKEN, need)
    definition = None
    if spec.get("definition"):
        definition = TokenDefinition.from_dict({**spec["definition"], "token": spec["token"]})
    commanding = (CommandingPricePolicy.from_dict(spec["commanding"])
                  if spec.get("commanding") else None)
    exchange.issue_token(
        spec["token"], sponsor_acct, parse_amount(str(spec["supply"])),
        parse_price(str(spec["issue_price"])), collateral, definition, commanding,
    )


@main.command()
@click.option("--token", required=True)
@click.option("--sponsor", "sponsor_acct", default=TREASURY, show_default=True)
@click.option("--supply", required=True)
@click.option("--price", "issue_price", required=True)
@click.option("--collateral", required=True)
@click.option("--inflation-rate", default="0.02", show_default=True)
@click.option("--domains", default="general", show_default=True,
              help="comma-separated spending domains")
@click.option("--band", default="0.10", show_default=True,
              help="commanding-price band fraction")
@click.pass_context
def issue(ctx, token, sponsor_acct, supply, issue_price, collateral,
          inflation_rate, domains, band):
    """Issue a sponsored token against collateral."""
    _, exchange = _open(ctx)
    try:
        _issue_from_spec(exchange, {
            "token": token, "sponsor": sponsor_acct, "supply": supply,
            "issue_price": issue_price, "collateral": collateral,
            "definition": {"inflation_rate": inflation_rate,
                           "spending_domains": domains.split(",")},
            "commanding": {"band_fraction": band},
        })
        rate = exchange.reserve_rate(token)
    except Exception as exc:
        _fail(exc)
    finally:
        exchange.ledger.close()
    _emit(ctx, {"ok": True, "token": token, "reserve_rate": str(rate)},
          f"issued {token}, reserve rate {rate}")


@main.command()
@click.option("--account", required=True)
@click.option("--token", required=True)
@click.option("--side", type=click.Choice(["buy", "sell"]), required=True)
@click.option("--qty", required=True)
@click.option("--price", required=True)
@click.pass_context
def order(ctx, account, token, side, qty, price):
    """Submit a limit order into the current round."""
    _, exchange = _open(ctx)
    try:
        o = exchange.submit_order(account, token, side,
                                  parse_amount(qty), parse_price(price))
    except Exception as exc:
        _fail(exc)
    finally:
        exchange.ledger.close()
    _emit(ctx, {"ok": True, "order_id": o.order_id, "round": o.round},
          f"order {o.order_id} accepted in round {o.round}")


@main.command()
@click.option("--token", required=True)
@click.pass_context
def clear(ctx, token):
    """Run the call auction for the current round."""
    _, exchange = _open(ctx)
    try:
        result = exchange.trigger_clear(token)
        reference = exchange.markets[token].reference
    except Exception as exc:
        _fail(exc)
    finally:
        exchange.ledger.close()
    price = (format_price(result.clearing_price)
             if result.clearing_price is not None else None)
    _emit(ctx, {"ok": True, "round": result.round, "clearing_price": price,
                "matched_volume": format_amount(result.matched_volume),
                "reference_next": format_price(reference)},
          f"round {result.round}: price {price or 'none'}, "
          f"volume {format_amount(result.matched_volume)}, "
          f"next reference {format_price(reference)}")


@main.command("command-price")
@click.option("--token", required=True)
@click.option("--price", required=True)
@click.pass_context
def command_price(ctx, token, price):
    """Set the sponsor's commanding price for the next round."""
    _, exchange = _open(ctx)
    try:
        accepted = exchange.set_commanding_price(token, parse_price(price))
    except Exception as exc:
        _fail(exc)
    finally:
        exchange.ledger.close()
    _emit(ctx, {"ok": True, "commanded_price": format_price(accepted)},
          f"commanding price {format_price(accepted)} accepted")


@main.command("policy-tick")
@click.option("--token", default=None)
@click.pass_context
def policy_tick(ctx, token):
    """Advance one policy period (inflation, redistribution, vesting)."""
    _, exchange = _open(ctx)
    try:
        out = exchange.apply({"kind": "ApplyPolicyPeriod", "token": token})
    except Exception as exc:
        _fail(exc)
    finally:
        exchange.ledger.close()
    _emit(ctx, out, "; ".join(
        f"{r['token']}: period {r['period']}, minted {format_amount(r['minted'])}"
        for r in out["reports"]) or "no tokens")


@main.command("verify-ledger")
@click.pass_context
def verify_ledger(ctx):
    """Recompute every hash and link in the ledger."""
    cfg_path = os.path.join(ctx.obj["data_dir"], "config.yaml")
    if not os.path.exists(cfg_path):
        _fail(FileNotFoundError(cfg_path))
    cfg = load_app_config(cfg_path)
    report = verify_file(cfg.ledger_path)
    if report.ok:
        _emit(ctx, {"ok": True, "entries": report.count}, "ok")
    else:
        _emit(ctx, {"ok": False, "bad_sequence": report.bad_sequence},
              f"corrupt at sequence {report.bad_sequence}")
        sys.exit(1)


@main.command("export-ledger")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="write JSON Lines here instead of stdout")
@click.pass_context
def export_ledger(ctx, output):
    """Emit the ledger as JSON Lines."""
    _, exchange = _open(ctx)
    lines = list(exchange.ledger.export_jsonl())
    exchange.ledger.close()
    if output:
        with open(output, "w") as f:
            f.write("\n".join(lines) + ("\n" if lines else ""))
        click.echo(f"wrote {len(lines)} entries to {output}")
    else:
        for line in lines:
            click.echo(line)


@main.command()
@click.option("--scenario", type=click.Path(exists=True), default=None,
              help="scenario YAML file")
@click.option("--preset", type=click.Choice(["consensus", "bubble", "growth-gap"]),
              default=None)
@click.option("--csv", "csv_out", type=click.Path(), default=None,
              help="write metrics CSV here")
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def simulate(ctx, scenario, preset, csv_out, seed):
    """Run an agent-based scenario; emits a per-round metrics CSV."""
    if scenario is None and preset is None:
        _fail(ValueError("one of --scenario or --preset is required"))
    if preset == "growth-gap":
        gap = simulation.growth_gap(10, 3, 100)
        csv_text = (
            "mode,asset_multiple,gdp_multiple,gap_ratio\n"
            f"doubling-law,{gap.asset_multiple},{gap.gdp_multiple},{gap.gap_ratio}\n"
            f"exact,{gap.asset_exact:.6f},{gap.gdp_exact:.6f},{gap.gap_exact:.6f}\n"
        )
        payload = {
            "asset_multiple": gap.asset_multiple,
            "gdp_multiple": gap.gdp_multiple,
            "gap_ratio": gap.gap_ratio,
            "asset_exact": gap.asset_exact,
            "gdp_exact": gap.gdp_exact,
            "doubling": simulation.describe_doubling(10),
        }
        text = (
            f"assets double {simulation.describe_doubling(10)}: "
            f"x{gap.asset_multiple} over 100 (exact x{gap.asset_exact:.1f}); "
            f"GDP x{gap.gdp_multiple} (exact x{gap.gdp_exact:.2f}); "
            f"gap x{gap.gap_ratio}"
        )
    else:
        cfg = load_scenario(scenario) if scenario else scenario_from_dict({})
        cfg.seed = seed if seed else cfg.seed
        if preset == "bubble":
            report = simulation.run_bubble_scenario(cfg)
            rows = report.rows
            payload = {"fired_round": report.fired_round,
                       "max_drawdown": report.max_drawdown, "rounds": len(rows)}
            text = (f"bubble fired at round {report.fired_round}, "
                    f"max drawdown {report.max_drawdown:.1%}"
                    if report.fired_round is not None else "no bubble fired")
        else:
            rows = simulation.run_market_scenario(cfg)
            prices = [r.clearing_price for r in rows if r.clearing_price is not None]
            payload = {"rounds": len(rows),
                       "last_price": format_price(prices[-1]) if prices else None}
            text = (f"{len(rows)} rounds, last clearing price "
                    f"{format_price(prices[-1]) if prices else 'none'}")
        csv_text = simulation.metrics_to_csv(rows)
    if csv_out:
        with open(csv_out, "w") as f:
            f.write(csv_text)
    elif ctx.obj["fmt"] != "json":
        click.echo(csv_text, nl=False)
    _emit(ctx, payload, text)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP gateway."""
    import uvicorn

    from .gateway import create_app

    cfg_path = os.path.join(ctx.obj["data_dir"], "config.yaml")
    if not os.path.exists(cfg_path):
        _fail(FileNotFoundError(f"{cfg_path} (run `init` first)"))
    cfg = load_app_config(cfg_path)
    try:
        app = create_app(cfg.ledger_path, sync=True,
                         incentive_rules=cfg.incentive_rules,
                         quote_supply=cfg.quote_supply)
    except ChainInvalid as exc:
        _fail(exc)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
