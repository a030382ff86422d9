/** Pure view-model builders for the three panes.
 *
 * Every displayed number is the gateway's decimal string verbatim; these
 * functions only arrange, never recompute.
 */

import type {
  LedgerEntryWire,
  ReserveWire,
  RoundWire,
} from "./types.js";

export interface SponsorPane {
  reserveRate: string;
  collateral: string;
  inventory: string;
  bandLabel: string;
  triggers: string[];
  commandInputEnabled: boolean;
  commandHint: string;
}

export function sponsorPane(reserve: ReserveWire): SponsorPane {
  const triggered = reserve.triggers_active.length > 0;
  const enabled = triggered && !reserve.commanded_this_round;
  let hint: string;
  if (!triggered) {
    hint = "commanding disabled: no trigger condition holds";
  } else if (reserve.commanded_this_round) {
    hint = "commanding disabled: already commanded this round";
  } else {
    hint = `set a price between ${reserve.band.min} and ${reserve.band.max}`;
  }
  return {
    reserveRate: reserve.reserve_rate,
    collateral: reserve.collateral,
    inventory: reserve.inventory,
    bandLabel: `${reserve.band.min} – ${reserve.band.max}`,
    triggers: reserve.triggers_active,
    commandInputEnabled: enabled,
    commandHint: hint,
  };
}

export interface MarketPane {
  roundLabel: string;
  referenceLabel: string;
  orderRows: string[][];
  scheduleRows: string[][];
}

export function marketPane(round: RoundWire): MarketPane {
  return {
    roundLabel: `round ${round.round}`,
    referenceLabel: round.commanded_price !== null
      ? `reference ${round.reference} (commanded ${round.commanded_price})`
      : `reference ${round.reference}`,
    orderRows: round.orders.map((o) => [
      o.order_id, o.account, o.side, o.quantity, o.limit_price,
    ]),
    scheduleRows: round.candidate_schedule.map((r) => [
      r.price, r.buy_demand, r.sell_supply, r.volume, r.imbalance,
    ]),
  };
}

/** One-line human rendering of a ledger entry for the tail pane. */
export function ledgerLine(entry: LedgerEntryWire): string {
  const e = entry.event;
  const fields = Object.entries(e)
    .filter(([key]) => key !== "type")
    .map(([key, value]) => `${key}=${JSON.stringify(value)}`)
    .join(" ");
  return `#${entry.sequence} ${e.type} ${fields}`;
}

export function headline(entries: LedgerEntryWire[]): string {
  const last = entries[entries.length - 1];
  return last === undefined
    ? "ledger empty"
    : `${entries.length} entries, head #${last.sequence}`;
}
