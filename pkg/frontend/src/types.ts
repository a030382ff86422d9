/** Wire types for the gateway's JSON interface.
 *
 * Amounts and prices are decimal strings on the wire; the console never
 * converts them to floats for display, only for advisory comparisons.
 */

export interface TokenDefinitionWire {
  token: string;
  inflation_rate: string;
  spending_domains: string[];
  [extra: string]: unknown;
}

export interface OrderWire {
  order_id: string;
  account: string;
  side: "buy" | "sell";
  quantity: string;
  limit_price: string;
  arrival: number;
}

export interface ScheduleRowWire {
  price: string;
  buy_demand: string;
  sell_supply: string;
  volume: string;
  imbalance: string;
}

export interface RoundWire {
  token: string;
  round: number;
  reference: string;
  commanded_price: string | null;
  zero_volume_streak: number;
  last_clearing_price: string | null;
  orders: OrderWire[];
  candidate_schedule: ScheduleRowWire[];
}

export interface ReserveWire {
  token: string;
  collateral: string;
  inventory: string;
  issued_supply: string;
  issue_price: string;
  reserve_rate: string;
  triggers_active: string[];
  commanded_this_round: boolean;
  band: { min: string; max: string };
}

export interface ClearResultWire {
  round: number;
  clearing_price: string | null;
  matched_volume: string;
  reference_next: string;
}

export interface LedgerEntryWire {
  sequence: number;
  timestamp: number;
  event: { type: string; [field: string]: unknown };
  prev_hash: string;
  entry_hash: string;
}

export interface GatewayErrorDetail {
  error: string;
  message: string;
}
