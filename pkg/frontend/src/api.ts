/** Thin typed client for the gateway's HTTP interface. */

import type {
  ClearResultWire,
  GatewayErrorDetail,
  LedgerEntryWire,
  ReserveWire,
  RoundWire,
  TokenDefinitionWire,
} from "./types.js";

/** Domain rejection from the gateway, with the server's error name intact. */
export class GatewayError extends Error {
  readonly errorName: string;
  readonly status: number;

  constructor(status: number, detail: GatewayErrorDetail) {
    super(detail.message);
    this.errorName = detail.error;
    this.status = status;
  }
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      const detail = (body as { detail?: GatewayErrorDetail }).detail;
      if (detail && typeof detail.error === "string") {
        throw new GatewayError(response.status, detail);
      }
      throw new Error(`HTTP ${response.status} on ${path}`);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listTokens(): Promise<{ tokens: TokenDefinitionWire[] }> {
    return this.request("/tokens");
  }

  currentRound(token: string): Promise<RoundWire> {
    return this.request(`/rounds/current?token=${encodeURIComponent(token)}`);
  }

  reserve(token: string): Promise<ReserveWire> {
    return this.request(`/reserve/${encodeURIComponent(token)}`);
  }

  ledger(fromSequence = 0): Promise<{ head_hash: string; entries: LedgerEntryWire[] }> {
    return this.request(`/ledger?from=${fromSequence}`);
  }

  submitOrder(order: {
    account: string;
    token: string;
    side: "buy" | "sell";
    quantity: string;
    limit_price: string;
  }): Promise<{ order_id: string; round: number }> {
    return this.post("/orders", order);
  }

  clearRound(token: string): Promise<ClearResultWire> {
    return this.post("/rounds/clear", { token });
  }

  setCommandingPrice(
    token: string,
    price: string,
  ): Promise<{ ok: boolean; commanded_price: string }> {
    return this.post("/sponsor/commanding-price", { token, price });
  }
}
