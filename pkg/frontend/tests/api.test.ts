import { describe, expect, it } from "vitest";

import { GatewayClient, GatewayError } from "../src/api.js";

function fetchStub(
  expectations: Record<string, { status?: number; body: unknown }>,
): { calls: { url: string; init?: RequestInit }[]; fn: typeof fetch } {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push({ url, init });
    const key = Object.keys(expectations).find((k) => url.includes(k));
    if (!key) throw new Error(`unexpected request ${url}`);
    const { status = 200, body } = expectations[key];
    return {
      ok: status < 400,
      status,
      json: async () => body,
    } as Response;
  }) as typeof fetch;
  return { calls, fn };
}

describe("GatewayClient", () => {
  it("reads the round book", async () => {
    const { fn } = fetchStub({
      "/rounds/current": {
        body: { token: "T", round: 3, reference: "1.05", orders: [] },
      },
    });
    const client = new GatewayClient("http://x", fn);
    const round = await client.currentRound("T");
    expect(round.round).toBe(3);
    expect(round.reference).toBe("1.05");
  });

  it("posts orders as JSON with decimal strings", async () => {
    const { calls, fn } = fetchStub({
      "/orders": { body: { order_id: "T-r0-0", round: 0 } },
    });
    const client = new GatewayClient("http://x", fn);
    await client.submitOrder({
      account: "bob", token: "T", side: "buy",
      quantity: "10", limit_price: "1.05",
    });
    const sent = JSON.parse(String(calls[0].init?.body));
    expect(sent).toEqual({
      account: "bob", token: "T", side: "buy",
      quantity: "10", limit_price: "1.05",
    });
    expect(calls[0].init?.method).toBe("POST");
  });

  it("surfaces the server's error name verbatim", async () => {
    const { fn } = fetchStub({
      "/sponsor/commanding-price": {
        status: 400,
        body: { detail: { error: "OutOfBand", message: "price 2 outside band" } },
      },
    });
    const client = new GatewayClient("http://x", fn);
    const failure = await client.setCommandingPrice("T", "2").catch((e) => e);
    expect(failure).toBeInstanceOf(GatewayError);
    expect((failure as GatewayError).errorName).toBe("OutOfBand");
    expect((failure as GatewayError).message).toContain("outside band");
  });

  it("keeps 409 distinguishable for repeat commands", async () => {
    const { fn } = fetchStub({
      "/sponsor/commanding-price": {
        status: 409,
        body: { detail: { error: "AlreadyCommandedThisRound", message: "round 2" } },
      },
    });
    const client = new GatewayClient("http://x", fn);
    const failure = await client.setCommandingPrice("T", "1").catch((e) => e);
    expect((failure as GatewayError).status).toBe(409);
    expect((failure as GatewayError).errorName).toBe("AlreadyCommandedThisRound");
  });

  it("encodes token names in paths", async () => {
    const { calls, fn } = fetchStub({ "/reserve/": { body: { token: "A/B" } } });
    const client = new GatewayClient("http://x", fn);
    await client.reserve("A/B");
    expect(calls[0].url).toBe("http://x/reserve/A%2FB");
  });
});
