import { describe, expect, it } from "vitest";

import { checkCommandingPrice, parsePrice } from "../src/band.js";

const band = { min: "0.90", max: "1.10" };
const triggered = ["low_reserve"];

describe("parsePrice", () => {
  it("scales decimal strings to 4dp integers", () => {
    expect(parsePrice("1")).toBe(10_000);
    expect(parsePrice("0.105")).toBe(1_050);
    expect(parsePrice("1.1000")).toBe(11_000);
  });

  it("rejects malformed and non-positive input", () => {
    expect(parsePrice("")).toBeNull();
    expect(parsePrice("-1")).toBeNull();
    expect(parsePrice("0")).toBeNull();
    expect(parsePrice("1.23456")).toBeNull();
    expect(parsePrice("abc")).toBeNull();
  });
});

describe("checkCommandingPrice", () => {
  it("accepts in-band values, edges inclusive", () => {
    expect(checkCommandingPrice("1.05", band, triggered, false).ok).toBe(true);
    expect(checkCommandingPrice("0.90", band, triggered, false).ok).toBe(true);
    expect(checkCommandingPrice("1.10", band, triggered, false).ok).toBe(true);
  });

  it("blocks out-of-band values with the band in the reason", () => {
    const verdict = checkCommandingPrice("1.2", band, triggered, false);
    expect(verdict.ok).toBe(false);
    expect(verdict.reason).toContain("0.90 to 1.10");
  });

  it("blocks when no trigger condition holds", () => {
    const verdict = checkCommandingPrice("1.05", band, [], false);
    expect(verdict.ok).toBe(false);
    expect(verdict.reason).toContain("no trigger");
  });

  it("blocks a second command in the same round", () => {
    const verdict = checkCommandingPrice("1.05", band, triggered, true);
    expect(verdict.ok).toBe(false);
    expect(verdict.reason).toContain("already commanded");
  });

  it("defers to the server when the band is unreadable", () => {
    const weird = { min: "?", max: "?" };
    expect(checkCommandingPrice("1.05", weird, triggered, false).ok).toBe(true);
  });
});
