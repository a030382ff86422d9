/** Advisory commanding-price validation.
 *
 * The band limits come verbatim from GET /reserve/{token}; nothing is
 * recomputed from the policy here, so the client can never disagree with
 * the server about where the band sits.  Comparison happens on integers
 * scaled to 4 decimal places (the gateway's price precision) to avoid
 * float artifacts.
 */

export interface BandCheck {
  ok: boolean;
  reason?: string;
}

const PRICE_DECIMALS = 4;

/** Parse a decimal price string to an integer at 4 dp; null if malformed. */
export function parsePrice(text: string): number | null {
  const m = /^([0-9]+)(?:\.([0-9]+))?$/.exec(text.trim());
  if (!m) return null;
  const frac = (m[2] ?? "").padEnd(PRICE_DECIMALS, "0");
  if (frac.length > PRICE_DECIMALS) return null;
  const value = Number(m[1]) * 10 ** PRICE_DECIMALS + Number(frac);
  return Number.isSafeInteger(value) && value > 0 ? value : null;
}

export function checkCommandingPrice(
  input: string,
  band: { min: string; max: string },
  triggersActive: string[],
  commandedThisRound: boolean,
): BandCheck {
  if (triggersActive.length === 0) {
    return { ok: false, reason: "no trigger condition holds" };
  }
  if (commandedThisRound) {
    return { ok: false, reason: "already commanded this round" };
  }
  const value = parsePrice(input);
  if (value === null) {
    return { ok: false, reason: "enter a positive price (up to 4 decimals)" };
  }
  const lo = parsePrice(band.min);
  const hi = parsePrice(band.max);
  if (lo === null || hi === null) {
    return { ok: true }; // band unreadable: defer to the server
  }
  if (value < lo || value > hi) {
    return {
      ok: false,
      reason: `out of band: allowed ${band.min} to ${band.max}`,
    };
  }
  return { ok: true };
}
