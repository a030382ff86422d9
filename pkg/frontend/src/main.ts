/** Console entry point: wires the gateway client, the event stream, and the
 * three panes (market, sponsor, ledger) to the DOM in index.html. */

import { GatewayClient, GatewayError } from "./api.js";
import { checkCommandingPrice } from "./band.js";
import { openLedgerStream } from "./stream.js";
import { headline, ledgerLine, marketPane, sponsorPane } from "./view.js";
import type { LedgerEntryWire, ReserveWire } from "./types.js";

const LEDGER_TAIL = 50;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderTable(target: HTMLElement, header: string[], rows: string[][]): void {
  const head = `<tr>${header.map((h) => `<th>${h}</th>`).join("")}</tr>`;
  const body = rows
    .map((row) => `<tr>${row.map((c) => `<td>${c}</td>`).join("")}</tr>`)
    .join("");
  target.innerHTML = `<table>${head}${body}</table>`;
}

export function startConsole(baseUrl: string): void {
  const client = new GatewayClient(baseUrl);
  const entries: LedgerEntryWire[] = [];
  let reserve: ReserveWire | null = null;
  let token = "";

  const banner = el<HTMLDivElement>("banner");
  const tokenSelect = el<HTMLSelectElement>("token-select");
  const commandInput = el<HTMLInputElement>("command-price");
  const commandButton = el<HTMLButtonElement>("command-submit");
  const commandStatus = el<HTMLSpanElement>("command-status");

  async function refresh(): Promise<void> {
    if (!token) return;
    const [round, reserveView] = await Promise.all([
      client.currentRound(token),
      client.reserve(token),
    ]);
    reserve = reserveView;

    const market = marketPane(round);
    el("round-label").textContent = market.roundLabel;
    el("reference-label").textContent = market.referenceLabel;
    renderTable(el("orders"), ["id", "account", "side", "qty", "limit"],
                market.orderRows);
    renderTable(el("schedule"),
                ["price", "demand", "supply", "volume", "imbalance"],
                market.scheduleRows);

    const sponsor = sponsorPane(reserveView);
    el("reserve-rate").textContent = sponsor.reserveRate;
    el("collateral").textContent = sponsor.collateral;
    el("inventory").textContent = sponsor.inventory;
    el("band-label").textContent = sponsor.bandLabel;
    el("triggers").textContent = sponsor.triggers.join(", ") || "none";
    commandInput.disabled = !sponsor.commandInputEnabled;
    commandButton.disabled = !sponsor.commandInputEnabled;
    commandStatus.textContent = sponsor.commandHint;
  }

  async function loadTokens(): Promise<void> {
    const listed = (await client.listTokens()).tokens
      .map((t) => t.token)
      .filter((name) => name !== "QUOTE");
    tokenSelect.innerHTML = listed
      .map((name) => `<option value="${name}">${name}</option>`)
      .join("");
    token = listed[0] ?? "";
    await refresh();
  }

  function renderLedger(): void {
    el("ledger-headline").textContent = headline(entries);
    el("ledger-tail").textContent = entries
      .slice(-LEDGER_TAIL)
      .map(ledgerLine)
      .reverse()
      .join("\n");
  }

  tokenSelect.addEventListener("change", () => {
    token = tokenSelect.value;
    void refresh();
  });

  el<HTMLButtonElement>("clear-round").addEventListener("click", () => {
    void client.clearRound(token).then(refresh);
  });

  el<HTMLFormElement>("order-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void client
      .submitOrder({
        account: el<HTMLInputElement>("order-account").value,
        token,
        side: el<HTMLSelectElement>("order-side").value as "buy" | "sell",
        quantity: el<HTMLInputElement>("order-qty").value,
        limit_price: el<HTMLInputElement>("order-price").value,
      })
      .then(refresh)
      .catch((error: unknown) => {
        el("order-status").textContent =
          error instanceof GatewayError
            ? `${error.errorName}: ${error.message}`
            : String(error);
      });
  });

  commandButton.addEventListener("click", () => {
    if (!reserve) return;
    // advisory pre-check against the server-provided band; the gateway
    // remains authoritative and its rejection is shown verbatim
    const verdict = checkCommandingPrice(
      commandInput.value, reserve.band,
      reserve.triggers_active, reserve.commanded_this_round,
    );
    if (!verdict.ok) {
      commandStatus.textContent = `blocked: ${verdict.reason}`;
      return;
    }
    void client
      .setCommandingPrice(token, commandInput.value)
      .then((ack) => {
        commandStatus.textContent = `accepted: ${ack.commanded_price}`;
        return refresh();
      })
      .catch((error: unknown) => {
        commandStatus.textContent =
          error instanceof GatewayError
            ? `${error.errorName}: ${error.message}`
            : String(error);
      });
  });

  openLedgerStream(baseUrl, {
    onEntry(entry) {
      entries.push(entry);
      renderLedger();
      void refresh();
    },
    onStatus(connected) {
      banner.hidden = connected;
      if (connected) {
        // reconnect: restore state from the GET endpoints
        void client.ledger().then((page) => {
          entries.length = 0;
          entries.push(...page.entries);
          renderLedger();
          return loadTokens();
        });
      }
    },
  });

  void client.ledger().then((page) => {
    entries.push(...page.entries);
    renderLedger();
  });
  void loadTokens();
}

declare global {
  interface Window {
    startConsole: typeof startConsole;
  }
}

if (typeof window !== "undefined") {
  window.startConsole = startConsole;
}
