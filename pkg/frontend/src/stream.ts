/** Live ledger feed over server-sent events, with auto-reconnect.
 *
 * Entries arrive in commit order; on connection loss the caller is told to
 * show a banner and, after reconnecting, to restore state from the GET
 * endpoints (the stream itself carries no history).
 */

import type { LedgerEntryWire } from "./types.js";

export interface StreamHandlers {
  onEntry: (entry: LedgerEntryWire) => void;
  onStatus: (connected: boolean) => void;
}

export interface LedgerStream {
  close(): void;
}

type EventSourceFactory = (url: string) => EventSource;

export function openLedgerStream(
  baseUrl: string,
  handlers: StreamHandlers,
  factory: EventSourceFactory = (url) => new EventSource(url),
  retryMs = 2000,
): LedgerStream {
  let source: EventSource | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let closed = false;

  const connect = () => {
    if (closed) return;
    source = factory(`${baseUrl}/stream`);
    source.onopen = () => handlers.onStatus(true);
    source.onmessage = (event) => {
      handlers.onEntry(JSON.parse(event.data) as LedgerEntryWire);
    };
    source.onerror = () => {
      handlers.onStatus(false);
      source?.close();
      source = null;
      if (!closed) timer = setTimeout(connect, retryMs);
    };
  };
  connect();

  return {
    close() {
      closed = true;
      if (timer !== null) clearTimeout(timer);
      source?.close();
    },
  };
}
