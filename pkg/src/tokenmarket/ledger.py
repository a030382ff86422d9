"""Append-only, hash-chained event ledger with replay and verification.

Each entry's hash covers the previous hash plus the canonical encoding of
(sequence, timestamp, event), so any byte-level alteration of a persisted
entry is detectable at or before that entry.  Balances are never stored;
they are reconstructed by replaying the chain.

File layout: repeated records of

    u32 big-endian record length
    canonical payload  (encoded sequence, timestamp, event)
    32-byte prev_hash
    32-byte entry_hash

plus a text sidecar "<path>.head" holding "<hex head hash> <count>".
Truncation is detectable only against the sidecar; verify_chain checks the
chain itself.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
from dataclasses import dataclass
from typing import Iterator, Optional

from .events import Event, TokenIssued, TradeExecuted, IncentiveMinted, \
    InflationApplied, RedistributionApplied, RoundCleared, OrderSubmitted, \
    SpendDenied, CommandingPriceSet, _enc, decode_event, _dec
from .fixedpoint import notional

GENESIS_HASH = b"\x00" * 32
HASH_LEN = 32


class LedgerError(Exception):
    pass


class ValidationFailed(LedgerError):
    """Event is inconsistent with the replayed state."""


class ChainInvalid(LedgerError):
    """Replay requested on a ledger whose chain does not verify."""


class StorageFailed(LedgerError):
    pass


@dataclass(frozen=True)
class LedgerEntry:
    sequence: int
    timestamp: int
    event: Event
    prev_hash: bytes
    entry_hash: bytes

    def payload(self) -> bytes:
        return entry_payload(self.sequence, self.timestamp, self.event)

    def to_dict(self) -> dict:
        return {
            "sequence": self.sequence,
            "timestamp": self.timestamp,
            "event": self.event.to_dict(),
            "prev_hash": self.prev_hash.hex(),
            "entry_hash": self.entry_hash.hex(),
        }


def entry_payload(sequence: int, timestamp: int, event: Event) -> bytes:
    return _enc(sequence) + _enc(timestamp) + event.encode()


def entry_hash(prev_hash: bytes, payload: bytes) -> bytes:
    return hashlib.sha256(prev_hash + payload).digest()


@dataclass
class VerificationReport:
    ok: bool
    bad_sequence: Optional[int]
    count: int


class BalanceSheet:
    """Derived per-(account, token) balances plus supply totals."""

    def __init__(self) -> None:
        self._balances: dict[tuple[str, str], int] = {}
        self.issued: dict[str, int] = {}
        self.inflated: dict[str, int] = {}
        self.minted_incentive: dict[str, int] = {}

    def balance(self, account: str, token: str) -> int:
        return self._balances.get((account, token), 0)

    def credit(self, account: str, token: str, amount: int) -> None:
        self._balances[(account, token)] = self.balance(account, token) + amount

    def debit(self, account: str, token: str, amount: int) -> None:
        bal = self.balance(account, token)
        if amount > bal:
            raise ValidationFailed(
                f"{account} has {bal} of {token}, cannot debit {amount}"
            )
        self._balances[(account, token)] = bal - amount

    def total_supply(self, token: str) -> int:
        return sum(v for (_, t), v in self._balances.items() if t == token)

    def holders(self, token: str) -> dict[str, int]:
        return {
            a: v for (a, t), v in self._balances.items() if t == token and v > 0
        }

    def as_dict(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for (account, token), v in sorted(self._balances.items()):
            out.setdefault(account, {})[token] = v
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BalanceSheet):
            return NotImplemented
        strip = lambda d: {k: v for k, v in d._balances.items() if v != 0}
        return strip(self) == strip(other)


class Replayer:
    """Applies events to a balance sheet, enforcing domain validity."""

    def __init__(self) -> None:
        self.sheet = BalanceSheet()
        self.tokens: set[str] = set()
        self.cleared_rounds: set[tuple[str, int]] = set()

    def apply(self, event: Event) -> None:
        if isinstance(event, TokenIssued):
            if event.token in self.tokens:
                raise ValidationFailed(f"token {event.token!r} already issued")
            if event.supply <= 0 or event.issue_price <= 0 or event.collateral < 0:
                raise ValidationFailed("non-positive issuance parameter")
            self.tokens.add(event.token)
            reserve = reserve_account(event.token)
            self.sheet.credit(reserve, event.token, event.supply)
            if event.collateral > 0:
                self.sheet.debit(event.sponsor, QUOTE_TOKEN, event.collateral)
                self.sheet.credit(reserve, QUOTE_TOKEN, event.collateral)
            self.sheet.issued[event.token] = event.supply
        elif isinstance(event, OrderSubmitted):
            if event.quantity <= 0 or event.limit_price <= 0:
                raise ValidationFailed("order quantity and limit must be positive")
        elif isinstance(event, RoundCleared):
            self.cleared_rounds.add((event.token, event.round))
        elif isinstance(event, TradeExecuted):
            if event.round is not None and (event.token, event.round) not in self.cleared_rounds:
                raise ValidationFailed(
                    f"trade references uncleared round {event.round} of {event.token}"
                )
            if event.quantity < 0:
                raise ValidationFailed("negative trade quantity")
            self.sheet.debit(event.seller, event.token, event.quantity)
            self.sheet.credit(event.buyer, event.token, event.quantity)
            cost = notional(event.quantity, event.price)
            if cost:
                self.sheet.debit(event.buyer, QUOTE_TOKEN, cost)
                self.sheet.credit(event.seller, QUOTE_TOKEN, cost)
        elif isinstance(event, IncentiveMinted):
            if event.amount <= 0:
                raise ValidationFailed("incentive amount must be positive")
            self.sheet.credit(event.grantee, event.token, event.amount)
            self.sheet.minted_incentive[event.token] = (
                self.sheet.minted_incentive.get(event.token, 0) + event.amount
            )
        elif isinstance(event, InflationApplied):
            if event.minted != sum(a for _, a in event.credits):
                raise ValidationFailed("inflation credits do not sum to minted")
            for account, amount in event.credits:
                self.sheet.credit(account, event.token, amount)
            self.sheet.inflated[event.token] = (
                self.sheet.inflated.get(event.token, 0) + event.minted
            )
        elif isinstance(event, RedistributionApplied):
            for src, dst, amount in event.transfers:
                self.sheet.debit(src, event.token, amount)
                self.sheet.credit(dst, event.token, amount)
        elif isinstance(event, (CommandingPriceSet, SpendDenied)):
            pass
        else:
            raise ValidationFailed(f"unknown event type {type(event).__name__}")


QUOTE_TOKEN = "QUOTE"


def reserve_account(token: str) -> str:
    """Account holding a token's collateral (quote) and sponsor inventory."""
    return f"reserve:{token}"


class Ledger:
    """Single-writer hash-chained event log, optionally file-backed."""

    def __init__(self, path: Optional[str] = None, sync: bool = False) -> None:
        self.path = path
        self.sync = sync
        self.entries: list[LedgerEntry] = []
        self._replayer = Replayer()
        self._file: Optional[io.BufferedWriter] = None
        if path is not None:
            self._load()
            self._file = open(path, "ab")

    @property
    def head_hash(self) -> bytes:
        return self.entries[-1].entry_hash if self.entries else GENESIS_HASH

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    # -- append path ------------------------------------------------------

    def append(self, event: Event, tick: int) -> LedgerEntry:
        self._replayer.apply(event)  # raises ValidationFailed, head unchanged
        seq = len(self.entries)
        payload = entry_payload(seq, tick, event)
        prev = self.head_hash
        digest = entry_hash(prev, payload)
        entry = LedgerEntry(seq, tick, event, prev, digest)
        if self._file is not None:
            try:
                record = payload + prev + digest
                self._file.write(struct.pack(">I", len(record)) + record)
                self._file.flush()
                if self.sync:
                    os.fsync(self._file.fileno())
            except OSError as exc:  # pragma: no cover - disk failure path
                raise StorageFailed(str(exc)) from exc
            self._write_sidecar(digest, seq + 1)
        self.entries.append(entry)
        return entry

    def _sidecar_path(self) -> str:
        return self.path + ".head"

    def _write_sidecar(self, head: bytes, count: int) -> None:
        tmp = self._sidecar_path() + ".tmp"
        with open(tmp, "w") as f:
            f.write(f"{head.hex()} {count}\n")
        os.replace(tmp, self._sidecar_path())

    # -- load / verify ----------------------------------------------------

    def _load(self) -> None:
        if not os.path.exists(self.path):
            return
        with open(self.path, "rb") as f:
            data = f.read()
        entries, good_end, bad = _parse_records(data)
        if bad is not None:
            # a partial trailing record is dropped; anything else is corruption
            tail = data[good_end:]
            if len(tail) >= 4 and len(tail) >= 4 + struct.unpack_from(">I", tail)[0]:
                raise ChainInvalid(f"corrupt ledger at sequence {bad}")
            with open(self.path, "r+b") as f:
                f.truncate(good_end)
        for e in entries:
            self._replayer.apply(e.event)
        self.entries = entries
        if self.entries:
            self._write_sidecar(self.head_hash, len(self.entries))

    def verify_chain(self) -> VerificationReport:
        if self.path is not None:
            with open(self.path, "rb") as f:
                data = f.read()
            entries, _, bad = _parse_records(data)
            if bad is not None:
                return VerificationReport(False, bad, len(entries))
            return VerificationReport(True, None, len(entries))
        return self._verify_memory()

    def _verify_memory(self) -> VerificationReport:
        prev = GENESIS_HASH
        for i, e in enumerate(self.entries):
            if e.sequence != i or e.prev_hash != prev:
                return VerificationReport(False, i, len(self.entries))
            if entry_hash(prev, e.payload()) != e.entry_hash:
                return VerificationReport(False, i, len(self.entries))
            prev = e.entry_hash
        return VerificationReport(True, None, len(self.entries))

    def replay(self) -> BalanceSheet:
        report = self.verify_chain()
        if not report.ok:
            raise ChainInvalid(f"chain invalid at sequence {report.bad_sequence}")
        replayer = Replayer()
        for e in self.entries:
            replayer.apply(e.event)
        return replayer.sheet

    # -- export -----------------------------------------------------------

    def export_jsonl(self) -> Iterator[str]:
        for e in self.entries:
            yield json.dumps(e.to_dict(), sort_keys=True, separators=(",", ":"))


def verify_file(path: str) -> VerificationReport:
    """Verify a ledger file without opening it for writing."""
    if not os.path.exists(path):
        return VerificationReport(True, None, 0)
    with open(path, "rb") as f:
        data = f.read()
    entries, _, bad = _parse_records(data)
    if bad is not None:
        return VerificationReport(False, bad, len(entries))
    return VerificationReport(True, None, len(entries))


def _parse_records(data: bytes) -> tuple[list[LedgerEntry], int, Optional[int]]:
    """Parse the binary file; returns (entries, end of last good record,
    first bad sequence or None).  A short trailing record also reports its
    index; callers decide whether that is truncation or corruption."""
    entries: list[LedgerEntry] = []
    prev = GENESIS_HASH
    off = 0
    idx = 0
    n = len(data)
    while off < n:
        if off + 4 > n:
            return entries, off, idx
        (rec_len,) = struct.unpack_from(">I", data, off)
        start = off + 4
        end = start + rec_len
        if end > n or rec_len < 2 * HASH_LEN:
            return entries, off, idx
        record = data[start:end]
        payload = record[: -2 * HASH_LEN]
        stored_prev = record[-2 * HASH_LEN : -HASH_LEN]
        stored_hash = record[-HASH_LEN:]
        try:
            seq, p = _dec(payload, 0)
            ts, p = _dec(payload, p)
            event, p = decode_event(payload, p)
            if p != len(payload) or not isinstance(seq, int) or not isinstance(ts, int):
                raise ValueError("trailing or malformed payload")
        except Exception:
            return entries, off, idx
        if seq != idx or stored_prev != prev:
            return entries, off, idx
        if entry_hash(stored_prev, payload) != stored_hash:
            return entries, off, idx
        entries.append(LedgerEntry(seq, ts, event, stored_prev, stored_hash))
        prev = stored_hash
        off = end
        idx += 1
    return entries, off, None
