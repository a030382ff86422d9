"""Event payloads and their canonical binary serialization.

Every state-changing action is one of the event types below.  The ledger
hashes the canonical encoding, so the encoding is defined bit-exactly:

  int   -> 'i' + u32 big-endian length + ASCII decimal digits ('-' prefix ok)
  str   -> 's' + u32 length + UTF-8 bytes
  none  -> 'n'
  list  -> 'l' + u32 count + encoded items
  event -> 'E' + encoded type name (str) + u32 field count
             + encoded field values in declaration order

Tuples encode as lists.  No floats appear in events; fractional policy
parameters travel as decimal strings.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields
from typing import Any, Union


def _enc(value: Any) -> bytes:
    if value is None:
        return b"n"
    if isinstance(value, bool):
        raise TypeError("bool is not an event field type")
    if isinstance(value, int):
        digits = str(value).encode("ascii")
        return b"i" + struct.pack(">I", len(digits)) + digits
    if isinstance(value, str):
        raw = value.encode("utf-8")
        return b"s" + struct.pack(">I", len(raw)) + raw
    if isinstance(value, (list, tuple)):
        out = b"l" + struct.pack(">I", len(value))
        for item in value:
            out += _enc(item)
        return out
    raise TypeError(f"unsupported event field type: {type(value)!r}")


@dataclass(frozen=True)
class Event:
    """Base class; subclasses are the closed set of ledger event types."""

    def encode(self) -> bytes:
        name = type(self).__name__
        out = b"E" + _enc(name)
        fs = fields(self)
        out += struct.pack(">I", len(fs))
        for f in fs:
            out += _enc(getattr(self, f.name))
        return out

    def to_dict(self) -> dict:
        d = {"type": type(self).__name__}
        for f in fields(self):
            v = getattr(self, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d


@dataclass(frozen=True)
class TokenIssued(Event):
    token: str
    sponsor: str
    supply: int          # minor units, 6 dp
    issue_price: int     # price units, 4 dp
    collateral: int      # quote minor units
    policy: str          # canonical JSON of token + sponsor policy bundle


@dataclass(frozen=True)
class OrderSubmitted(Event):
    order_id: str
    account: str
    token: str
    side: str            # 'buy' | 'sell'
    quantity: int
    limit_price: int
    round: int
    arrival: int


@dataclass(frozen=True)
class RoundCleared(Event):
    token: str
    round: int
    clearing_price: Union[int, None]
    matched_volume: int
    reference_next: int


@dataclass(frozen=True)
class TradeExecuted(Event):
    token: str
    round: Union[int, None]  # None marks a plain transfer outside any round
    buyer: str
    seller: str
    quantity: int
    price: int               # 0 for plain transfers


@dataclass(frozen=True)
class CommandingPriceSet(Event):
    token: str
    round: int
    price: int
    reference: int           # reference price at command time (band audit)


@dataclass(frozen=True)
class IncentiveMinted(Event):
    grant_id: str
    grantee: str
    token: str
    amount: int
    granted_at: int
    schedule_id: str
    trigger: str             # 'sale' | 'design'


@dataclass(frozen=True)
class InflationApplied(Event):
    token: str
    period: int
    minted: int
    credits: tuple           # ((account, amount), ...)


@dataclass(frozen=True)
class RedistributionApplied(Event):
    token: str
    period: int
    transfers: tuple         # ((from_account, to_account, amount), ...)


@dataclass(frozen=True)
class SpendDenied(Event):
    token: str
    account: str
    category: str
    amount: int


EVENT_TYPES = {
    cls.__name__: cls
    for cls in (
        TokenIssued,
        OrderSubmitted,
        RoundCleared,
        TradeExecuted,
        CommandingPriceSet,
        IncentiveMinted,
        InflationApplied,
        RedistributionApplied,
        SpendDenied,
    )
}


def event_from_dict(d: dict) -> Event:
    cls = EVENT_TYPES[d["type"]]
    kwargs = {}
    for f in fields(cls):
        v = d[f.name]
        if isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        kwargs[f.name] = v
    return cls(**kwargs)


def decode_event(data: bytes, offset: int) -> tuple[Event, int]:
    """Inverse of Event.encode, reading at `offset`; returns (event, end)."""
    val, offset = _dec(data, offset)
    return val, offset


def _dec(data: bytes, off: int):
    tag = data[off : off + 1]
    off += 1
    if tag == b"n":
        return None, off
    if tag == b"i":
        (n,) = struct.unpack_from(">I", data, off)
        off += 4
        return int(data[off : off + n].decode("ascii")), off + n
    if tag == b"s":
        (n,) = struct.unpack_from(">I", data, off)
        off += 4
        return data[off : off + n].decode("utf-8"), off + n
    if tag == b"l":
        (n,) = struct.unpack_from(">I", data, off)
        off += 4
        items = []
        for _ in range(n):
            item, off = _dec(data, off)
            items.append(item)
        return tuple(items), off
    if tag == b"E":
        name, off = _dec(data, off)
        cls = EVENT_TYPES[name]
        (n,) = struct.unpack_from(">I", data, off)
        off += 4
        fs = fields(cls)
        if n != len(fs):
            raise ValueError(f"field count mismatch for {name}")
        kwargs = {}
        for f in fs:
            v, off = _dec(data, off)
            kwargs[f.name] = v
        return cls(**kwargs), off
    raise ValueError(f"bad tag byte {tag!r} at offset {off - 1}")
