import hashlib
import random

import pytest

from tokenmarket.events import (
    SpendDenied,
    TokenIssued,
    TradeExecuted,
)
from tokenmarket.ledger import (
    GENESIS_HASH,
    ChainInvalid,
    Ledger,
    ValidationFailed,
    entry_payload,
    reserve_account,
)


def issue(token="ABC", sponsor="alice", supply=1_000_000_000000):
    return TokenIssued(token, sponsor, supply, 1000, 0, "{}")


def test_genesis_entry_uses_zero_prev_hash():
    led = Ledger()
    entry = led.append(issue(), tick=0)
    assert entry.sequence == 0
    assert entry.prev_hash == GENESIS_HASH


def test_identical_events_get_distinct_hashes():
    led = Ledger()
    led.append(issue(), tick=0)
    e1 = led.append(SpendDenied("ABC", "bob", "luxury", 5), tick=1)
    e2 = led.append(SpendDenied("ABC", "bob", "luxury", 5), tick=2)
    assert e1.entry_hash != e2.entry_hash


def test_hashes_match_independent_recomputation():
    # independent oracle: straight hashlib over the serialized bytes
    rng = random.Random(7)
    led = Ledger()
    led.append(issue(), tick=0)
    reserve = reserve_account("ABC")
    accounts = ["a1", "a2", "a3"]
    for a in accounts:
        led.append(TradeExecuted("ABC", None, a, reserve, 50_000000, 0), tick=1)
    for i in range(100):
        src, dst = rng.sample(accounts, 2)
        led.append(TradeExecuted("ABC", None, dst, src, rng.randint(1, 1000), 0),
                   tick=2 + i)
    prev = GENESIS_HASH
    for e in led.entries:
        payload = entry_payload(e.sequence, e.timestamp, e.event)
        expected = hashlib.sha256(prev + payload).digest()
        assert e.entry_hash == expected
        assert e.prev_hash == prev
        prev = expected
    assert led.verify_chain().ok


def test_validation_failure_leaves_head_unchanged():
    led = Ledger()
    led.append(issue(), tick=0)
    head = led.head_hash
    with pytest.raises(ValidationFailed):
        led.append(TradeExecuted("ABC", None, "x", "nobody", 10, 0), tick=1)
    assert led.head_hash == head
    assert len(led.entries) == 1


def test_duplicate_issue_rejected():
    led = Ledger()
    led.append(issue(), tick=0)
    with pytest.raises(ValidationFailed):
        led.append(issue(), tick=1)


class TestFileBacked:
    def build(self, path, n=50):
        led = Ledger(str(path))
        led.append(issue(), tick=0)
        reserve = reserve_account("ABC")
        for i in range(n - 1):
            led.append(
                TradeExecuted("ABC", None, f"acct{i % 5}", reserve, 1_000000, 0),
                tick=i + 1,
            )
        led.close()
        return led

    def test_fresh_ledger_verifies(self, tmp_path):
        path = tmp_path / "ledger.bin"
        self.build(path)
        assert Ledger(str(path)).verify_chain().ok

    def test_every_single_byte_flip_is_detected(self, tmp_path):
        path = tmp_path / "ledger.bin"
        self.build(path, n=20)
        original = path.read_bytes()
        led = Ledger(str(path))
        offsets = _entry_offsets(original, led)
        for pos in range(len(original)):
            mutated = bytearray(original)
            mutated[pos] ^= 0x01
            path.write_bytes(bytes(mutated))
            report = led.verify_chain()
            assert not report.ok
            # failure at or before the entry owning the flipped byte
            owner = next(i for i, (s, e) in enumerate(offsets) if s <= pos < e)
            assert report.bad_sequence <= owner
        path.write_bytes(original)
        assert led.verify_chain().ok

    def test_truncation_of_final_entry_leaves_valid_prefix(self, tmp_path):
        path = tmp_path / "ledger.bin"
        self.build(path, n=10)
        led = Ledger(str(path))
        data = path.read_bytes()
        offsets = _entry_offsets(data, led)
        led.close()
        path.write_bytes(data[: offsets[-1][0]])
        report = Ledger(str(path)).verify_chain()
        assert report.ok
        assert report.count == 9

    def test_reload_reproduces_chain(self, tmp_path):
        path = tmp_path / "ledger.bin"
        first = self.build(path)
        second = Ledger(str(path))
        assert second.head_hash == first.head_hash
        assert len(second.entries) == len(first.entries)
        assert second.replay() == first.replay()

    def test_sidecar_tracks_head(self, tmp_path):
        path = tmp_path / "ledger.bin"
        led = self.build(path)
        head_hex, count = (path.parent / "ledger.bin.head").read_text().split()
        assert head_hex == led.head_hash.hex()
        assert int(count) == len(led.entries)


class TestReplay:
    def test_issue_and_transfer(self):
        led = Ledger()
        led.append(issue(supply=1000), tick=0)
        reserve = reserve_account("ABC")
        led.append(TradeExecuted("ABC", None, "A", reserve, 200, 0), tick=1)
        sheet = led.replay()
        assert sheet.balance(reserve, "ABC") == 800
        assert sheet.balance("A", "ABC") == 200

    def test_empty_ledger_yields_empty_sheet(self):
        assert Ledger().replay().as_dict() == {}

    def test_replay_matches_shadow_balance_oracle(self):
        rng = random.Random(99)
        led = Ledger()
        led.append(issue(supply=10_000), tick=0)
        accounts = [reserve_account("ABC")] + [f"u{i}" for i in range(4)]
        shadow = {a: 0 for a in accounts}
        shadow[accounts[0]] = 10_000
        tick = 1
        done = 0
        while done < 500:
            src, dst = rng.sample(accounts, 2)
            amount = rng.randint(1, 50)
            if shadow[src] < amount:
                continue
            led.append(TradeExecuted("ABC", None, dst, src, amount, 0), tick=tick)
            shadow[src] -= amount
            shadow[dst] += amount
            tick += 1
            done += 1
        sheet = led.replay()
        for a in accounts:
            assert sheet.balance(a, "ABC") == shadow[a]

    def test_replay_is_deterministic(self):
        led = Ledger()
        led.append(issue(supply=500), tick=0)
        led.append(TradeExecuted("ABC", None, "A", reserve_account("ABC"), 100, 0), tick=1)
        assert led.replay() == led.replay()

    def test_conservation(self):
        led = Ledger()
        led.append(issue(supply=7777), tick=0)
        led.append(TradeExecuted("ABC", None, "A", reserve_account("ABC"), 1234, 0), tick=1)
        sheet = led.replay()
        assert sheet.total_supply("ABC") == sheet.issued["ABC"]

    def test_replay_refuses_corrupt_chain(self, tmp_path):
        path = tmp_path / "ledger.bin"
        led = Ledger(str(path))
        led.append(issue(), tick=0)
        led.append(SpendDenied("ABC", "b", "luxury", 1), tick=1)
        led.close()
        data = bytearray(path.read_bytes())
        data[10] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(ChainInvalid):
            led.replay()


def _entry_offsets(data: bytes, led: Ledger) -> list[tuple[int, int]]:
    import struct

    offsets = []
    off = 0
    while off < len(data):
        (n,) = struct.unpack_from(">I", data, off)
        offsets.append((off, off + 4 + n))
        off += 4 + n
    return offsets
