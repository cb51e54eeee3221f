"""Parsing and serialization of trace documents."""
import json

import pytest

import helpers as h
from epg.errors import MalformedTrace, SchemaViolation, WordOverflow
from epg.trace import dump_trace, parse_trace, read_memory

TOP_WORD = 0x0BB1CC82D95791A1A9CA876FA9A5C6956B2CE21989BD57CCA42DCDD3CBF705C6


def test_parse_recorded_sstore_step():
    # Field-for-field decode of a step captured from a mainnet-style tracer.
    entry = {
        "pc": 1164,
        "op": "SSTORE",
        "gas": 5718423,
        "gasCost": 20000,
        "depth": 2,
        "stack": [
            "0x60fe47b1",
            "0x0",
            "0x1",
            "0x2386f26fc10000",
            "0x0bb1cc82d95791a1a9ca876fa9a5c6956b2ce21989bd57cca42dcdd3cbf705c6",
        ],
        "memory": [],
    }
    _, steps = parse_trace(h.doc([entry]))
    s = steps[0]
    assert s.pc == 1164
    assert s.op == "SSTORE"
    assert s.gas == 5718423
    assert s.gas_cost == 20000
    assert s.depth == 2
    assert len(s.stack) == 5
    assert s.stack[-1] == TOP_WORD
    assert s.stack[0] == 0x60FE47B1


def test_stack_top_is_last():
    _, steps = parse_trace(h.doc([h.step(0, "ADD", 1, stack=(7, 9))]))
    assert steps[0].stack == (7, 9)
    assert steps[0].stack[-1] == 9


def test_parse_accepts_bytes_text_and_dict():
    d = h.doc([h.step(0, "STOP", 1)])
    blob = json.dumps(d)
    for raw in (d, blob, blob.encode()):
        envelope, steps = parse_trace(raw)
        assert envelope.tx_hash == h.TX_HASH
        assert len(steps) == 1


def test_undecodable_json_is_malformed():
    with pytest.raises(MalformedTrace):
        parse_trace(b"{nope")
    with pytest.raises(MalformedTrace):
        parse_trace(12)
    with pytest.raises(MalformedTrace):
        parse_trace("[1, 2]")


def test_missing_sections():
    d = h.doc([])
    del d["tx"]
    with pytest.raises(SchemaViolation):
        parse_trace(d)
    d2 = h.doc([])
    del d2["trace"]["structLogs"]
    with pytest.raises(SchemaViolation):
        parse_trace(d2)


def test_missing_step_field_names_the_step():
    entry = h.step(4, "PUSH1", 1)
    del entry["gasCost"]
    with pytest.raises(SchemaViolation, match=r"structLogs\[0\]"):
        parse_trace(h.doc([entry]))


def test_word_forms():
    # Bare hex, 0x-prefixed hex, and raw ints all decode to the same word.
    entry = h.step(0, "PUSH1", 1)
    entry["stack"] = ["ff", "0xff", 255]
    _, steps = parse_trace(h.doc([entry]))
    assert steps[0].stack == (255, 255, 255)


def test_bad_words_rejected():
    entry = h.step(0, "PUSH1", 1)
    entry["stack"] = ["0x"]
    with pytest.raises(SchemaViolation):
        parse_trace(h.doc([entry]))
    entry["stack"] = ["zz"]
    with pytest.raises(SchemaViolation):
        parse_trace(h.doc([entry]))


def test_word_overflow_names_location():
    entry = h.step(0, "PUSH1", 1)
    entry["stack"] = [hex(2**256)]
    with pytest.raises(WordOverflow, match=r"structLogs\[0\]"):
        parse_trace(h.doc([entry]))


def test_memory_words_must_be_32_bytes():
    entry = h.step(0, "MSTORE", 1)
    entry["memory"] = ["aabb"]
    with pytest.raises(SchemaViolation, match="memory"):
        parse_trace(h.doc([entry]))


def test_storage_map_decodes_to_ints():
    entry = h.step(0, "SLOAD", 1, storage={1: 77, 2**200: 5})
    _, steps = parse_trace(h.doc([entry]))
    assert steps[0].storage == {1: 77, 2**200: 5}


def test_depth_must_be_positive():
    with pytest.raises(SchemaViolation, match="depth"):
        parse_trace(h.doc([h.step(0, "STOP", 0)]))


def test_bool_is_not_an_int():
    entry = h.step(0, "STOP", 1)
    entry["pc"] = True
    with pytest.raises(SchemaViolation):
        parse_trace(h.doc([entry]))


def test_envelope_decoding():
    d = h.doc(
        [],
        to=None,
        value=3 * 10**18,
        input_data="0x6001600101",
        pre_balances={h.ALICE: 5, h.BOB: 0},
    )
    d["tx"]["gasUsed"] = 54321
    d["tx"]["preTokenBalances"] = {h.CAROL: {h.ALICE: "0x64"}}
    envelope, steps = parse_trace(d)
    assert steps == []
    assert envelope.to is None
    assert envelope.value == 3 * 10**18
    assert envelope.input_data == bytes.fromhex("6001600101")
    assert envelope.gas_used == 54321
    assert envelope.pre_balances == {h.ALICE: 5, h.BOB: 0}
    assert envelope.pre_token_balances == {h.CAROL: {h.ALICE: 100}}


def test_roundtrip_is_canonical():
    mem = bytes(range(32)) + b"\x00" * 32
    d = h.doc(
        [
            h.step(0, "PUSH2", 1, stack=(), gas=999, gas_cost=3),
            h.step(3, "MSTORE", 1, stack=(1, 64), memory=mem),
            h.step(4, "SSTORE", 1, stack=(7, 0), storage={0: 7}),
        ],
        value=5,
        pre_balances={h.ALICE: 10**18},
    )
    envelope, steps = parse_trace(d)
    out = dump_trace(envelope, steps)
    envelope2, steps2 = parse_trace(out)
    assert dump_trace(envelope2, steps2) == out
    assert out["trace"]["structLogs"][1]["stack"] == ["0x1", "0x40"]
    assert out["trace"]["structLogs"][1]["memory"][0] == bytes(range(32)).hex()
    assert all(len(w) == 64 for w in out["trace"]["structLogs"][1]["memory"])
    assert out["trace"]["structLogs"][2]["storage"] == {
        format(0, "064x"): format(7, "064x")
    }
    assert out["tx"]["value"] == "0x5"


def test_read_memory_pads_past_end():
    assert read_memory(b"\x01\x02", 0, 4) == b"\x01\x02\x00\x00"
    assert read_memory(b"", 10, 3) == b"\x00\x00\x00"
    assert read_memory(b"\x01\x02\x03", 1, 2) == b"\x02\x03"
    assert read_memory(b"\x01", 0, 0) == b""


def test_address_wider_than_160_bits_rejected():
    d = h.doc([])
    d["tx"]["to"] = hex(2**170)
    with pytest.raises(SchemaViolation, match="address"):
        parse_trace(d)
