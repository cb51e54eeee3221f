"""Builders for hand-written trace documents used across the test suite."""
from __future__ import annotations

from typing import Any

EOA = "0x" + "ab" * 20
ALICE = "0x" + "11" * 20
BOB = "0x" + "22" * 20
CAROL = "0x" + "33" * 20
TX_HASH = "0x" + "5a" * 32


def step(
    pc: int,
    op: str,
    depth: int,
    stack: tuple[int, ...] = (),
    memory: bytes = b"",
    storage: dict[int, int] | None = None,
    gas: int = 1_000_000,
    gas_cost: int = 3,
) -> dict[str, Any]:
    """One structLogs entry in document form. Stack is bottom-to-top."""
    if len(memory) % 32:
        memory = memory + b"\x00" * (32 - len(memory) % 32)
    entry: dict[str, Any] = {
        "pc": pc,
        "op": op,
        "gas": gas,
        "gasCost": gas_cost,
        "depth": depth,
        "stack": [hex(w) for w in stack],
        "memory": [memory[i : i + 32].hex() for i in range(0, len(memory), 32)],
    }
    if storage:
        entry["storage"] = {format(k, "064x"): format(v, "064x") for k, v in storage.items()}
    return entry


def doc(
    steps: list[dict],
    to: str | None = ALICE,
    sender: str = EOA,
    value: int = 0,
    input_data: str = "0x",
    pre_balances: dict[str, int] | None = None,
    gas_used: int | None = None,
) -> dict[str, Any]:
    tx: dict[str, Any] = {
        "txHash": TX_HASH,
        "from": sender,
        "value": hex(value),
        "input": input_data,
        "blockNumber": 18_000_000,
        "timestamp": 1_700_000_000,
    }
    if to is not None:
        tx["to"] = to
    if gas_used is not None:
        tx["gasUsed"] = gas_used
    if pre_balances:
        tx["preBalances"] = {a: hex(v) for a, v in pre_balances.items()}
    return {"tx": tx, "trace": {"structLogs": steps}}


def call_stack(
    to: str,
    value: int = 0,
    args_off: int = 0,
    args_len: int = 0,
    ret_off: int = 0,
    ret_len: int = 0,
    gas: int = 500_000,
    under: tuple[int, ...] = (),
) -> tuple[int, ...]:
    """Stack layout (bottom-to-top) at a CALL/CALLCODE step."""
    return under + (ret_len, ret_off, args_len, args_off, value, int(to, 16), gas)


def thin_call_stack(
    to: str,
    args_off: int = 0,
    args_len: int = 0,
    ret_off: int = 0,
    ret_len: int = 0,
    gas: int = 500_000,
    under: tuple[int, ...] = (),
) -> tuple[int, ...]:
    """Stack layout at a DELEGATECALL/STATICCALL step (no value word)."""
    return under + (ret_len, ret_off, args_len, args_off, int(to, 16), gas)


def create_stack(
    value: int = 0, off: int = 0, length: int = 0, under: tuple[int, ...] = ()
) -> tuple[int, ...]:
    """Stack layout at a CREATE step."""
    return under + (length, off, value)
