"""A tiny EVM assembler for scenario contracts.

Programs are flat lists of items:

    "CALLER"            plain mnemonic
    push(7)             auto-sized PUSHn with an immediate
    pushl("dest")       PUSH2 holding a label's byte offset
    label("dest")       records the current offset (emits nothing)
    mark("spot")        same as label, by convention not a jump target
    data(b"...")        raw bytes embedded in the code

Labels and marks share one namespace and end up in the returned table, which
the generator writes into the fixture manifest so tests can refer to program
counters by name.
"""
from __future__ import annotations

OPCODE_BYTES: dict[str, int] = {
    "STOP": 0x00, "ADD": 0x01, "MUL": 0x02, "SUB": 0x03, "DIV": 0x04,
    "MOD": 0x06, "EXP": 0x0A, "LT": 0x10, "GT": 0x11, "SLT": 0x12,
    "SGT": 0x13, "EQ": 0x14, "ISZERO": 0x15, "AND": 0x16, "OR": 0x17,
    "XOR": 0x18, "NOT": 0x19, "BYTE": 0x1A, "SHL": 0x1B, "SHR": 0x1C,
    "SHA3": 0x20, "ADDRESS": 0x30, "BALANCE": 0x31, "ORIGIN": 0x32,
    "CALLER": 0x33, "CALLVALUE": 0x34, "CALLDATALOAD": 0x35,
    "CALLDATASIZE": 0x36, "CALLDATACOPY": 0x37, "CODESIZE": 0x38,
    "CODECOPY": 0x39, "RETURNDATASIZE": 0x3D, "RETURNDATACOPY": 0x3E,
    "TIMESTAMP": 0x42, "NUMBER": 0x43, "CHAINID": 0x46, "SELFBALANCE": 0x47,
    "POP": 0x50, "MLOAD": 0x51, "MSTORE": 0x52, "MSTORE8": 0x53,
    "SLOAD": 0x54, "SSTORE": 0x55, "JUMP": 0x56, "JUMPI": 0x57, "PC": 0x58,
    "MSIZE": 0x59, "GAS": 0x5A, "JUMPDEST": 0x5B,
    "CREATE": 0xF0, "CALL": 0xF1, "CALLCODE": 0xF2, "RETURN": 0xF3,
    "DELEGATECALL": 0xF4, "CREATE2": 0xF5, "STATICCALL": 0xFA,
    "REVERT": 0xFD, "INVALID": 0xFE, "SELFDESTRUCT": 0xFF,
}
for _n in range(1, 33):
    OPCODE_BYTES[f"PUSH{_n}"] = 0x60 + _n - 1
for _n in range(1, 17):
    OPCODE_BYTES[f"DUP{_n}"] = 0x80 + _n - 1
    OPCODE_BYTES[f"SWAP{_n}"] = 0x90 + _n - 1
for _n in range(5):
    OPCODE_BYTES[f"LOG{_n}"] = 0xA0 + _n

BYTE_NAMES = {v: k for k, v in OPCODE_BYTES.items()}

PUSH_BASE = 0x60


def push(value: int) -> tuple:
    if value < 0 or value >= 2**256:
        raise ValueError(f"push immediate out of range: {value}")
    return ("PUSH", value)


def pushl(name: str) -> tuple:
    return ("PUSHL", name)


def label(name: str) -> tuple:
    return ("LABEL", name)


def mark(name: str) -> tuple:
    return ("LABEL", name)


def data(blob: bytes) -> tuple:
    return ("DATA", blob)


def _immediate_size(value: int) -> int:
    return max(1, (value.bit_length() + 7) // 8)


def _item_size(item) -> int:
    if isinstance(item, str):
        if item not in OPCODE_BYTES:
            raise ValueError(f"unknown mnemonic {item!r}")
        return 1
    kind = item[0]
    if kind == "PUSH":
        return 1 + _immediate_size(item[1])
    if kind == "PUSHL":
        return 3
    if kind == "LABEL":
        return 0
    if kind == "DATA":
        return len(item[1])
    raise ValueError(f"unknown assembler item {item!r}")


def assemble(items: list) -> tuple[bytes, dict[str, int]]:
    offsets: dict[str, int] = {}
    pc = 0
    for item in items:
        if not isinstance(item, str) and item[0] == "LABEL":
            if item[1] in offsets:
                raise ValueError(f"duplicate label {item[1]!r}")
            offsets[item[1]] = pc
        pc += _item_size(item)

    out = bytearray()
    for item in items:
        if isinstance(item, str):
            out.append(OPCODE_BYTES[item])
        elif item[0] == "PUSH":
            size = _immediate_size(item[1])
            out.append(PUSH_BASE + size - 1)
            out += item[1].to_bytes(size, "big")
        elif item[0] == "PUSHL":
            if item[1] not in offsets:
                raise ValueError(f"undefined label {item[1]!r}")
            out.append(PUSH_BASE + 1)  # PUSH2
            out += offsets[item[1]].to_bytes(2, "big")
        elif item[0] == "DATA":
            out += item[1]
    return bytes(out), offsets


def jump_destinations(code: bytes) -> set[int]:
    """Offsets of JUMPDEST bytes that are real instructions, not push data."""
    dests = set()
    pc = 0
    while pc < len(code):
        byte = code[pc]
        if byte == OPCODE_BYTES["JUMPDEST"]:
            dests.add(pc)
        if PUSH_BASE <= byte <= PUSH_BASE + 31:
            pc += byte - PUSH_BASE + 1
        pc += 1
    return dests
