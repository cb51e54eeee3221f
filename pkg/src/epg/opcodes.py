"""Opcode metadata: stack arity and classification sets.

The replay machinery never executes opcodes; it only needs to know how many
words each one pops and pushes, which ones open call frames, and which ones
terminate a frame.
"""
from __future__ import annotations

# name -> (pops, pushes)
_ARITY: dict[str, tuple[int, int]] = {
    "STOP": (0, 0),
    "ADD": (2, 1),
    "MUL": (2, 1),
    "SUB": (2, 1),
    "DIV": (2, 1),
    "SDIV": (2, 1),
    "MOD": (2, 1),
    "SMOD": (2, 1),
    "ADDMOD": (3, 1),
    "MULMOD": (3, 1),
    "EXP": (2, 1),
    "SIGNEXTEND": (2, 1),
    "LT": (2, 1),
    "GT": (2, 1),
    "SLT": (2, 1),
    "SGT": (2, 1),
    "EQ": (2, 1),
    "ISZERO": (1, 1),
    "AND": (2, 1),
    "OR": (2, 1),
    "XOR": (2, 1),
    "NOT": (1, 1),
    "BYTE": (2, 1),
    "SHL": (2, 1),
    "SHR": (2, 1),
    "SAR": (2, 1),
    "SHA3": (2, 1),
    "KECCAK256": (2, 1),
    "ADDRESS": (0, 1),
    "BALANCE": (1, 1),
    "ORIGIN": (0, 1),
    "CALLER": (0, 1),
    "CALLVALUE": (0, 1),
    "CALLDATALOAD": (1, 1),
    "CALLDATASIZE": (0, 1),
    "CALLDATACOPY": (3, 0),
    "CODESIZE": (0, 1),
    "CODECOPY": (3, 0),
    "GASPRICE": (0, 1),
    "EXTCODESIZE": (1, 1),
    "EXTCODECOPY": (4, 0),
    "RETURNDATASIZE": (0, 1),
    "RETURNDATACOPY": (3, 0),
    "EXTCODEHASH": (1, 1),
    "BLOCKHASH": (1, 1),
    "COINBASE": (0, 1),
    "TIMESTAMP": (0, 1),
    "NUMBER": (0, 1),
    "DIFFICULTY": (0, 1),
    "PREVRANDAO": (0, 1),
    "GASLIMIT": (0, 1),
    "CHAINID": (0, 1),
    "SELFBALANCE": (0, 1),
    "BASEFEE": (0, 1),
    "BLOBHASH": (1, 1),
    "BLOBBASEFEE": (0, 1),
    "POP": (1, 0),
    "MLOAD": (1, 1),
    "MSTORE": (2, 0),
    "MSTORE8": (2, 0),
    "SLOAD": (1, 1),
    "SSTORE": (2, 0),
    "JUMP": (1, 0),
    "JUMPI": (2, 0),
    "PC": (0, 1),
    "MSIZE": (0, 1),
    "GAS": (0, 1),
    "JUMPDEST": (0, 0),
    "TLOAD": (1, 1),
    "TSTORE": (2, 0),
    "MCOPY": (3, 0),
    "PUSH0": (0, 1),
    "CREATE": (3, 1),
    "CALL": (7, 1),
    "CALLCODE": (7, 1),
    "RETURN": (2, 0),
    "DELEGATECALL": (6, 1),
    "CREATE2": (4, 1),
    "STATICCALL": (6, 1),
    "REVERT": (2, 0),
    "INVALID": (0, 0),
    "SELFDESTRUCT": (1, 0),
}

for _n in range(1, 33):
    _ARITY[f"PUSH{_n}"] = (0, 1)
for _n in range(1, 17):
    # DUPn peeks at depth n and pushes a copy; SWAPn exchanges in place.
    _ARITY[f"DUP{_n}"] = (_n, _n + 1)
    _ARITY[f"SWAP{_n}"] = (_n + 1, _n + 1)
for _n in range(5):
    _ARITY[f"LOG{_n}"] = (2 + _n, 0)


def arity(op: str) -> tuple[int, int]:
    """Return (pops, pushes) for an opcode name. KeyError for unknown names."""
    return _ARITY[op]


def is_known(op: str) -> bool:
    return op in _ARITY


def is_push(op: str) -> bool:
    return op == "PUSH0" or (op.startswith("PUSH") and op[4:].isdigit())


def is_dup(op: str) -> bool:
    return op.startswith("DUP") and op[3:].isdigit()


def is_swap(op: str) -> bool:
    return op.startswith("SWAP") and op[4:].isdigit()


def is_log(op: str) -> bool:
    return op.startswith("LOG") and op[3:].isdigit()


# Opcodes that open a child frame (the step after them may sit one level deeper).
FRAME_OPENERS = frozenset(
    {"CALL", "CALLCODE", "DELEGATECALL", "STATICCALL", "CREATE", "CREATE2"}
)

# The full call-transfer alphabet: frame openers plus SELFDESTRUCT, which
# produces a leaf frame toward the beneficiary without going deeper.
CALL_ALPHABET = frozenset(FRAME_OPENERS | {"SELFDESTRUCT"})

# Opcodes that end the current frame.
TERMINALS = frozenset({"STOP", "RETURN", "REVERT", "SELFDESTRUCT", "INVALID"})

# Frame openers that can move ETH from caller to callee.
VALUE_TRANSFER_OPENERS = frozenset({"CALL", "CREATE", "CREATE2"})
