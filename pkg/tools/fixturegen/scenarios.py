"""Scenario contracts for the fixture corpus.

Each scenario is a tiny multi-contract world plus one transaction. Stack
effects are commented as [bottom, ..., top] where they are not obvious.
Expected detector counts in the manifest assume the default analyzer
configuration (economic price refinements on, everything else off).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .asm import assemble, data, label, mark, push, pushl
from .keccak import keccak_word
from .minievm import World, pad32

ETH = 10**18
TRANSFER_TOPIC = int(
    "ddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef", 16
)

EOA = "0x" + "ab" * 19 + "cd"


def caddr(tag: str) -> str:
    return "0x" + tag * 20


@dataclass
class Scenario:
    name: str
    # contract name -> (address, code items, storage, balance)
    contracts: dict[str, tuple[str, list, dict[int, int], int]]
    tx_to: str
    tx_value: int = 0
    tx_input: bytes = b""
    eoa_balance: int = 100 * ETH
    # token contract name -> {holder contract name or address: amount}
    token_balances: dict[str, dict[str, int]] = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    check: Callable[[World, dict[str, str]], None] | None = None


def _call(to_items: list, value_items: list, args_len: int) -> list:
    """CALL with args at memory[0:args_len] and no return buffer."""
    return [
        push(0), push(0), push(args_len), push(0),
        *value_items, *to_items, "GAS", "CALL",
    ]


def token_items() -> list:
    """Event-only token: transfer(to, amount) emits Transfer(caller, to, amount)."""
    return [
        push(0), "CALLDATALOAD",     # [to]
        push(32), "CALLDATALOAD",    # [to, amt]
        push(0), "MSTORE",           # mem[0] = amt; [to]
        "CALLER",                    # [to, from]
        push(TRANSFER_TOPIC),        # [to, from, sig]
        push(32), push(0),           # [to, from, sig, 32, 0]
        mark("emit_transfer"),
        "LOG3",
        "STOP",
    ]


# -- reentrancy family ----------------------------------------------------------

WITHDRAW_AMT = 10 * ETH


def foo_items(patched: bool) -> list:
    # withdraw(amount): pays caller from a per-caller storage slot.
    head = [
        "CALLER", push(0), "MSTORE",
        push(0), push(32), "MSTORE",
        push(64), push(0), "SHA3",          # [slot]
        "DUP1", "SLOAD",                    # [slot, bal]
        push(0), "CALLDATALOAD",            # [slot, bal, amt]
        "DUP1", "DUP3", "LT",               # [slot, bal, amt, bal<amt]
        "ISZERO", pushl("ok"), "JUMPI",
        push(0), push(0), "REVERT",
        label("ok"), "JUMPDEST",
    ]
    send = [
        push(0), push(0), push(0), push(0),  # [.., rl, ro, al, ao]
        "DUP5", "CALLER", "GAS", "CALL",     # value = amt, to = caller
    ]
    write = [
        "DUP1", "DUP3", "SUB",               # [slot, bal, amt, bal-amt]
        "DUP4", "SSTORE",                    # [slot, bal, amt]
    ]
    if patched:
        # Effects before interaction: the balance is zeroed ahead of the send.
        return head + [mark("write_back")] + write + send + ["POP", "STOP"]
    return head + send + [mark("write_back"), "POP", "SWAP1", "SUB", "SWAP1", "SSTORE", "STOP"]


def bar_items() -> list:
    withdraw_call = [
        push(WITHDRAW_AMT), push(0), "MSTORE",
        *_call([push(0), "SLOAD"], [push(0)], 32),
        "POP",
    ]
    return [
        "CALLDATASIZE", pushl("entry"), "JUMPI",
        mark("fallback"),
        push(2 * WITHDRAW_AMT), "SELFBALANCE", "LT",   # selfbalance < 20 eth
        pushl("reenter"), "JUMPI",
        "STOP",
        label("reenter"), "JUMPDEST",
        *withdraw_call,
        "STOP",
        label("entry"), "JUMPDEST",
        *withdraw_call,
        "STOP",
    ]


def reentrancy_attack() -> Scenario:
    foo, bar = caddr("f0"), caddr("ba")
    slot_bar = keccak_word(pad32(int(bar, 16)) + pad32(0))

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(foo).balance == 0
        assert world.account(bar).balance == 20 * ETH
        assert world.account(foo).storage[slot_bar] == 0

    return Scenario(
        name="reentrancy_attack",
        contracts={
            "foo": (foo, foo_items(patched=False), {slot_bar: WITHDRAW_AMT}, 20 * ETH),
            "bar": (bar, bar_items(), {0: int(foo, 16)}, 0),
        },
        tx_to="bar",
        tx_input=pad32(1),
        expected={
            "frames": 5,
            "reentrancy": 1,
            "fac": 1,
            "price": 0,
            "victim": foo,
            "drained_wei": 2 * WITHDRAW_AMT,
        },
        check=check,
    )


def reentrancy_patched() -> Scenario:
    foo, bar = caddr("f0"), caddr("ba")
    slot_bar = keccak_word(pad32(int(bar, 16)) + pad32(0))

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(foo).balance == 10 * ETH
        assert world.account(bar).balance == 10 * ETH
        assert world.account(foo).storage[slot_bar] == 0

    return Scenario(
        name="reentrancy_patched",
        contracts={
            "foo": (foo, foo_items(patched=True), {slot_bar: WITHDRAW_AMT}, 20 * ETH),
            "bar": (bar, bar_items(), {0: int(foo, 16)}, 0),
        },
        tx_to="bar",
        tx_input=pad32(1),
        expected={"frames": 4, "reentrancy": 0, "fac": 1, "price": 0},
        check=check,
    )


def benign_nested() -> Scenario:
    a, b, c = caddr("aa"), caddr("bb"), caddr("cc")
    a_code = [
        "CALLVALUE", pushl("go"), "JUMPI",
        push(0), push(0), "REVERT",
        label("go"), "JUMPDEST",
        *_call([push(0), "SLOAD"], [push(2 * ETH)], 0), "POP",
        "STOP",
    ]
    b_code = [
        *_call([push(0), "SLOAD"], [push(1 * ETH)], 0), "POP",
        push(7), push(1), "SSTORE",
        "STOP",
    ]

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(c).balance == 1 * ETH
        assert world.account(b).storage[1] == 7

    return Scenario(
        name="benign_nested",
        contracts={
            "a": (a, a_code, {0: int(b, 16)}, 0),
            "b": (b, b_code, {0: int(c, 16)}, 0),
            "c": (c, ["STOP"], {}, 0),
        },
        tx_to="a",
        tx_value=2 * ETH,
        expected={"frames": 3, "reentrancy": 0, "fac": 2, "price": 0},
        check=check,
    )


def mutual_recursion() -> Scenario:
    m, n = caddr("11"), caddr("22")
    code = [
        push(0), "CALLDATALOAD",            # [n]
        "DUP1", "ISZERO", pushl("done"), "JUMPI",
        push(1), "DUP2", "SUB",             # [n, n-1]
        push(0), "MSTORE",                  # [n]
        *_call([push(0), "SLOAD"], [push(1)], 32), "POP",
        label("done"), "JUMPDEST",
        "STOP",
    ]

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(m).balance == 9
        assert world.account(n).balance == 11

    return Scenario(
        name="mutual_recursion",
        contracts={
            "m": (m, code, {0: int(n, 16)}, 10),
            "n": (n, code, {0: int(m, 16)}, 10),
        },
        tx_to="m",
        tx_input=pad32(3),
        expected={"frames": 4, "reentrancy": 0, "r1": 0, "fac": 2, "price": 0},
        check=check,
    )


def delegatecall_reentrancy() -> Scenario:
    proxy, lib, atk = caddr("90"), caddr("91"), caddr("92")
    five = 5 * ETH
    proxy_code = [
        "CALLDATASIZE", push(0), push(0), "CALLDATACOPY",
        push(0), push(0), "CALLDATASIZE", push(0),
        push(0), "SLOAD", "GAS", "DELEGATECALL", "POP",
        "STOP",
    ]
    lib_code = [
        push(1), "SLOAD",                    # [bal]  (proxy slot 1)
        "DUP1", push(five), "GT",            # [bal, five>bal]
        pushl("bail"), "JUMPI",
        push(0), push(0), push(0), push(0), push(five), "CALLER", "GAS", "CALL",
        mark("write_back"), "POP",
        push(five), "DUP2", "SUB",           # [bal, bal-five]
        push(1), "SSTORE",                   # [bal]
        "STOP",
        label("bail"), "JUMPDEST", push(0), push(0), "REVERT",
    ]
    atk_code = [
        "CALLDATASIZE", pushl("start"), "JUMPI",
        push(2 * five), "SELFBALANCE", "LT", pushl("start"), "JUMPI",
        "STOP",
        label("start"), "JUMPDEST",
        *_call([push(0), "SLOAD"], [push(0)], 0), "POP",
        "STOP",
    ]

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(proxy).balance == 0
        assert world.account(atk).balance == 10 * ETH
        assert world.account(proxy).storage[1] == 0

    return Scenario(
        name="delegatecall_reentrancy",
        contracts={
            "proxy": (proxy, proxy_code, {0: int(lib, 16), 1: five}, 10 * ETH),
            "lib": (lib, lib_code, {}, 0),
            "atk": (atk, atk_code, {0: int(proxy, 16)}, 0),
        },
        tx_to="atk",
        tx_input=pad32(1),
        expected={
            "frames": 7,
            "reentrancy": 1,
            "fac": 1,
            "price": 0,
            "victim": proxy,
        },
        check=check,
    )


def create_reentrancy() -> Scenario:
    vault = caddr("93")
    five = 5 * ETH
    init_code, _ = assemble(
        [
            push(0), push(0), push(0), push(0), push(0), "CALLER", "GAS", "CALL", "POP",
            push(0), push(0), "RETURN",
        ]
    )
    vault_code = [
        push(0), "SLOAD", pushl("done"), "JUMPI",        # claimed?
        "CALLDATASIZE", "ISZERO", pushl("pay"), "JUMPI",  # constructor calls back with empty data
        push(len(init_code)), pushl("init"), push(0), "CODECOPY",
        push(len(init_code)), push(0), push(0), "CREATE", "POP",
        label("pay"), "JUMPDEST",
        push(0), push(0), push(0), push(0), push(five), "CALLER", "GAS", "CALL",
        mark("write_back"), "POP",
        push(1), push(0), "SSTORE",
        "STOP",
        label("done"), "JUMPDEST", "STOP",
        label("init"), data(init_code),
    ]

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(vault).balance == 10 * ETH
        assert world.account(vault).storage[0] == 1

    return Scenario(
        name="create_reentrancy",
        contracts={"vault": (vault, vault_code, {}, 20 * ETH)},
        tx_to="vault",
        tx_input=pad32(1),
        expected={
            "frames": 5,
            "reentrancy": 1,
            "fac": 2,
            "price": 0,
            "victim": vault,
        },
        check=check,
    )


def reentrancy_no_asset_flow() -> Scenario:
    mgr, vault = caddr("94"), caddr("95")
    vault_code = [
        push(0), "SLOAD", pushl("claimed"), "JUMPI",
        *_call([push(1), "SLOAD"], [push(0)], 0),        # notify manager
        mark("write_back"), "POP",
        push(1), push(0), "SSTORE",
        "STOP",
        label("claimed"), "JUMPDEST", "STOP",
    ]
    mgr_code = [
        "CALLDATASIZE", pushl("first"), "JUMPI",
        push(0), "SLOAD", pushl("halt"), "JUMPI",
        push(1), push(0), "SSTORE",
        label("first"), "JUMPDEST",
        push(0), push(0), "MSTORE",
        *_call([push(1), "SLOAD"], [push(0)], 32), "POP",
        "STOP",
        label("halt"), "JUMPDEST", "STOP",
    ]

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(vault).storage[0] == 1
        assert world.account(mgr).storage[0] == 1

    return Scenario(
        name="reentrancy_no_asset_flow",
        contracts={
            "mgr": (mgr, mgr_code, {1: int(vault, 16)}, 0),
            "vault": (vault, vault_code, {1: int(mgr, 16)}, 0),
        },
        tx_to="mgr",
        tx_input=pad32(1),
        expected={
            "frames": 5,
            "reentrancy": 0,
            "r1": 1,
            "fac": 0,
            "price": 0,
            "victim": vault,
        },
        check=check,
    )


# -- access control family -------------------------------------------------------


def pool_fac_items(guarded: bool) -> list:
    body = [
        push(0), "SLOAD",                                # [lp]
        "DUP1", "ISZERO", pushl("bail"), "JUMPI",
        mark("transfer_block"),
        push(0), "CALLDATALOAD", push(0), "MSTORE",      # mem[0] = to
        "DUP1", push(32), "MSTORE",                      # mem[32] = lp
        *_call([push(1), "SLOAD"], [push(0)], 64), "POP",
        "STOP",
        label("bail"), "JUMPDEST", push(0), push(0), "REVERT",
    ]
    if not guarded:
        return body
    return [
        "ORIGIN", push(2), "SLOAD", "EQ", pushl("go"), "JUMPI",
        push(0), push(0), "REVERT",
        label("go"), "JUMPDEST",
        *body,
    ]


def fac_unguarded() -> Scenario:
    pool, token = caddr("96"), caddr("97")
    return Scenario(
        name="fac_unguarded",
        contracts={
            "pool": (pool, pool_fac_items(guarded=False), {0: 1000, 1: int(token, 16)}, 0),
            "token": (token, token_items(), {}, 0),
        },
        tx_to="pool",
        tx_input=pad32(int(EOA, 16)),
        expected={"frames": 2, "reentrancy": 0, "fac": 1, "price": 0, "victim": pool},
    )


def fac_guarded() -> Scenario:
    pool, token = caddr("96"), caddr("97")
    return Scenario(
        name="fac_guarded",
        contracts={
            "pool": (
                pool,
                pool_fac_items(guarded=True),
                {0: 1000, 1: int(token, 16), 2: int(EOA, 16)},
                0,
            ),
            "token": (token, token_items(), {}, 0),
        },
        tx_to="pool",
        tx_input=pad32(int(EOA, 16)),
        expected={"frames": 2, "reentrancy": 0, "fac": 0, "price": 0},
    )


def fac_fixed_recipient() -> Scenario:
    hold, token, payee = caddr("98"), caddr("97"), caddr("99")
    hold_code = [
        push(3), "SLOAD",                    # [to]
        push(0), "MSTORE",                   # mem[0] = to
        push(4), "SLOAD",                    # [amt]
        "DUP1", "ISZERO", pushl("bail"), "JUMPI",
        mark("transfer_block"),
        push(32), "MSTORE",                  # mem[32] = amt
        *_call([push(1), "SLOAD"], [push(0)], 64), "POP",
        "STOP",
        label("bail"), "JUMPDEST", push(0), push(0), "REVERT",
    ]
    return Scenario(
        name="fac_fixed_recipient",
        contracts={
            "hold": (hold, hold_code, {1: int(token, 16), 3: int(payee, 16), 4: 750}, 0),
            "token": (token, token_items(), {}, 0),
        },
        tx_to="hold",
        expected={"frames": 2, "reentrancy": 0, "fac": 1, "price": 0, "a2_fac": 0},
    )


# -- price manipulation family ----------------------------------------------------


def _amm_contracts() -> dict[str, tuple[str, list, dict[int, int], int]]:
    atk, pool = caddr("61"), caddr("62")
    tokx, toky = caddr("63"), caddr("64")
    atk_code = [
        # tokx.transfer(pool, amountIn)
        push(2), "SLOAD", push(0), "MSTORE",
        push(0), "CALLDATALOAD", push(32), "MSTORE",
        *_call([push(0), "SLOAD"], [push(0)], 64), "POP",
        # pool.swap(1, amountIn)
        push(1), push(0), "MSTORE",
        push(0), "CALLDATALOAD", push(32), "MSTORE",
        *_call([push(2), "SLOAD"], [push(0)], 64), "POP",
        # pool.drain(2)
        push(2), push(0), "MSTORE",
        *_call([push(2), "SLOAD"], [push(0)], 32), "POP",
        "STOP",
    ]
    pool_code = [
        push(0), "CALLDATALOAD",                       # [mode]
        push(1), "DUP2", "EQ", pushl("swap"), "JUMPI",
        push(2), "DUP2", "EQ", pushl("drain"), "JUMPI",
        "STOP",
        label("swap"), "JUMPDEST", "POP",
        push(32), "CALLDATALOAD",                      # [amtIn]
        "DUP1", "ISZERO", pushl("bail"), "JUMPI",
        mark("reserve_write"),
        push(0), "SLOAD", "ADD",                       # [reserve+amtIn]
        push(0), "SSTORE",
        "STOP",
        label("drain"), "JUMPDEST", "POP",
        push(0), "SLOAD",                              # [reserve]
        "DUP1", push(100), "LT", pushl("payout"), "JUMPI",
        push(0), push(0), "REVERT",
        label("payout"), "JUMPDEST",
        "CALLER", push(0), "MSTORE",                   # [reserve]
        push(32), "MSTORE",                            # mem[32] = reserve
        *_call([push(2), "SLOAD"], [push(0)], 64), "POP",
        "STOP",
        label("bail"), "JUMPDEST", push(0), push(0), "REVERT",
    ]
    return {
        "atk": (atk, atk_code, {0: int(tokx, 16), 2: int(pool, 16)}, 0),
        "pool": (pool, pool_code, {0: 10000, 2: int(toky, 16)}, 0),
        "tok_x": (tokx, token_items(), {}, 0),
        "tok_y": (toky, token_items(), {}, 0),
    }


def price_pump() -> Scenario:
    contracts = _amm_contracts()
    return Scenario(
        name="price_pump",
        contracts=contracts,
        tx_to="atk",
        tx_input=pad32(9900),
        token_balances={
            "tok_x": {"atk": 10000, "pool": 10000},
            "tok_y": {"atk": 50000, "pool": 50000},
        },
        expected={
            "frames": 5,
            "reentrancy": 0,
            "fac": 2,
            "price": 2,
            "pool_victim": contracts["pool"][0],
            "amount_in": 9900,
            "amount_out": 19900,
        },
    )


def price_small_shift() -> Scenario:
    contracts = _amm_contracts()
    return Scenario(
        name="price_small_shift",
        contracts=contracts,
        tx_to="atk",
        tx_input=pad32(100),
        token_balances={
            "tok_x": {"atk": 10000, "pool": 10000},
            "tok_y": {"atk": 50000, "pool": 50000},
        },
        expected={
            "frames": 5,
            "reentrancy": 0,
            "fac": 2,
            "price": 0,
            "amount_in": 100,
            "amount_out": 10100,
        },
    )


def price_origin_guarded() -> Scenario:
    mgr, pool, toky = caddr("65"), caddr("66"), caddr("67")
    mgr_code = [
        push(0), "CALLDATALOAD", push(32), "MSTORE",   # mem[32] = amount
        push(1), push(0), "MSTORE",                    # pool.set(amount)
        *_call([push(0), "SLOAD"], [push(0)], 64), "POP",
        push(2), push(0), "MSTORE",                    # pool.pay()
        *_call([push(0), "SLOAD"], [push(0)], 32), "POP",
        "STOP",
    ]
    pool_code = [
        push(0), "CALLDATALOAD",
        push(1), "DUP2", "EQ", pushl("set"), "JUMPI",
        push(2), "DUP2", "EQ", pushl("pay"), "JUMPI",
        "STOP",
        label("set"), "JUMPDEST", "POP",
        "ORIGIN", push(3), "SLOAD", "EQ", pushl("auth"), "JUMPI",
        push(0), push(0), "REVERT",
        label("auth"), "JUMPDEST",
        mark("reserve_write"),
        push(32), "CALLDATALOAD", push(0), "SSTORE",
        "STOP",
        label("pay"), "JUMPDEST", "POP",
        push(0), "SLOAD",                              # [reserve]
        "DUP1", push(100), "LT", pushl("payout"), "JUMPI",
        push(0), push(0), "REVERT",
        label("payout"), "JUMPDEST",
        "CALLER", push(0), "MSTORE",
        push(32), "MSTORE",
        *_call([push(2), "SLOAD"], [push(0)], 64), "POP",
        "STOP",
    ]
    return Scenario(
        name="price_origin_guarded",
        contracts={
            "mgr": (mgr, mgr_code, {0: int(pool, 16)}, 0),
            "pool": (pool, pool_code, {0: 500, 2: int(toky, 16), 3: int(EOA, 16)}, 0),
            "tok_y": (toky, token_items(), {}, 0),
        },
        tx_to="mgr",
        tx_input=pad32(5000),
        token_balances={"tok_y": {"pool": 50000}},
        expected={"frames": 4, "reentrancy": 0, "fac": 1, "price": 0},
    )


# -- structural and bookkeeping fixtures -------------------------------------------


def empty_transfer() -> Scenario:
    recipient = caddr("68")

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(recipient).balance == 3 * ETH

    return Scenario(
        name="empty_transfer",
        contracts={"recipient": (recipient, [], {}, 0)},
        tx_to="recipient",
        tx_value=3 * ETH,
        expected={"frames": 1, "reentrancy": 0, "fac": 0, "price": 0, "root_flow_wei": 3 * ETH},
        check=check,
    )


def selfdestruct_sweep() -> Scenario:
    kamikaze = caddr("69")

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(kamikaze).balance == 0

    return Scenario(
        name="selfdestruct_sweep",
        contracts={"kamikaze": (kamikaze, ["CALLER", "SELFDESTRUCT"], {}, 5 * ETH)},
        tx_to="kamikaze",
        expected={"frames": 2, "reentrancy": 0, "fac": 1, "price": 0, "swept_wei": 5 * ETH},
        check=check,
    )


def call_revert() -> Scenario:
    c, d = caddr("6a"), caddr("6b")
    c_code = [
        *_call([push(0), "SLOAD"], [push(1 * ETH)], 0), "POP",
        mark("late_write"),
        push(7), push(1), "SSTORE",
        "STOP",
    ]
    d_code = [push(99), push(0), "SSTORE", push(0), push(0), "REVERT"]

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(c).balance == 2 * ETH
        assert world.account(d).balance == 0
        assert 0 not in world.account(d).storage or world.account(d).storage[0] == 0

    return Scenario(
        name="call_revert",
        contracts={
            "c": (c, c_code, {0: int(d, 16)}, 2 * ETH),
            "d": (d, d_code, {}, 0),
        },
        tx_to="c",
        expected={"frames": 2, "reentrancy": 0, "fac": 0, "price": 0},
        check=check,
    )


def dataflow_vault() -> Scenario:
    df, sink = caddr("6c"), caddr("6d")
    df_code = [
        "SELFBALANCE", push(0), "SSTORE",      # totalBalance = self.balance
        "CALLER", push(0), "MSTORE",
        push(1), push(32), "MSTORE",
        push(64), push(0), "SHA3",             # [slot]
        "DUP1", "SLOAD",                       # [slot, cur]
        "CALLVALUE", "ADD",                    # [slot, cur+value]
        "SWAP1", "SSTORE",                     # balances[caller] += msg.value
        push(0), "SLOAD", push(0), "MSTORE",   # arg = totalBalance
        *_call([push(2), "SLOAD"], [push(0)], 32), "POP",
        "STOP",
    ]
    sink_code = [push(0), "CALLDATALOAD", push(0), "SSTORE", "STOP"]
    slot_eoa = keccak_word(pad32(int(EOA, 16)) + pad32(1))

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(df).storage[0] == 10 * ETH
        assert world.account(df).storage[slot_eoa] == 7 * ETH
        assert world.account(sink).storage[0] == 10 * ETH

    return Scenario(
        name="dataflow_vault",
        contracts={
            "df": (df, df_code, {2: int(sink, 16)}, 3 * ETH),
            "sink": (sink, sink_code, {}, 0),
        },
        tx_to="df",
        tx_value=7 * ETH,
        expected={"frames": 2, "reentrancy": 0, "fac": 0, "price": 0},
        check=check,
    )


def loop_blocks() -> Scenario:
    w = caddr("6e")
    w_code = [
        push(3),                       # [i]
        label("loop"), "JUMPDEST",
        push(1), "DUP2", "SUB",        # [i, i-1]
        "SWAP1", "POP",                # [i-1]
        "DUP1", pushl("loop"), "JUMPI",
        "STOP",
    ]
    return Scenario(
        name="loop_blocks",
        contracts={"w": (w, w_code, {}, 0)},
        tx_to="w",
        expected={"frames": 1, "reentrancy": 0, "fac": 0, "price": 0, "loop_visits": 2},
    )


def parallel_calls() -> Scenario:
    c2, d2 = caddr("6f"), caddr("70")
    c2_code = [
        *_call([push(0), "SLOAD"], [push(1)], 0), "POP",
        *_call([push(0), "SLOAD"], [push(2)], 0), "POP",
        "STOP",
    ]

    def check(world: World, addrs: dict[str, str]) -> None:
        assert world.account(d2).balance == 3

    return Scenario(
        name="parallel_calls",
        contracts={
            "c2": (c2, c2_code, {0: int(d2, 16)}, 3),
            "d2": (d2, ["STOP"], {}, 0),
        },
        tx_to="c2",
        expected={"frames": 3, "reentrancy": 0, "fac": 2, "price": 0},
        check=check,
    )


def all_scenarios() -> list[Scenario]:
    return [
        reentrancy_attack(),
        reentrancy_patched(),
        benign_nested(),
        mutual_recursion(),
        delegatecall_reentrancy(),
        create_reentrancy(),
        reentrancy_no_asset_flow(),
        fac_unguarded(),
        fac_guarded(),
        fac_fixed_recipient(),
        price_pump(),
        price_small_shift(),
        price_origin_guarded(),
        empty_transfer(),
        selfdestruct_sweep(),
        call_revert(),
        dataflow_vault(),
        loop_blocks(),
        parallel_calls(),
    ]
