"""A small tracing EVM interpreter.

Executes assembled scenario contracts and records structLogs-format steps
(pre-operation state, depth starting at 1), so the generated fixtures look
like node tracer output. The gas model is a flat per-opcode table; fixture
envelopes derive gasUsed from it. Scenario bugs fail loudly: stack underflow,
bad jumps, and insufficient balances raise instead of producing a trace.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .asm import BYTE_NAMES, PUSH_BASE, jump_destinations
from .keccak import keccak256, keccak_word

MASK256 = 2**256 - 1
ADDR_MASK = 2**160 - 1
BLOCK_NUMBER = 18_000_000
TIMESTAMP = 1_700_000_000
CHAIN_ID = 1
START_GAS = 10_000_000

GAS_COSTS = {
    "SSTORE": 20000,
    "SLOAD": 2100,
    "SHA3": 36,
    "BALANCE": 100,
    "SELFBALANCE": 5,
    "CALL": 2600,
    "CALLCODE": 2600,
    "DELEGATECALL": 2600,
    "STATICCALL": 2600,
    "CREATE": 32000,
    "CREATE2": 32000,
    "SELFDESTRUCT": 5000,
    "LOG0": 375,
    "LOG1": 750,
    "LOG2": 1125,
    "LOG3": 1500,
    "LOG4": 1875,
    "JUMPDEST": 1,
    "STOP": 0,
    "RETURN": 0,
    "REVERT": 0,
    "INVALID": 0,
}


def _cost(op: str) -> int:
    return GAS_COSTS.get(op, 3)


def addr_hex(word: int) -> str:
    return "0x" + format(word & ADDR_MASK, "040x")


def pad32(value: int) -> bytes:
    return value.to_bytes(32, "big")


@dataclass
class Account:
    balance: int = 0
    code: bytes = b""
    storage: dict[int, int] = field(default_factory=dict)
    nonce: int = 0


class World:
    def __init__(self) -> None:
        self.accounts: dict[str, Account] = {}

    def account(self, addr: str) -> Account:
        addr = addr.lower()
        if addr not in self.accounts:
            self.accounts[addr] = Account()
        return self.accounts[addr]

    def snapshot(self) -> dict:
        return {
            a: (acct.balance, dict(acct.storage), acct.nonce, acct.code)
            for a, acct in self.accounts.items()
        }

    def restore(self, snap: dict) -> None:
        # In-place so Account objects held by open frames stay valid.
        for a in list(self.accounts):
            if a not in snap:
                del self.accounts[a]
        for a, (balance, storage, nonce, code) in snap.items():
            acct = self.accounts[a]
            acct.balance = balance
            acct.storage.clear()
            acct.storage.update(storage)
            acct.nonce = nonce
            acct.code = code


def _expand(memory: bytearray, end: int) -> None:
    if end > len(memory):
        memory.extend(b"\x00" * (-(-end // 32) * 32 - len(memory)))


def _mread(memory: bytearray, off: int, size: int) -> bytes:
    if size == 0:
        return b""
    _expand(memory, off + size)
    return bytes(memory[off : off + size])


def _mwrite(memory: bytearray, off: int, blob: bytes) -> None:
    if not blob:
        return
    _expand(memory, off + len(blob))
    memory[off : off + len(blob)] = blob


class MiniEvm:
    def __init__(self, world: World, origin: str):
        self.world = world
        self.origin = origin.lower()
        self.logs: list[dict] = []
        self.gas = START_GAS

    def _emit(self, pc: int, op: str, depth: int, stack: list[int], memory: bytearray, address: str) -> None:
        entry: dict = {
            "pc": pc,
            "op": op,
            "gas": self.gas,
            "gasCost": _cost(op),
            "depth": depth,
            "stack": [hex(w) for w in stack],
            "memory": [memory[i : i + 32].hex() for i in range(0, len(memory), 32)],
        }
        storage = self.world.account(address).storage
        if storage:
            entry["storage"] = {
                format(k, "064x"): format(v, "064x") for k, v in sorted(storage.items())
            }
        self.logs.append(entry)

    def _run(
        self,
        address: str,
        code: bytes,
        caller: str,
        value: int,
        data: bytes,
        static: bool,
        depth: int,
    ) -> tuple[bool, bytes]:
        if not code:
            return True, b""
        dests = jump_destinations(code)
        stack: list[int] = []
        memory = bytearray()
        ret = b""
        pc = 0
        acct = self.world.account(address)

        while True:
            if pc >= len(code):
                raise AssertionError(f"{address}: fell off code end at pc {pc}")
            byte = code[pc]
            name = BYTE_NAMES.get(byte)
            if name is None:
                raise AssertionError(f"{address}: undecodable byte {byte:#x} at pc {pc}")
            self._emit(pc, name, depth, stack, memory, address)
            self.gas -= _cost(name)
            if self.gas < 0:
                raise AssertionError("out of gas; raise START_GAS")

            if PUSH_BASE <= byte <= PUSH_BASE + 31:
                n = byte - PUSH_BASE + 1
                if pc + 1 + n > len(code):
                    raise AssertionError(f"{address}: truncated push at pc {pc}")
                stack.append(int.from_bytes(code[pc + 1 : pc + 1 + n], "big"))
                pc += 1 + n
                continue
            if 0x80 <= byte <= 0x8F:  # DUPn
                stack.append(stack[-(byte - 0x80 + 1)])
                pc += 1
                continue
            if 0x90 <= byte <= 0x9F:  # SWAPn
                n = byte - 0x90 + 1
                stack[-1], stack[-n - 1] = stack[-n - 1], stack[-1]
                pc += 1
                continue

            if name == "STOP":
                return True, b""
            if name == "RETURN":
                off, size = stack.pop(), stack.pop()
                return True, _mread(memory, off, size)
            if name == "REVERT":
                off, size = stack.pop(), stack.pop()
                return False, _mread(memory, off, size)
            if name == "INVALID":
                return False, b""
            if name == "SELFDESTRUCT":
                assert not static, "SELFDESTRUCT in static context"
                benef = addr_hex(stack.pop())
                self.world.account(benef).balance += acct.balance
                acct.balance = 0
                return True, b""

            if name in ("ADD", "MUL", "SUB", "DIV", "MOD", "EXP", "LT", "GT",
                        "SLT", "SGT", "EQ", "AND", "OR", "XOR", "SHL", "SHR"):
                a, b = stack.pop(), stack.pop()
                if name == "ADD":
                    r = (a + b) & MASK256
                elif name == "MUL":
                    r = (a * b) & MASK256
                elif name == "SUB":
                    r = (a - b) & MASK256
                elif name == "DIV":
                    r = a // b if b else 0
                elif name == "MOD":
                    r = a % b if b else 0
                elif name == "EXP":
                    r = pow(a, b, 2**256)
                elif name == "LT":
                    r = int(a < b)
                elif name == "GT":
                    r = int(a > b)
                elif name == "EQ":
                    r = int(a == b)
                elif name in ("SLT", "SGT"):
                    sa = a - 2**256 if a >> 255 else a
                    sb = b - 2**256 if b >> 255 else b
                    r = int(sa < sb) if name == "SLT" else int(sa > sb)
                elif name == "AND":
                    r = a & b
                elif name == "OR":
                    r = a | b
                elif name == "XOR":
                    r = a ^ b
                elif name == "SHL":
                    r = (b << a) & MASK256 if a < 256 else 0
                else:  # SHR
                    r = b >> a if a < 256 else 0
                stack.append(r)
            elif name == "ISZERO":
                stack.append(int(stack.pop() == 0))
            elif name == "NOT":
                stack.append(~stack.pop() & MASK256)
            elif name == "BYTE":
                i, w = stack.pop(), stack.pop()
                stack.append((w >> (8 * (31 - i))) & 0xFF if i < 32 else 0)
            elif name == "SHA3":
                off, size = stack.pop(), stack.pop()
                stack.append(keccak_word(_mread(memory, off, size)))
            elif name == "ADDRESS":
                stack.append(int(address, 16))
            elif name == "BALANCE":
                stack.append(self.world.account(addr_hex(stack.pop())).balance)
            elif name == "SELFBALANCE":
                stack.append(acct.balance)
            elif name == "ORIGIN":
                stack.append(int(self.origin, 16))
            elif name == "CALLER":
                stack.append(int(caller, 16))
            elif name == "CALLVALUE":
                stack.append(value)
            elif name == "CALLDATALOAD":
                off = stack.pop()
                chunk = data[off : off + 32]
                stack.append(int.from_bytes(chunk + b"\x00" * (32 - len(chunk)), "big"))
            elif name == "CALLDATASIZE":
                stack.append(len(data))
            elif name == "CALLDATACOPY":
                dest, off, size = stack.pop(), stack.pop(), stack.pop()
                chunk = data[off : off + size]
                _mwrite(memory, dest, chunk + b"\x00" * (size - len(chunk)))
                _expand(memory, dest + size)
            elif name == "CODESIZE":
                stack.append(len(code))
            elif name == "CODECOPY":
                dest, off, size = stack.pop(), stack.pop(), stack.pop()
                chunk = code[off : off + size]
                _mwrite(memory, dest, chunk + b"\x00" * (size - len(chunk)))
                _expand(memory, dest + size)
            elif name == "RETURNDATASIZE":
                stack.append(len(ret))
            elif name == "RETURNDATACOPY":
                dest, off, size = stack.pop(), stack.pop(), stack.pop()
                assert off + size <= len(ret), "returndata read out of range"
                _mwrite(memory, dest, ret[off : off + size])
            elif name == "NUMBER":
                stack.append(BLOCK_NUMBER)
            elif name == "TIMESTAMP":
                stack.append(TIMESTAMP)
            elif name == "CHAINID":
                stack.append(CHAIN_ID)
            elif name == "POP":
                stack.pop()
            elif name == "MLOAD":
                off = stack.pop()
                stack.append(int.from_bytes(_mread(memory, off, 32), "big"))
            elif name == "MSTORE":
                off, val = stack.pop(), stack.pop()
                _mwrite(memory, off, pad32(val))
            elif name == "MSTORE8":
                off, val = stack.pop(), stack.pop()
                _mwrite(memory, off, bytes([val & 0xFF]))
            elif name == "SLOAD":
                stack.append(acct.storage.get(stack.pop(), 0))
            elif name == "SSTORE":
                assert not static, "SSTORE in static context"
                key, val = stack.pop(), stack.pop()
                acct.storage[key] = val
            elif name == "JUMP":
                dest = stack.pop()
                assert dest in dests, f"{address}: bad jump to {dest}"
                pc = dest
                continue
            elif name == "JUMPI":
                dest, cond = stack.pop(), stack.pop()
                if cond:
                    assert dest in dests, f"{address}: bad jump to {dest}"
                    pc = dest
                    continue
            elif name == "PC":
                stack.append(pc)
            elif name == "GAS":
                stack.append(self.gas)
            elif name == "MSIZE":
                stack.append(len(memory))
            elif name == "JUMPDEST":
                pass
            elif name in ("LOG0", "LOG1", "LOG2", "LOG3", "LOG4"):
                assert not static, "LOG in static context"
                off, size = stack.pop(), stack.pop()
                for _ in range(int(name[3])):
                    stack.pop()
                _mread(memory, off, size)
            elif name in ("CALL", "CALLCODE"):
                _gas = stack.pop()
                to = addr_hex(stack.pop())
                val = stack.pop()
                aoff, alen = stack.pop(), stack.pop()
                roff, rlen = stack.pop(), stack.pop()
                assert not (static and val), "value call in static context"
                args = _mread(memory, aoff, alen)
                _expand(memory, roff + rlen)
                snap = self.world.snapshot()
                assert acct.balance >= val, f"{address}: balance below call value"
                acct.balance -= val
                self.world.account(to).balance += val
                callee_code = self.world.account(to).code
                if name == "CALL":
                    ok, rdata = self._run(to, callee_code, address, val, args, static, depth + 1)
                else:
                    ok, rdata = self._run(address, callee_code, address, val, args, static, depth + 1)
                if not ok:
                    self.world.restore(snap)
                ret = rdata
                _mwrite(memory, roff, rdata[:rlen])
                stack.append(int(ok))
            elif name == "DELEGATECALL":
                _gas = stack.pop()
                to = addr_hex(stack.pop())
                aoff, alen = stack.pop(), stack.pop()
                roff, rlen = stack.pop(), stack.pop()
                args = _mread(memory, aoff, alen)
                _expand(memory, roff + rlen)
                snap = self.world.snapshot()
                callee_code = self.world.account(to).code
                ok, rdata = self._run(address, callee_code, caller, value, args, static, depth + 1)
                if not ok:
                    self.world.restore(snap)
                ret = rdata
                _mwrite(memory, roff, rdata[:rlen])
                stack.append(int(ok))
            elif name == "STATICCALL":
                _gas = stack.pop()
                to = addr_hex(stack.pop())
                aoff, alen = stack.pop(), stack.pop()
                roff, rlen = stack.pop(), stack.pop()
                args = _mread(memory, aoff, alen)
                _expand(memory, roff + rlen)
                callee_code = self.world.account(to).code
                ok, rdata = self._run(to, callee_code, address, 0, args, True, depth + 1)
                ret = rdata
                _mwrite(memory, roff, rdata[:rlen])
                stack.append(int(ok))
            elif name == "CREATE":
                assert not static, "CREATE in static context"
                val, off, size = stack.pop(), stack.pop(), stack.pop()
                initcode = _mread(memory, off, size)
                snap = self.world.snapshot()
                assert acct.balance >= val, f"{address}: balance below create value"
                seed = bytes.fromhex(address[2:]) + acct.nonce.to_bytes(8, "big")
                new_addr = "0x" + keccak256(seed)[12:].hex()
                acct.nonce += 1
                acct.balance -= val
                self.world.account(new_addr).balance += val
                ok, rdata = self._run(new_addr, initcode, address, val, b"", static, depth + 1)
                if ok:
                    self.world.account(new_addr).code = rdata
                    ret = b""
                    stack.append(int(new_addr, 16))
                else:
                    self.world.restore(snap)
                    ret = rdata
                    stack.append(0)
            else:
                raise AssertionError(f"{address}: unimplemented opcode {name}")
            pc += 1

    def transact(
        self,
        sender: str,
        to: str,
        value: int = 0,
        data: bytes = b"",
        tx_hash: str | None = None,
    ) -> dict:
        sender = sender.lower()
        to = to.lower()
        pre_balances = {a: acct.balance for a, acct in sorted(self.world.accounts.items())}
        self.logs = []
        self.gas = START_GAS

        sender_acct = self.world.account(sender)
        assert sender_acct.balance >= value, "sender cannot cover value"
        sender_acct.balance -= value
        self.world.account(to).balance += value
        code = self.world.account(to).code
        ok, _ = self._run(to, code, sender, value, data, False, 1)
        assert ok, "root frame reverted; scenarios must keep roots successful"

        if tx_hash is None:
            tx_hash = "0x" + keccak256(data + to.encode()).hex()
        tx = {
            "txHash": tx_hash,
            "from": sender,
            "to": to,
            "value": hex(value),
            "input": "0x" + data.hex(),
            "blockNumber": BLOCK_NUMBER,
            "timestamp": TIMESTAMP,
            "gasUsed": 21000 + sum(e["gasCost"] for e in self.logs),
            "preBalances": {a: hex(v) for a, v in pre_balances.items()},
        }
        return {"tx": tx, "trace": {"structLogs": self.logs}}
