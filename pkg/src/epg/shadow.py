"""Shadow replay: data provenance tags, state versions, and asset flows.

Runs alongside the recorded steps as an Observer and mirrors the machine
at the level of provenance rather than values. Every stack slot, memory
byte, storage slot, and account balance carries a tag: a frozenset of
SourceRef, each naming a data source at a specific version. Loads flatten:
reading a stateful source pushes the source itself plus the tags its
current value was written with, so provenance survives round trips
through storage, memory, calldata, and return data.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import MalformedLog, SchemaViolation, ShadowDesync
from .opcodes import (
    VALUE_TRANSFER_OPENERS,
    arity,
    is_dup,
    is_known,
    is_log,
    is_push,
    is_swap,
)
from .trace import (
    CallFrame,
    FrameTree,
    Observer,
    OpStep,
    TransactionEnvelope,
    address_of_word,
    read_memory,
)

_ADDRESS_RE = re.compile(r"0x[0-9a-fA-F]{40}")

Tag = frozenset
EMPTY_TAG: Tag = frozenset()

# keccak256("Transfer(address,address,uint256)"), the fungible-token event id
TRANSFER_TOPIC = int(
    "ddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef", 16
)

WRITABLE_KINDS = ("Storage", "Balance")


@dataclass(frozen=True, order=True)
class SourceRef:
    """One data source at one version. Contextual sources stay at version 0."""

    kind: str
    key: tuple
    version: int = 0

    @property
    def identifier(self) -> tuple[str, tuple]:
        return (self.kind, self.key)

    def at(self, version: int) -> "SourceRef":
        return SourceRef(self.kind, self.key, version)

    def describe(self) -> str:
        inner = ", ".join(
            hex(part) if isinstance(part, int) else str(part) for part in self.key
        )
        return f"{self.kind}({inner})@{self.version}"


def storage_ref(address: str, slot: int, version: int = 0) -> SourceRef:
    return SourceRef("Storage", (address, slot), version)


def balance_ref(address: str, version: int = 0) -> SourceRef:
    return SourceRef("Balance", (address,), version)


def calldata_ref(frame_id: int) -> SourceRef:
    return SourceRef("CallData", (frame_id,))


def callvalue_ref(frame_id: int) -> SourceRef:
    return SourceRef("CallValue", (frame_id,))


def caller_ref(frame_id: int) -> SourceRef:
    return SourceRef("Caller", (frame_id,))


def returndata_ref(frame_id: int) -> SourceRef:
    return SourceRef("ReturnData", (frame_id,))


def chain_context_ref(name: str) -> SourceRef:
    return SourceRef("ChainContext", (name,))


ORIGIN_REF = SourceRef("Origin", ())
BLOCK_NUMBER_REF = SourceRef("BlockNumber", ())
TIMESTAMP_REF = SourceRef("Timestamp", ())


@dataclass
class WriteRecord:
    """A committed write of one new version of a stateful source.

    frame_id owns the write for block attribution. effect_frame is the
    frame whose revert undoes the write; it differs from frame_id for
    the balance movements of a call, which execute in the caller's block
    but are rolled back with the callee.
    """

    frame_id: int
    step_index: int
    ref: SourceRef
    value: int
    tags: Tag
    effect_frame: int = -1

    def __post_init__(self) -> None:
        if self.effect_frame < 0:
            self.effect_frame = self.frame_id


@dataclass
class BranchRecord:
    """A conditional jump and the provenance of its condition."""

    frame_id: int
    step_index: int
    pc: int
    tags: Tag


@dataclass
class AssetFlow:
    """An asset movement carried by the call edge of frame `frame_id`."""

    asset: str  # "ETH" or the token contract address
    src: str
    dst: str
    amount: int
    frame_id: int
    step_index: int  # step of the initiating opcode, -1 for the root transfer
    to_tags: Tag = EMPTY_TAG
    amount_tags: Tag = EMPTY_TAG


@dataclass
class ShadowResult:
    """Provenance records with reverted subtrees filtered out."""

    writes: list[WriteRecord]
    branches: list[BranchRecord]
    flows: list[AssetFlow]
    observed: dict[SourceRef, object]
    versions: dict[tuple[str, tuple], int]


# Opcodes whose result is a pure function of their stack operands.
_UNION_OPS = frozenset(
    {
        "ADD", "MUL", "SUB", "DIV", "SDIV", "MOD", "SMOD", "ADDMOD", "MULMOD",
        "EXP", "SIGNEXTEND", "LT", "GT", "SLT", "SGT", "EQ", "ISZERO",
        "AND", "OR", "XOR", "NOT", "BYTE", "SHL", "SHR", "SAR",
    }
)

# Machine facts about the executing frame itself, not data provenance.
_BLANK_OPS = frozenset({"ADDRESS", "CODESIZE", "PC", "GAS", "MSIZE"})

# Environment beyond the transaction: tagged as named chain context.
_CHAIN_OPS = frozenset(
    {
        "COINBASE", "CHAINID", "BLOCKHASH", "GASPRICE", "BASEFEE", "GASLIMIT",
        "DIFFICULTY", "PREVRANDAO", "EXTCODESIZE", "EXTCODEHASH",
        "BLOBHASH", "BLOBBASEFEE",
    }
)


def load_allowlist(path: str) -> set[str]:
    """Read a token allowlist: one 0x-address per line, blanks ignored."""
    out: set[str] = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if not _ADDRESS_RE.fullmatch(line):
                raise SchemaViolation(f"{path}:{lineno}: not an address: {line!r}")
            out.add(line.lower())
    return out


@dataclass
class _Output:
    """Tags of a frame's return buffer: per-byte where known, else blanket."""

    blanket: Tag = EMPTY_TAG
    by_byte: dict[int, Tag] = field(default_factory=dict)


@dataclass
class _ShadowFrame:
    frame: CallFrame
    stack: list[Tag] = field(default_factory=list)
    memory: dict[int, Tag] = field(default_factory=dict)
    calldata: dict[int, Tag] = field(default_factory=dict)
    ret_site: tuple[int, int] | None = None  # writeback span in the parent
    last_child: int | None = None
    snapshot: tuple | None = None


class FlowTracker(Observer):
    """Observer that shadows one transaction replay.

    allowlist restricts which contracts count as tokens when their
    Transfer events are turned into asset flows; None accepts all.
    """

    def __init__(
        self,
        envelope: TransactionEnvelope,
        tree: FrameTree,
        allowlist: set[str] | None = None,
    ):
        self.envelope = envelope
        self.tree = tree
        self.allowlist = allowlist

        self._storage_tags: dict[str, dict[int, Tag]] = {}
        self._storage_version: dict[tuple[str, int], int] = {}
        self._balances: dict[str, int] = dict(envelope.pre_balances)
        self._balance_tags: dict[str, Tag] = {}
        self._balance_version: dict[str, int] = {}

        self._writes: list[WriteRecord] = []
        self._branches: list[BranchRecord] = []
        self._flows: list[AssetFlow] = []
        self._loads: list[tuple[int, SourceRef, object]] = []

        self._active: list[_ShadowFrame] = []
        self._by_id: dict[int, _ShadowFrame] = {}
        self._outputs: dict[int, _Output] = {}
        self._pending_child: dict | None = None
        self._pending_load: tuple[_ShadowFrame, SourceRef] | None = None

    # -- bookkeeping helpers ------------------------------------------------

    def _observe(self, step_index: int, ref: SourceRef, value: object) -> None:
        self._loads.append((step_index, ref, value))

    def _snapshot(self) -> tuple:
        return (
            {addr: dict(slots) for addr, slots in self._storage_tags.items()},
            dict(self._storage_version),
            dict(self._balances),
            dict(self._balance_tags),
            dict(self._balance_version),
        )

    def _restore(self, snap: tuple) -> None:
        (
            self._storage_tags,
            self._storage_version,
            self._balances,
            self._balance_tags,
            self._balance_version,
        ) = snap

    def _commit_write(
        self,
        frame_id: int,
        step_index: int,
        ref_v0: SourceRef,
        value: int,
        tags: Tag,
        effect_frame: int = -1,
    ) -> SourceRef:
        if ref_v0.kind == "Storage":
            version = self._storage_version.get(ref_v0.key, 0) + 1
            self._storage_version[ref_v0.key] = version
            address, slot = ref_v0.key
            self._storage_tags.setdefault(address, {})[slot] = tags
        else:
            (address,) = ref_v0.key
            version = self._balance_version.get(address, 0) + 1
            self._balance_version[address] = version
            self._balance_tags[address] = tags
        ref = ref_v0.at(version)
        self._writes.append(
            WriteRecord(frame_id, step_index, ref, value, tags, effect_frame)
        )
        return ref

    def _move_value(
        self,
        frame_id: int,
        step_index: int,
        effect_frame: int,
        src: str,
        dst: str,
        amount: int,
        extra_tags: Tag,
    ) -> None:
        # Both balance writes depend on the old balance, the moved amount's
        # provenance, and the value attached to the new frame.
        for addr, delta in ((src, -amount), (dst, amount)):
            old = self._balances.get(addr, 0)
            tags = self._balance_tags.get(addr, EMPTY_TAG) | extra_tags
            self._balances[addr] = old + delta
            self._commit_write(
                frame_id, step_index, balance_ref(addr), old + delta, tags,
                effect_frame,
            )

    def _memory_span(self, sf: _ShadowFrame, offset: int, size: int) -> Tag:
        tags = EMPTY_TAG
        for i in range(offset, offset + size):
            tags = tags | sf.memory.get(i, EMPTY_TAG)
        return tags

    def _set_memory(self, sf: _ShadowFrame, offset: int, size: int, tags: Tag) -> None:
        for i in range(offset, offset + size):
            if tags:
                sf.memory[i] = tags
            elif i in sf.memory:
                del sf.memory[i]

    # -- observer hooks -----------------------------------------------------

    def on_frame_enter(self, frame: CallFrame) -> None:
        if frame.parent_id is None:
            sf = _ShadowFrame(frame=frame)
            sf.snapshot = self._snapshot()
            self._active.append(sf)
            self._by_id[frame.frame_id] = sf
            value = self.envelope.value
            if value:
                # The root deposit precedes every block, so it cannot own a
                # write; it folds into the ledger so later balance loads
                # surface CallValue(root) through flattening.
                tag = frozenset({callvalue_ref(frame.frame_id)})
                for addr, delta in ((frame.caller, -value), (frame.address, value)):
                    self._balances[addr] = self._balances.get(addr, 0) + delta
                    self._balance_tags[addr] = (
                        self._balance_tags.get(addr, EMPTY_TAG) | tag
                    )
                self._flows.append(
                    AssetFlow(
                        asset="ETH",
                        src=frame.caller,
                        dst=frame.address,
                        amount=value,
                        frame_id=frame.frame_id,
                        step_index=-1,
                    )
                )
            return

        pending = self._pending_child
        self._pending_child = None
        if pending is None:
            raise ShadowDesync(
                f"frame {frame.frame_id} entered without a pending call"
            )
        parent = self._active[-1]
        sf = _ShadowFrame(
            frame=frame,
            calldata=pending["calldata"],
            ret_site=pending["ret_site"],
        )
        sf.snapshot = self._snapshot()
        self._active.append(sf)
        self._by_id[frame.frame_id] = sf

        step_index = pending["step_index"]
        if frame.opcode == "SELFDESTRUCT":
            amount = self._balances.get(frame.caller, 0)
            amount_tags = self._balance_tags.get(frame.caller, EMPTY_TAG)
            if amount > 0:
                extra = frozenset({callvalue_ref(frame.frame_id)}) | amount_tags
                self._move_value(
                    parent.frame.frame_id, step_index, frame.frame_id,
                    frame.caller, frame.callee, amount, extra,
                )
                self._flows.append(
                    AssetFlow(
                        asset="ETH",
                        src=frame.caller,
                        dst=frame.callee,
                        amount=amount,
                        frame_id=frame.frame_id,
                        step_index=step_index,
                        to_tags=pending["to_tags"],
                        amount_tags=amount_tags,
                    )
                )
        elif frame.opcode in VALUE_TRANSFER_OPENERS and frame.call_value > 0:
            extra = frozenset({callvalue_ref(frame.frame_id)}) | pending["value_tags"]
            self._move_value(
                parent.frame.frame_id, step_index, frame.frame_id,
                frame.caller, frame.address, frame.call_value, extra,
            )
            self._flows.append(
                AssetFlow(
                    asset="ETH",
                    src=frame.caller,
                    dst=frame.address,
                    amount=frame.call_value,
                    frame_id=frame.frame_id,
                    step_index=step_index,
                    to_tags=pending["to_tags"],
                    amount_tags=pending["value_tags"],
                )
            )

    def on_frame_exit(self, frame: CallFrame) -> None:
        sf = self._active.pop()
        if sf.frame.frame_id != frame.frame_id:
            raise ShadowDesync(f"frame exit order broken at frame {frame.frame_id}")

        if frame.step_range is None and frame.opcode != "SELFDESTRUCT":
            # Codeless callee: anything it returns derives from its input.
            blanket = EMPTY_TAG
            for tags in sf.calldata.values():
                blanket = blanket | tags
            self._outputs[frame.frame_id] = _Output(blanket=blanket)
        self._outputs.setdefault(frame.frame_id, _Output())
        self._observe(-1, returndata_ref(frame.frame_id), "0x" + frame.output.hex())

        if frame.reverted:
            self._restore(sf.snapshot)

        if not self._active:
            return
        parent = self._active[-1]
        parent.last_child = frame.frame_id
        if sf.ret_site is not None:
            ret_off, ret_len = sf.ret_site
            copied = min(ret_len, len(frame.output))
            if copied:
                out = self._outputs[frame.frame_id]
                child_tag = frozenset({returndata_ref(frame.frame_id)})
                for i in range(copied):
                    parent.memory[ret_off + i] = (
                        child_tag | out.blanket | out.by_byte.get(i, EMPTY_TAG)
                    )

    def on_step(self, step_index: int, step: OpStep, frame: CallFrame) -> None:
        sf = self._active[-1]
        if frame.frame_id != sf.frame.frame_id:
            raise ShadowDesync(
                f"structLogs[{step_index}]: executing frame {frame.frame_id} "
                f"but shadow frame {sf.frame.frame_id} is active"
            )
        stack = sf.stack
        if len(stack) != len(step.stack):
            raise ShadowDesync(
                f"structLogs[{step_index}]: shadow stack depth {len(stack)} "
                f"differs from recorded depth {len(step.stack)}"
            )
        if self._pending_load is not None:
            owner, ref = self._pending_load
            self._pending_load = None
            if owner is sf and step.stack:
                self._observe(step_index, ref, step.stack[-1])

        op = step.op

        def operand(pos: int) -> int:
            return step.stack[-1 - pos]

        def pop(n: int) -> list[Tag]:
            if n == 0:
                return []
            taken = stack[-n:]
            del stack[-n:]
            return list(reversed(taken))  # index 0 = top of stack

        if is_push(op):
            stack.append(EMPTY_TAG)
        elif is_dup(op):
            n = int(op[3:])
            stack.append(stack[-n])
        elif is_swap(op):
            n = int(op[4:])
            stack[-1], stack[-n - 1] = stack[-n - 1], stack[-1]
        elif op == "POP":
            pop(1)
        elif op in _UNION_OPS:
            args = pop(arity(op)[0])
            stack.append(frozenset().union(*args) if args else EMPTY_TAG)
        elif op in ("SHA3", "KECCAK256"):
            offset, size = operand(0), operand(1)
            pop(2)
            stack.append(self._memory_span(sf, offset, size))
        elif op in _BLANK_OPS:
            stack.append(EMPTY_TAG)
        elif op in _CHAIN_OPS:
            ref = chain_context_ref(op)
            self._observe(step_index, ref, op)
            pop(arity(op)[0])
            stack.append(frozenset({ref}))
        elif op == "SLOAD":
            slot = operand(0)
            pop(1)
            version = self._storage_version.get((frame.address, slot), 0)
            ref = storage_ref(frame.address, slot, version)
            stored = self._storage_tags.get(frame.address, {}).get(slot, EMPTY_TAG)
            stack.append(frozenset({ref}) | stored)
            if version == 0:
                self._pending_load = (sf, ref)
        elif op == "SSTORE":
            slot, value = operand(0), operand(1)
            tags = pop(2)[1]
            self._commit_write(
                frame.frame_id, step_index, storage_ref(frame.address, slot),
                value, tags,
            )
        elif op == "BALANCE":
            address = address_of_word(operand(0))
            pop(1)
            stack.append(self._balance_load(step_index, address))
        elif op == "SELFBALANCE":
            stack.append(self._balance_load(step_index, frame.address))
        elif op == "CALLVALUE":
            ref = callvalue_ref(frame.frame_id)
            self._observe(step_index, ref, frame.call_value)
            stack.append(frozenset({ref}))
        elif op == "CALLER":
            ref = caller_ref(frame.frame_id)
            self._observe(step_index, ref, frame.caller)
            stack.append(frozenset({ref}))
        elif op == "ORIGIN":
            self._observe(step_index, ORIGIN_REF, self.envelope.sender)
            stack.append(frozenset({ORIGIN_REF}))
        elif op == "NUMBER":
            self._observe(step_index, BLOCK_NUMBER_REF, self.envelope.block_number)
            stack.append(frozenset({BLOCK_NUMBER_REF}))
        elif op == "TIMESTAMP":
            self._observe(step_index, TIMESTAMP_REF, self.envelope.timestamp)
            stack.append(frozenset({TIMESTAMP_REF}))
        elif op == "CALLDATASIZE":
            ref = calldata_ref(frame.frame_id)
            self._observe(step_index, ref, "0x" + frame.input_data.hex())
            stack.append(frozenset({ref}))
        elif op == "CALLDATALOAD":
            offset = operand(0)
            pop(1)
            ref = calldata_ref(frame.frame_id)
            self._observe(step_index, ref, "0x" + frame.input_data.hex())
            tags = frozenset({ref})
            for i in range(offset, offset + 32):
                tags = tags | sf.calldata.get(i, EMPTY_TAG)
            stack.append(tags)
        elif op == "CALLDATACOPY":
            dest, offset, size = operand(0), operand(1), operand(2)
            pop(3)
            ref = calldata_ref(frame.frame_id)
            self._observe(step_index, ref, "0x" + frame.input_data.hex())
            for i in range(size):
                sf.memory[dest + i] = frozenset({ref}) | sf.calldata.get(
                    offset + i, EMPTY_TAG
                )
        elif op == "RETURNDATASIZE":
            if sf.last_child is None:
                stack.append(EMPTY_TAG)
            else:
                stack.append(frozenset({returndata_ref(sf.last_child)}))
        elif op == "RETURNDATACOPY":
            dest, offset, size = operand(0), operand(1), operand(2)
            pop(3)
            if sf.last_child is not None:
                out = self._outputs[sf.last_child]
                child_tag = frozenset({returndata_ref(sf.last_child)})
                for i in range(size):
                    sf.memory[dest + i] = (
                        child_tag | out.blanket | out.by_byte.get(offset + i, EMPTY_TAG)
                    )
        elif op == "MLOAD":
            offset = operand(0)
            pop(1)
            stack.append(self._memory_span(sf, offset, 32))
        elif op == "MSTORE":
            offset = operand(0)
            tags = pop(2)[1]
            self._set_memory(sf, offset, 32, tags)
        elif op == "MSTORE8":
            offset = operand(0)
            tags = pop(2)[1]
            self._set_memory(sf, offset, 1, tags)
        elif op in ("CODECOPY", "EXTCODECOPY"):
            if op == "CODECOPY":
                dest, size = operand(0), operand(2)
                tags = EMPTY_TAG
                pop(3)
            else:
                dest, size = operand(1), operand(3)
                tags = frozenset({chain_context_ref(op)})
                pop(4)
            self._set_memory(sf, dest, size, tags)
        elif op == "JUMP":
            pop(1)
        elif op == "JUMPI":
            cond_tags = pop(2)[1]
            self._branches.append(
                BranchRecord(frame.frame_id, step_index, step.pc, cond_tags)
            )
        elif is_log(op):
            self._handle_log(sf, step_index, step)
        elif op in ("CALL", "CALLCODE"):
            tags = pop(7)
            self._prepare_child(
                step_index, step,
                to_tags=tags[1], value_tags=tags[2],
                args=(operand(3), operand(4)), rets=(operand(5), operand(6)),
            )
            stack.append(EMPTY_TAG)
        elif op in ("DELEGATECALL", "STATICCALL"):
            tags = pop(6)
            self._prepare_child(
                step_index, step,
                to_tags=tags[1], value_tags=EMPTY_TAG,
                args=(operand(2), operand(3)), rets=(operand(4), operand(5)),
            )
            stack.append(EMPTY_TAG)
        elif op in ("CREATE", "CREATE2"):
            tags = pop(arity(op)[0])
            self._prepare_child(
                step_index, step,
                to_tags=EMPTY_TAG, value_tags=tags[0],
                args=None, rets=None,
            )
            stack.append(EMPTY_TAG)
        elif op == "SELFDESTRUCT":
            tags = pop(1)
            self._pending_child = {
                "step_index": step_index,
                "calldata": {},
                "ret_site": None,
                "to_tags": tags[0],
                "value_tags": EMPTY_TAG,
            }
        elif op == "RETURN" or op == "REVERT":
            offset, size = operand(0), operand(1)
            pop(2)
            by_byte = {
                i: sf.memory.get(offset + i, EMPTY_TAG) for i in range(size)
            }
            self._outputs[frame.frame_id] = _Output(by_byte=by_byte)
        elif op in ("STOP", "INVALID", "JUMPDEST"):
            pass
        else:
            # Unmodeled opcode: keep the stack aligned, result carries no tag.
            if not is_known(op):
                raise ShadowDesync(f"structLogs[{step_index}]: unknown opcode {op}")
            pops, pushed = arity(op)
            pop(pops)
            for _ in range(pushed):
                stack.append(EMPTY_TAG)

    # -- op helpers ----------------------------------------------------------

    def _balance_load(self, step_index: int, address: str) -> Tag:
        version = self._balance_version.get(address, 0)
        ref = balance_ref(address, version)
        if version == 0:
            self._observe(step_index, ref, self._balances.get(address, 0))
        return frozenset({ref}) | self._balance_tags.get(address, EMPTY_TAG)

    def _prepare_child(
        self,
        step_index: int,
        step: OpStep,
        to_tags: Tag,
        value_tags: Tag,
        args: tuple[int, int] | None,
        rets: tuple[int, int] | None,
    ) -> None:
        sf = self._active[-1]
        calldata: dict[int, Tag] = {}
        if args is not None:
            args_off, args_len = args
            for i in range(args_len):
                tags = sf.memory.get(args_off + i, EMPTY_TAG)
                if tags:
                    calldata[i] = tags
        self._pending_child = {
            "step_index": step_index,
            "calldata": calldata,
            "ret_site": rets,
            "to_tags": to_tags,
            "value_tags": value_tags,
        }

    def _handle_log(self, sf: _ShadowFrame, step_index: int, step: OpStep) -> None:
        frame = sf.frame
        n_topics = int(step.op[3:])
        pop_count = 2 + n_topics
        tags = sf.stack[-pop_count:]
        del sf.stack[-pop_count:]
        if frame.static or n_topics < 3:
            return
        topics = [step.stack[-3 - i] for i in range(n_topics)]
        if topics[0] != TRANSFER_TOPIC:
            return
        if self.allowlist is not None and frame.address not in self.allowlist:
            return
        offset, size = step.stack[-1], step.stack[-2]
        if size < 32:
            raise MalformedLog(
                f"structLogs[{step_index}]: transfer event with {size}-byte data"
            )
        amount = int.from_bytes(read_memory(step.memory, offset, 32), "big")
        if amount == 0:
            return
        # tags is in stack order, bottom first: [t_n .. t1, size, off].
        # The `to` address is the third topic, five slots below the top.
        to_tags = tags[n_topics - 3]
        self._flows.append(
            AssetFlow(
                asset=frame.address,
                src=address_of_word(topics[1]),
                dst=address_of_word(topics[2]),
                amount=amount,
                frame_id=frame.frame_id,
                step_index=step_index,
                to_tags=to_tags,
                amount_tags=self._memory_span(sf, offset, 32),
            )
        )

    # -- result --------------------------------------------------------------

    def result(self) -> ShadowResult:
        dead: set[int] = set()
        for frame in self.tree.frames:
            if frame.reverted or frame.parent_id in dead:
                dead.add(frame.frame_id)

        writes = [
            w
            for w in self._writes
            if w.frame_id not in dead and w.effect_frame not in dead
        ]
        branches = [b for b in self._branches if b.frame_id not in dead]
        flows = [f for f in self._flows if f.frame_id not in dead]

        observed: dict[SourceRef, object] = {}
        for w in writes:
            observed.setdefault(w.ref, w.value)
        # Version-0 observations are pre-state values and stay valid even
        # when captured inside a frame that later reverted.
        for _, ref, value in self._loads:
            observed.setdefault(ref, value)

        versions = {}
        for (address, slot), version in self._storage_version.items():
            versions[("Storage", (address, slot))] = version
        for address, version in self._balance_version.items():
            versions[("Balance", (address,))] = version
        return ShadowResult(writes, branches, flows, observed, versions)
