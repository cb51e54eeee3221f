"""Transaction trace ingest.

Parses the recorded step stream of one transaction (the structLogs format
produced by node-side tracers), reconstructs the dynamic call-frame tree from
depth changes and call opcodes, and replays the steps through an observer.

Document layout::

    {"tx": {envelope fields}, "trace": {"structLogs": [step, ...]}}

Stack words are hex strings (0x-prefixed or bare), memory is a list of
32-byte hex words, storage a partial hex map. All of it is decoded into
canonical 256-bit integers and byte strings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import (
    InconsistentDepth,
    MalformedTrace,
    SchemaViolation,
    TruncatedTrace,
    WordOverflow,
)
from .opcodes import FRAME_OPENERS, TERMINALS

WORD_MAX = 2**256 - 1
ADDR_MASK = 2**160 - 1
ZERO_ADDRESS = "0x" + "00" * 20


@dataclass(slots=True)
class OpStep:
    """One executed opcode, state captured before execution."""

    pc: int
    op: str
    gas: int
    gas_cost: int
    depth: int
    stack: tuple[int, ...]
    memory: bytes
    storage: dict[int, int] = field(default_factory=dict)


@dataclass(slots=True)
class TransactionEnvelope:
    """Transaction-level metadata wrapped around the step stream."""

    tx_hash: str
    sender: str
    to: str | None
    value: int
    input_data: bytes
    block_number: int
    timestamp: int
    gas_used: int | None = None
    pre_balances: dict[str, int] = field(default_factory=dict)
    # token address -> holder -> balance before the transaction
    pre_token_balances: dict[str, dict[str, int]] = field(default_factory=dict)


@dataclass(slots=True)
class CallFrame:
    """One dynamic invocation: a contract call, creation, or selfdestruct."""

    frame_id: int
    parent_id: int | None
    caller: str
    callee: str
    opcode: str
    call_value: int
    input_data: bytes
    output: bytes = b""
    reverted: bool = False
    index_in_parent: int = 0
    # [first, last] step indices owned by this frame, None for codeless callees.
    step_range: tuple[int, int] | None = None
    # Step index of the opcode in the parent that opened this frame.
    call_step: int | None = None
    # Context address owning storage/balance, and the address the code came
    # from. They differ under DELEGATECALL/CALLCODE.
    address: str = ""
    code_address: str = ""
    static: bool = False
    depth: int = 1


class FrameTree:
    """Reconstructed frame forest of one transaction (always a single root)."""

    def __init__(self, frames: list[CallFrame], step_frame: list[int]):
        self.frames = frames
        self.step_frame = step_frame
        self.root_id = 0
        self._children: dict[int, list[int]] = {f.frame_id: [] for f in frames}
        for f in frames:
            if f.parent_id is not None:
                self._children[f.parent_id].append(f.frame_id)

    def __len__(self) -> int:
        return len(self.frames)

    def frame(self, frame_id: int) -> CallFrame:
        return self.frames[frame_id]

    @property
    def root(self) -> CallFrame:
        return self.frames[self.root_id]

    def children(self, frame_id: int) -> list[int]:
        return self._children[frame_id]

    def parent(self, frame_id: int) -> int | None:
        return self.frames[frame_id].parent_id

    def ancestors(self, frame_id: int) -> Iterator[int]:
        """Frame ids from the parent of frame_id up to the root."""
        cur = self.frames[frame_id].parent_id
        while cur is not None:
            yield cur
            cur = self.frames[cur].parent_id

    def subtree(self, frame_id: int) -> Iterator[int]:
        """frame_id and every frame nested below it, preorder."""
        stack = [frame_id]
        while stack:
            fid = stack.pop()
            yield fid
            stack.extend(reversed(self._children[fid]))

    def is_descendant(self, frame_id: int, ancestor_id: int) -> bool:
        """True when ancestor_id appears strictly above frame_id."""
        return any(a == ancestor_id for a in self.ancestors(frame_id))

    def last_step(self, frame_id: int) -> int:
        """Index of the last step executed at or below this frame.

        Zero-step frames report the call step that spawned them.
        """
        f = self.frames[frame_id]
        best = f.step_range[1] if f.step_range else -1
        if f.call_step is not None:
            best = max(best, f.call_step)
        for child in self._children[frame_id]:
            best = max(best, self.last_step(child))
        return best


class Observer:
    """Replay callback interface; subclass and override what you need."""

    def on_frame_enter(self, frame: CallFrame) -> None:
        pass

    def on_step(self, index: int, step: OpStep, frame: CallFrame) -> None:
        pass

    def on_frame_exit(self, frame: CallFrame) -> None:
        pass


# -- word and address decoding ------------------------------------------------


def _decode_word(raw: Any, where: str) -> int:
    if isinstance(raw, int):
        value = raw
    elif isinstance(raw, str):
        text = raw[2:] if raw.startswith(("0x", "0X")) else raw
        if text == "":
            raise SchemaViolation(f"{where}: empty hex word")
        try:
            value = int(text, 16)
        except ValueError:
            raise SchemaViolation(f"{where}: not a hex word: {raw!r}") from None
    else:
        raise SchemaViolation(f"{where}: expected hex word, got {type(raw).__name__}")
    if value < 0 or value > WORD_MAX:
        raise WordOverflow(f"{where}: word exceeds 256 bits")
    return value


def _canon_address(raw: Any, where: str) -> str:
    value = _decode_word(raw, where)
    if value > ADDR_MASK:
        raise SchemaViolation(f"{where}: address wider than 160 bits")
    return "0x" + format(value, "040x")


def address_of_word(word: int) -> str:
    """Truncate a 256-bit stack word to its 160-bit address form."""
    return "0x" + format(word & ADDR_MASK, "040x")


def _decode_bytes(raw: Any, where: str) -> bytes:
    if not isinstance(raw, str):
        raise SchemaViolation(f"{where}: expected hex string")
    text = raw[2:] if raw.startswith(("0x", "0X")) else raw
    if len(text) % 2:
        text = "0" + text
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise SchemaViolation(f"{where}: not hex: {raw!r}") from None


def _require(mapping: dict, key: str, kind: type | tuple, where: str) -> Any:
    if key not in mapping:
        raise SchemaViolation(f"{where}: missing field {key!r}")
    value = mapping[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise SchemaViolation(f"{where}: field {key!r} has wrong type")
    return value


def read_memory(memory: bytes, offset: int, length: int) -> bytes:
    """Read a memory slice, zero-padded past the recorded end."""
    if length == 0:
        return b""
    chunk = memory[offset : offset + length]
    return chunk + b"\x00" * (length - len(chunk))


# -- parsing -------------------------------------------------------------------


def parse_trace(raw: bytes | str | dict) -> tuple[TransactionEnvelope, list[OpStep]]:
    """Decode a trace document into (envelope, steps).

    Accepts raw JSON bytes/text or an already-decoded dict.
    """
    if isinstance(raw, (bytes, str)):
        try:
            doc = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise MalformedTrace(f"undecodable trace document: {exc}") from None
    elif isinstance(raw, dict):
        doc = raw
    else:
        raise MalformedTrace(f"unsupported input type {type(raw).__name__}")

    if not isinstance(doc, dict):
        raise MalformedTrace("trace document is not an object")
    tx = _require(doc, "tx", dict, "document")
    trace = _require(doc, "trace", dict, "document")

    envelope = TransactionEnvelope(
        tx_hash=_require(tx, "txHash", str, "tx"),
        sender=_canon_address(_require(tx, "from", (str, int), "tx"), "tx.from"),
        to=(
            _canon_address(tx["to"], "tx.to")
            if tx.get("to") is not None
            else None
        ),
        value=_decode_word(_require(tx, "value", (str, int), "tx"), "tx.value"),
        input_data=_decode_bytes(_require(tx, "input", str, "tx"), "tx.input"),
        block_number=_require(tx, "blockNumber", int, "tx"),
        timestamp=_require(tx, "timestamp", int, "tx"),
        gas_used=tx.get("gasUsed"),
        pre_balances={
            _canon_address(addr, "tx.preBalances"): _decode_word(v, "tx.preBalances")
            for addr, v in tx.get("preBalances", {}).items()
        },
        pre_token_balances={
            _canon_address(token, "tx.preTokenBalances"): {
                _canon_address(addr, "tx.preTokenBalances"): _decode_word(
                    v, "tx.preTokenBalances"
                )
                for addr, v in holders.items()
            }
            for token, holders in tx.get("preTokenBalances", {}).items()
        },
    )
    if envelope.gas_used is not None and not isinstance(envelope.gas_used, int):
        raise SchemaViolation("tx: field 'gasUsed' has wrong type")

    logs = _require(trace, "structLogs", list, "trace")
    steps: list[OpStep] = []
    for i, entry in enumerate(logs):
        where = f"structLogs[{i}]"
        if not isinstance(entry, dict):
            raise SchemaViolation(f"{where}: step is not an object")
        depth = _require(entry, "depth", int, where)
        if depth < 1:
            raise SchemaViolation(f"{where}: depth must be >= 1")
        stack_raw = _require(entry, "stack", list, where)
        memory_raw = _require(entry, "memory", list, where)
        words = []
        for j, w in enumerate(memory_raw):
            if not isinstance(w, str) or len(w.removeprefix("0x")) != 64:
                raise SchemaViolation(f"{where}: memory[{j}] is not a 32-byte word")
            words.append(_decode_bytes(w, f"{where}.memory[{j}]"))
        storage_raw = entry.get("storage", {})
        if not isinstance(storage_raw, dict):
            raise SchemaViolation(f"{where}: field 'storage' has wrong type")
        steps.append(
            OpStep(
                pc=_require(entry, "pc", int, where),
                op=_require(entry, "op", str, where),
                gas=_require(entry, "gas", int, where),
                gas_cost=_require(entry, "gasCost", int, where),
                depth=depth,
                stack=tuple(
                    _decode_word(w, f"{where}.stack[{j}]")
                    for j, w in enumerate(stack_raw)
                ),
                memory=b"".join(words),
                storage={
                    _decode_word(k, f"{where}.storage"): _decode_word(
                        v, f"{where}.storage"
                    )
                    for k, v in storage_raw.items()
                },
            )
        )
    return envelope, steps


def _word_hex(value: int) -> str:
    return hex(value)


def _padded_hex(value: int) -> str:
    return format(value, "064x")


def dump_trace(envelope: TransactionEnvelope, steps: list[OpStep]) -> dict:
    """Serialize back to the canonical document form; inverse of parse_trace."""
    tx: dict[str, Any] = {
        "txHash": envelope.tx_hash,
        "from": envelope.sender,
        "value": _word_hex(envelope.value),
        "input": "0x" + envelope.input_data.hex(),
        "blockNumber": envelope.block_number,
        "timestamp": envelope.timestamp,
    }
    if envelope.to is not None:
        tx["to"] = envelope.to
    if envelope.gas_used is not None:
        tx["gasUsed"] = envelope.gas_used
    if envelope.pre_balances:
        tx["preBalances"] = {
            addr: _word_hex(v) for addr, v in sorted(envelope.pre_balances.items())
        }
    if envelope.pre_token_balances:
        tx["preTokenBalances"] = {
            token: {addr: _word_hex(v) for addr, v in sorted(holders.items())}
            for token, holders in sorted(envelope.pre_token_balances.items())
        }
    logs = []
    for s in steps:
        entry: dict[str, Any] = {
            "pc": s.pc,
            "op": s.op,
            "gas": s.gas,
            "gasCost": s.gas_cost,
            "depth": s.depth,
            "stack": [_word_hex(w) for w in s.stack],
            "memory": [
                s.memory[k : k + 32].hex() for k in range(0, len(s.memory), 32)
            ],
        }
        if s.storage:
            entry["storage"] = {
                _padded_hex(k): _padded_hex(v) for k, v in sorted(s.storage.items())
            }
        logs.append(entry)
    return {"tx": tx, "trace": {"structLogs": logs}}


# -- frame reconstruction ------------------------------------------------------


def _stack_arg(step: OpStep, pos: int, what: str) -> int:
    """Fetch the pos-th operand from the top of a step's stack (0 = top)."""
    if len(step.stack) <= pos:
        raise SchemaViolation(
            f"step {what}: stack holds {len(step.stack)} words, operand {pos} missing"
        )
    return step.stack[-1 - pos]


def _decode_child(
    parent: CallFrame, cs: OpStep, cs_index: int, created: str | None
) -> CallFrame:
    """Build the child frame opened by the call-type step cs."""
    op = cs.op
    if op in ("CALL", "CALLCODE"):
        callee = address_of_word(_stack_arg(cs, 1, cs_index))
        value = _stack_arg(cs, 2, cs_index)
        args_off = _stack_arg(cs, 3, cs_index)
        args_len = _stack_arg(cs, 4, cs_index)
    elif op in ("DELEGATECALL", "STATICCALL"):
        callee = address_of_word(_stack_arg(cs, 1, cs_index))
        value = parent.call_value if op == "DELEGATECALL" else 0
        args_off = _stack_arg(cs, 2, cs_index)
        args_len = _stack_arg(cs, 3, cs_index)
    elif op in ("CREATE", "CREATE2"):
        callee = created if created else ZERO_ADDRESS
        value = _stack_arg(cs, 0, cs_index)
        args_off = _stack_arg(cs, 1, cs_index)
        args_len = _stack_arg(cs, 2, cs_index)
    else:  # pragma: no cover - callers gate on FRAME_OPENERS
        raise InconsistentDepth(f"step {cs_index}: {op} cannot open a frame")

    frame = CallFrame(
        frame_id=-1,
        parent_id=parent.frame_id,
        caller=parent.address,
        callee=callee,
        opcode=op,
        call_value=value,
        input_data=read_memory(cs.memory, args_off, args_len),
        call_step=cs_index,
        depth=parent.depth + 1,
        static=parent.static or op == "STATICCALL",
    )
    if op in ("DELEGATECALL", "CALLCODE"):
        frame.address = parent.address
        frame.code_address = callee
    else:
        frame.address = callee
        frame.code_address = callee
    return frame


def _find_created_address(steps: list[OpStep], cs_index: int) -> str | None:
    """The address a CREATE pushed, read from the parent's resume step."""
    depth = steps[cs_index].depth
    for j in range(cs_index + 1, len(steps)):
        if steps[j].depth == depth:
            if steps[j].depth < 1 or not steps[j].stack:
                return None
            word = steps[j].stack[-1]
            return address_of_word(word) if word else None
        if steps[j].depth < depth:
            return None
    return None


def reconstruct_frames(
    envelope: TransactionEnvelope, steps: list[OpStep]
) -> FrameTree:
    """Rebuild the dynamic call tree from depth changes and call opcodes."""
    root = CallFrame(
        frame_id=0,
        parent_id=None,
        caller=envelope.sender,
        callee=envelope.to if envelope.to is not None else ZERO_ADDRESS,
        opcode="CALL" if envelope.to is not None else "CREATE",
        call_value=envelope.value,
        input_data=envelope.input_data,
        depth=1,
    )
    root.address = root.callee
    root.code_address = root.callee
    frames = [root]
    step_frame = [0] * len(steps)
    open_stack = [root]
    child_counters: dict[int, int] = {0: 0}

    def close_frame() -> None:
        frame = open_stack.pop()
        if frame.step_range is None:  # pragma: no cover - opened frames own steps
            frame.reverted = True
            return
        last_index = frame.step_range[1]
        last = steps[last_index]
        if last.op in ("REVERT", "RETURN"):
            frame.reverted = last.op == "REVERT"
            off = _stack_arg(last, 0, last_index)
            length = _stack_arg(last, 1, last_index)
            frame.output = read_memory(last.memory, off, length)
        elif last.op == "INVALID":
            frame.reverted = True
        elif last.op not in TERMINALS:
            # The frame never reached a terminal opcode: exceptional halt.
            frame.reverted = True

    def spawn_leaf(parent: CallFrame, frame: CallFrame) -> CallFrame:
        frame.frame_id = len(frames)
        frame.index_in_parent = child_counters[parent.frame_id]
        child_counters[parent.frame_id] += 1
        child_counters[frame.frame_id] = 0
        frames.append(frame)
        return frame

    for i, step in enumerate(steps):
        expected = len(open_stack)
        if step.depth < expected:
            while len(open_stack) > step.depth:
                close_frame()
        elif step.depth == expected + 1:
            if i == 0 or steps[i - 1].op not in FRAME_OPENERS:
                raise InconsistentDepth(
                    f"step {i}: depth rose to {step.depth} without a call opcode"
                )
            cs = steps[i - 1]
            created = (
                _find_created_address(steps, i - 1)
                if cs.op in ("CREATE", "CREATE2")
                else None
            )
            child = _decode_child(open_stack[-1], cs, i - 1, created)
            spawn_leaf(open_stack[-1], child)
            open_stack.append(child)
        elif step.depth != expected:
            raise InconsistentDepth(
                f"step {i}: depth jumped from {expected} to {step.depth}"
            )

        frame = open_stack[-1]
        step_frame[i] = frame.frame_id
        if frame.step_range is None:
            frame.step_range = (i, i)
        else:
            frame.step_range = (frame.step_range[0], i)

        # A call opcode whose next step stays at this depth ran against a
        # codeless account (EOA or precompile): synthesize a zero-step child.
        if step.op in FRAME_OPENERS:
            next_deeper = i + 1 < len(steps) and steps[i + 1].depth == step.depth + 1
            if not next_deeper:
                created = (
                    _find_created_address(steps, i)
                    if step.op in ("CREATE", "CREATE2")
                    else None
                )
                child = _decode_child(frame, step, i, created)
                child.step_range = None
                spawn_leaf(frame, child)
        elif step.op == "SELFDESTRUCT":
            beneficiary = address_of_word(_stack_arg(step, 0, i))
            leaf = CallFrame(
                frame_id=-1,
                parent_id=frame.frame_id,
                caller=frame.address,
                callee=beneficiary,
                opcode="SELFDESTRUCT",
                call_value=0,
                input_data=b"",
                call_step=i,
                depth=frame.depth + 1,
                static=frame.static,
                address=beneficiary,
                code_address=beneficiary,
            )
            spawn_leaf(frame, leaf)

    if steps:
        final = steps[-1]
        if len(open_stack) > 1 and final.op not in TERMINALS:
            raise TruncatedTrace(
                f"trace ends at depth {final.depth} on {final.op}"
            )
        while open_stack:
            close_frame()
    else:
        open_stack.clear()

    return FrameTree(frames, step_frame)


# -- replay --------------------------------------------------------------------


def _build_events(
    tree: FrameTree, steps: list[OpStep]
) -> list[tuple[str, int]]:
    """Flatten the replay into ordered (kind, payload) events."""
    events: list[tuple[str, int]] = [("enter", tree.root_id)]
    # Zero-step children keyed by the call step that spawned them.
    pending: dict[int, list[int]] = {}
    for f in tree.frames:
        if f.step_range is None and f.call_step is not None:
            pending.setdefault(f.call_step, []).append(f.frame_id)

    current = tree.root_id
    for i in range(len(steps)):
        fid = tree.step_frame[i]
        if fid != current:
            if tree.frames[fid].parent_id == current:
                events.append(("enter", fid))
            else:
                cursor = current
                while cursor != fid:
                    events.append(("exit", cursor))
                    parent = tree.frames[cursor].parent_id
                    if parent is None:
                        raise InconsistentDepth(f"step {i}: broken frame nesting")
                    cursor = parent
            current = fid
        events.append(("step", i))
        for leaf in pending.get(i, ()):
            events.append(("enter", leaf))
            events.append(("exit", leaf))
    cursor: int | None = current
    while cursor is not None:
        events.append(("exit", cursor))
        cursor = tree.frames[cursor].parent_id
    return events


def simulate(
    envelope: TransactionEnvelope,
    steps: list[OpStep],
    observer: Observer,
    tree: FrameTree | None = None,
) -> FrameTree:
    """Replay the step stream through an observer.

    Frame enter/exit callbacks interleave with per-step callbacks in
    execution order. Observer exceptions propagate and abort the replay.
    """
    if tree is None:
        tree = reconstruct_frames(envelope, steps)
    for kind, payload in _build_events(tree, steps):
        if kind == "step":
            frame = tree.frames[tree.step_frame[payload]]
            observer.on_step(payload, steps[payload], frame)
        elif kind == "enter":
            observer.on_frame_enter(tree.frames[payload])
        else:
            observer.on_frame_exit(tree.frames[payload])
    return tree
