"""Property graph construction from a replayed transaction.

Three overlaid views share one vertex universe:

- contract vertices linked by one call edge per frame (plain opcode),
- basic-block vertices linked by ENTRY/JUMP/JUMPI control edges,
- data-source vertices linked to blocks and each other by WRITE,
  TRANSITION, CONTROL, and DEPENDENCY edges.

Each call edge also gets a "CT:<opcode>" twin whose tail is re-anchored
onto the initiating block inside the caller, which stitches the three
views together. The root twin keeps the sender vertex as its tail
because no block exists there.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .errors import UnknownLabel
from .opcodes import FRAME_OPENERS, TERMINALS
from .shadow import FlowTracker, ShadowResult, SourceRef
from .trace import (
    CallFrame,
    FrameTree,
    Observer,
    OpStep,
    TransactionEnvelope,
    reconstruct_frames,
    simulate,
)

CT_BASES = (
    "CALL",
    "CALLCODE",
    "DELEGATECALL",
    "STATICCALL",
    "CREATE",
    "CREATE2",
    "SELFDESTRUCT",
)
CONTROL_LABELS = ("ENTRY", "JUMP", "JUMPI")
DATA_LABELS = ("WRITE", "TRANSITION", "CONTROL", "DEPENDENCY")
ALL_LABELS = (
    CT_BASES
    + tuple(f"CT:{b}" for b in CT_BASES)
    + CONTROL_LABELS
    + DATA_LABELS
)


@dataclass(slots=True)
class Vertex:
    vid: int
    kind: str  # "contract" | "block" | "source"
    props: dict


@dataclass(slots=True)
class Edge:
    eid: int
    src: int
    dst: int
    label: str
    props: dict


class PropertyGraph:
    """Directed multigraph with labeled edges and a fixed label alphabet."""

    def __init__(self, labels: tuple[str, ...] = ()):
        self.vertices: dict[int, Vertex] = {}
        self.edges: dict[int, Edge] = {}
        self.labels: set[str] = set(labels)
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}

    def add_vertex(self, kind: str, **props) -> int:
        vid = len(self.vertices)
        self.vertices[vid] = Vertex(vid, kind, props)
        self._out[vid] = []
        self._in[vid] = []
        return vid

    def add_edge(self, src: int, dst: int, label: str, **props) -> int:
        if src not in self.vertices or dst not in self.vertices:
            raise KeyError(f"edge endpoints {src}->{dst} not in graph")
        eid = len(self.edges)
        self.edges[eid] = Edge(eid, src, dst, label, props)
        self.labels.add(label)
        self._out[src].append(eid)
        self._in[dst].append(eid)
        return eid

    def vertex(self, vid: int) -> Vertex:
        return self.vertices[vid]

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def check_labels(self, labels) -> frozenset:
        wanted = frozenset(labels)
        unknown = wanted - self.labels
        if unknown:
            raise UnknownLabel(f"labels not in graph: {sorted(unknown)}")
        return wanted

    def out_edges(self, vid: int, labels=None) -> Iterator[Edge]:
        for eid in self._out[vid]:
            edge = self.edges[eid]
            if labels is None or edge.label in labels:
                yield edge

    def in_edges(self, vid: int, labels=None) -> Iterator[Edge]:
        for eid in self._in[vid]:
            edge = self.edges[eid]
            if labels is None or edge.label in labels:
                yield edge


@dataclass(slots=True)
class _OpenBlock:
    key: tuple | None = None
    # Edges waiting for the next block of this frame: (src_key, label, props).
    pending: list = field(default_factory=list)
    visits: dict = field(default_factory=dict)


class BlockBuilder(Observer):
    """Segments each frame's step stream into dynamic basic blocks.

    A block closes after JUMP and JUMPI, after any frame-opening opcode
    (the resume point starts a fresh block reached by a JUMP edge), and
    at terminal opcodes. A JUMPDEST reached by fallthrough does not
    start a new block. Revisited entry points get a fresh block per
    visit, counted by the index component of the block key.
    """

    def __init__(self):
        self.blocks: dict[tuple, list[int]] = {}  # key -> [first, last] step
        self.frame_blocks: dict[int, list[tuple]] = {}
        self.step_block: dict[int, tuple] = {}
        self.jump_edges: list[tuple] = []  # (src_key, dst_key, label, props)
        self.entry: dict[int, tuple] = {}
        self._state: dict[int, _OpenBlock] = {}

    def on_frame_enter(self, frame: CallFrame) -> None:
        self._state[frame.frame_id] = _OpenBlock()
        self.frame_blocks[frame.frame_id] = []

    def on_frame_exit(self, frame: CallFrame) -> None:
        self._state.pop(frame.frame_id, None)

    def on_step(self, index: int, step: OpStep, frame: CallFrame) -> None:
        st = self._state[frame.frame_id]
        if st.key is None:
            visit = st.visits.get(step.pc, 0)
            st.visits[step.pc] = visit + 1
            key = (frame.frame_id, step.pc, visit)
            self.blocks[key] = [index, index]
            self.frame_blocks[frame.frame_id].append(key)
            self.entry.setdefault(frame.frame_id, key)
            for src_key, label, props in st.pending:
                self.jump_edges.append((src_key, key, label, props))
            st.pending = []
            st.key = key
        else:
            key = st.key
            self.blocks[key][1] = index
        self.step_block[index] = key

        op = step.op
        if op in TERMINALS:
            st.key = None
            st.pending = []
        elif op == "JUMP":
            st.key = None
            st.pending = [(key, "JUMP", {})]
        elif op == "JUMPI":
            taken = len(step.stack) >= 2 and step.stack[-2] != 0
            st.key = None
            st.pending = [(key, "JUMPI", {"condition": taken})]
        elif op in FRAME_OPENERS:
            st.key = None
            st.pending = [(key, "JUMP", {})]


def _identifier(ref: SourceRef) -> str:
    return ref.describe().rsplit("@", 1)[0]


class Epg:
    """The assembled graph plus the registries detectors navigate with."""

    def __init__(
        self,
        graph: PropertyGraph,
        envelope: TransactionEnvelope,
        tree: FrameTree,
        shadow: ShadowResult,
    ):
        self.graph = graph
        self.envelope = envelope
        self.tree = tree
        self.shadow = shadow

        self.contract_vertex: dict[str, int] = {}
        self.block_vertex: dict[tuple, int] = {}
        self.source_vertex: dict[SourceRef, int] = {}
        self.entry_block: dict[int, int] = {}
        self.frame_blocks: dict[int, list[int]] = {}
        self.step_block: dict[int, int] = {}
        self.call_edge: dict[int, int] = {}
        self.trace_edge: dict[int, int] = {}
        self.initiating_block: dict[int, int | None] = {}
        self.block_frame: dict[int, int] = {}
        self.block_span: dict[int, tuple[int, int]] = {}

    @property
    def flows(self):
        return self.shadow.flows

    def block_pc(self, vid: int) -> int:
        return self.graph.vertex(vid).props["pc"]

    def frame_of_block(self, vid: int) -> int:
        return self.block_frame[vid]

    def blocks_of_subtree(self, frame_id: int) -> list[int]:
        out: list[int] = []
        for fid in self.tree.subtree(frame_id):
            out.extend(self.frame_blocks.get(fid, ()))
        return out


def build_epg(
    envelope: TransactionEnvelope,
    tree: FrameTree,
    shadow: ShadowResult,
    blocks: BlockBuilder,
) -> Epg:
    """Assembles the property graph from the replay byproducts."""
    graph = PropertyGraph(ALL_LABELS)
    epg = Epg(graph, envelope, tree, shadow)

    def contract(address: str) -> int:
        vid = epg.contract_vertex.get(address)
        if vid is None:
            vid = graph.add_vertex(
                "contract", index=len(epg.contract_vertex), address=address
            )
            epg.contract_vertex[address] = vid
        return vid

    contract(envelope.sender)
    for frame in tree.frames:
        contract(frame.caller)
        contract(frame.callee)
        contract(frame.address)

    for key in blocks.blocks:
        frame_id, pc, visit = key
        vid = graph.add_vertex("block", index=visit, pc=pc)
        epg.block_vertex[key] = vid
        epg.block_frame[vid] = frame_id
        first, last = blocks.blocks[key]
        epg.block_span[vid] = (first, last)
    for frame_id, keys in blocks.frame_blocks.items():
        epg.frame_blocks[frame_id] = [epg.block_vertex[k] for k in keys]
    for index, key in blocks.step_block.items():
        epg.step_block[index] = epg.block_vertex[key]
    for frame_id, key in blocks.entry.items():
        epg.entry_block[frame_id] = epg.block_vertex[key]

    def source(ref: SourceRef) -> int:
        vid = epg.source_vertex.get(ref)
        if vid is None:
            props = {"index": ref.version, "identifier": _identifier(ref)}
            if ref in shadow.observed:
                props["value"] = shadow.observed[ref]
            vid = graph.add_vertex("source", **props)
            epg.source_vertex[ref] = vid
        return vid

    for record in shadow.writes:
        source(record.ref)
        for ref in sorted(record.tags):
            source(ref)
    for branch in shadow.branches:
        for ref in sorted(branch.tags):
            source(ref)

    # Control edges of the block view.
    for frame in tree.frames:
        entry_key = blocks.entry.get(frame.frame_id)
        if entry_key is not None:
            graph.add_edge(
                contract(frame.address), epg.block_vertex[entry_key], "ENTRY"
            )
    for src_key, dst_key, label, props in blocks.jump_edges:
        graph.add_edge(
            epg.block_vertex[src_key], epg.block_vertex[dst_key], label, **props
        )

    # Two call edges per frame: the contract-level edge of the call
    # trace, and its twin re-anchored onto the initiating block.
    flow_frames = {flow.frame_id for flow in shadow.flows}
    for frame in tree.frames:
        if frame.parent_id is None:
            tail = contract(frame.caller)
            epg.initiating_block[frame.frame_id] = None
        else:
            block_vid = epg.step_block[frame.call_step]
            epg.initiating_block[frame.frame_id] = block_vid
            tail = block_vid
        props = {
            "index": frame.frame_id,
            "value": frame.call_value,
            "input": "0x" + frame.input_data.hex(),
            "output": "0x" + frame.output.hex(),
        }
        if frame.opcode == "SELFDESTRUCT":
            swept = [
                f.amount
                for f in shadow.flows
                if f.frame_id == frame.frame_id and f.asset == "ETH"
            ]
            props["value"] = swept[0] if swept else 0
        if frame.frame_id in flow_frames:
            props["assetFlow"] = True
        head = contract(frame.callee)
        epg.trace_edge[frame.frame_id] = graph.add_edge(
            contract(frame.caller), head, frame.opcode, **props
        )
        epg.call_edge[frame.frame_id] = graph.add_edge(
            tail, head, f"CT:{frame.opcode}", **props
        )

    # Data view: writes anchor versions, then version chains, then the
    # influence edges into branches and written values.
    for record in shadow.writes:
        block_vid = epg.step_block[record.step_index]
        graph.add_edge(block_vid, source(record.ref), "WRITE")

    chains: dict[tuple, list[int]] = {}
    for ref in epg.source_vertex:
        if ref.kind in ("Storage", "Balance"):
            chains.setdefault(ref.identifier, []).append(ref.version)
    for identifier, versions in chains.items():
        versions.sort()
        kind, key = identifier
        for prev, nxt in zip(versions, versions[1:]):
            if nxt == prev + 1:
                graph.add_edge(
                    epg.source_vertex[SourceRef(kind, key, prev)],
                    epg.source_vertex[SourceRef(kind, key, nxt)],
                    "TRANSITION",
                )

    for branch in shadow.branches:
        block_vid = epg.step_block[branch.step_index]
        for ref in sorted(branch.tags):
            graph.add_edge(source(ref), block_vid, "CONTROL")

    for record in shadow.writes:
        dst = source(record.ref)
        for ref in sorted(record.tags):
            graph.add_edge(source(ref), dst, "DEPENDENCY")

    return epg


def construct_epg(
    envelope: TransactionEnvelope,
    steps,
    allowlist: set[str] | None = None,
) -> Epg:
    """Replays the step stream once and assembles the full graph."""
    tree = reconstruct_frames(envelope, steps)
    tracker = FlowTracker(envelope, tree, allowlist=allowlist)
    blocks = BlockBuilder()
    simulate(envelope, steps, _Tee((tracker, blocks)), tree)
    return build_epg(envelope, tree, tracker.result(), blocks)


class _Tee(Observer):
    """Fans one replay out to several observers."""

    def __init__(self, observers):
        self.observers = tuple(observers)

    def on_frame_enter(self, frame: CallFrame) -> None:
        for obs in self.observers:
            obs.on_frame_enter(frame)

    def on_frame_exit(self, frame: CallFrame) -> None:
        for obs in self.observers:
            obs.on_frame_exit(frame)

    def on_step(self, index: int, step: OpStep, frame: CallFrame) -> None:
        for obs in self.observers:
            obs.on_step(index, step, frame)
