"""Attack-condition evaluation over one frozen transaction graph.

Three detectors share the same navigation vocabulary: a reentrancy rule
over (outer frame, re-entered frame, witness block) triples, an access
control rule asking whether the transaction origin conditions a
transfer, and a price manipulation rule asking whether the origin
conditions the writes feeding a transfer. Refinements are opt-in
filters layered on the generic rules.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .errors import BadThreshold, MissingPrice, NotDescendant, SchemaViolation, UnknownKey
from .graph import Epg
from .shadow import ORIGIN_REF, WRITABLE_KINDS, calldata_ref, caller_ref
from .traversal import in_, out_, repeat

RULE_REENTRANCY = "Reentrancy"
RULE_REENTRANCY_R1 = "ReentrancyR1"
RULE_FAC = "FaultyAccessControl"
RULE_PRICE = "PriceManipulation"

DETECTOR_NAMES = ("reentrancy", "fac", "price")
REFINEMENT_NAMES = ("r1", "a1", "a2", "a3", "p1", "p2")


@dataclass
class Finding:
    rule: str
    victim: str
    block_pc: int
    witnesses: dict[str, int]
    refinements_applied: list[str] = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "rule": self.rule,
            "victim": self.victim,
            "blockPc": self.block_pc,
            "witnesses": dict(self.witnesses),
            "refinementsApplied": list(self.refinements_applied),
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class DetectorConfig:
    detectors: tuple[str, ...] = DETECTOR_NAMES
    refinements: frozenset = frozenset({"p1", "p2"})
    attacker_contracts: frozenset = frozenset()
    p1_threshold: float = 0.5
    p2_usd_threshold: float = 10_000.0
    accept_root_caller: bool = False
    # paths to side inputs, resolved by the caller
    allowlist: str | None = None
    prices: str | None = None

    def validate(self) -> "DetectorConfig":
        unknown = set(self.detectors) - set(DETECTOR_NAMES)
        if unknown:
            raise UnknownKey(f"unknown detectors: {sorted(unknown)}")
        unknown = set(self.refinements) - set(REFINEMENT_NAMES)
        if unknown:
            raise UnknownKey(f"unknown refinements: {sorted(unknown)}")
        if not (0 < self.p1_threshold <= 1):
            raise BadThreshold(
                f"p1 threshold must be in (0, 1], got {self.p1_threshold}"
            )
        if self.p2_usd_threshold < 0:
            raise BadThreshold(
                f"p2 threshold must be non-negative, got {self.p2_usd_threshold}"
            )
        return self


class PriceTable:
    """USD prices keyed by (token address or "ETH", block number)."""

    def __init__(self, rows: dict[tuple[str, int], float] | None = None):
        self.rows = dict(rows or {})

    @classmethod
    def load(cls, path: str) -> "PriceTable":
        rows: dict[tuple[str, int], float] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            expected = ["token", "block", "usd_price"]
            if reader.fieldnames != expected:
                raise SchemaViolation(
                    f"price table header must be {expected}, got {reader.fieldnames}"
                )
            for line, row in enumerate(reader, start=2):
                try:
                    token = row["token"]
                    block = int(row["block"])
                    price = float(row["usd_price"])
                except (TypeError, ValueError) as exc:
                    raise SchemaViolation(f"price table line {line}: {exc}") from exc
                if price <= 0:
                    raise SchemaViolation(
                        f"price table line {line}: price must be positive"
                    )
                rows[(token, block)] = price
        return cls(rows)

    def price(self, token: str, block: int) -> float:
        try:
            return self.rows[(token, block)]
        except KeyError:
            raise MissingPrice(f"no price for {token} at block {block}") from None


# -- shared navigation --------------------------------------------------------


def reentrant_pairs(epg: Epg) -> list[tuple[int, int]]:
    """(outer, inner) frame pairs executing the same contract address."""
    pairs = []
    for frame in epg.tree.frames:
        for anc in epg.tree.ancestors(frame.frame_id):
            if epg.tree.frame(anc).address == frame.address:
                pairs.append((anc, frame.frame_id))
    pairs.sort()
    return pairs


def control_block(epg: Epg, frame_id: int) -> frozenset:
    """Blocks writing any version of a data source that conditions a
    branch anywhere in the frame's call subtree."""
    g = epg.graph
    blocks = frozenset(epg.blocks_of_subtree(frame_id))
    conditioning = in_(g, {"CONTROL"})(blocks)
    forward = out_(g, {"TRANSITION"})
    backward = in_(g, {"TRANSITION"})
    versions = repeat(lambda vs: forward(vs) | backward(vs))(conditioning)
    return in_(g, {"WRITE"})(versions)


def succ_block(epg: Epg, outer: int, inner: int) -> frozenset:
    """Blocks executed after the inner call completes, within the outer
    call: for every frame on the chain from inner up to (excluding)
    outer, the parent's blocks after that frame's initiating block,
    plus everything initiated from those blocks."""
    if inner == outer or not epg.tree.is_descendant(inner, outer):
        raise NotDescendant(f"frame {inner} is not below frame {outer}")
    result: set[int] = set()
    frame_id = inner
    while frame_id != outer:
        parent = epg.tree.parent(frame_id)
        order = epg.frame_blocks.get(parent, [])
        position = order.index(epg.initiating_block[frame_id])
        later = set(order[position + 1 :])
        result |= later
        for child in epg.tree.children(parent):
            if epg.initiating_block.get(child) in later:
                result.update(epg.blocks_of_subtree(child))
        frame_id = parent
    return frozenset(result)


def lineage_blocks(epg: Epg, block_vid: int) -> frozenset:
    """Blocks executed at-or-before the given block along the call
    stack: its own frame's prefix plus each ancestor's prefix up to the
    corresponding initiating block."""
    result: set[int] = set()
    frame_id = epg.block_frame[block_vid]
    cursor = block_vid
    while True:
        order = epg.frame_blocks[frame_id]
        result.update(order[: order.index(cursor) + 1])
        parent = epg.tree.parent(frame_id)
        if parent is None:
            return frozenset(result)
        cursor = epg.initiating_block[frame_id]
        frame_id = parent


def control_source(
    epg: Epg, block_vid: int, excluded_contracts: frozenset = frozenset()
) -> frozenset:
    """Data sources conditioning any branch in the block's history,
    closed under incoming dependencies. Blocks belonging to excluded
    contracts contribute nothing."""
    g = epg.graph
    history = lineage_blocks(epg, block_vid)
    if excluded_contracts:
        history = frozenset(
            b
            for b in history
            if epg.tree.frame(epg.block_frame[b]).address not in excluded_contracts
        )
    seeds = in_(g, {"CONTROL"})(history)
    return repeat(in_(g, {"DEPENDENCY"}))(seeds)


def transfer_blocks(epg: Epg) -> list[int]:
    """Blocks whose outgoing call edge carries asset flow."""
    result = []
    for frame in epg.tree.frames:
        edge = epg.graph.edges[epg.call_edge[frame.frame_id]]
        if edge.props.get("assetFlow") and epg.graph.vertex(edge.src).kind == "block":
            result.append(edge.src)
    return sorted(set(result))


def write_control(epg: Epg, block_vid: int) -> frozenset:
    """Control sources of the blocks that wrote the control sources of
    the given block."""
    g = epg.graph
    first = control_source(epg, block_vid)
    writers = in_(g, {"WRITE"})(first)
    result: set[int] = set()
    for writer in sorted(writers):
        result |= control_source(epg, writer)
    return frozenset(result)


def _subtree_flow_frames(epg: Epg) -> set[int]:
    return {flow.frame_id for flow in epg.flows}


def _block_of_flow(epg: Epg, flow) -> int | None:
    return epg.initiating_block.get(flow.frame_id)


# -- reentrancy ----------------------------------------------------------------


def detect_reentrancy(epg: Epg, cfg: DetectorConfig) -> list[Finding]:
    flow_frames = _subtree_flow_frames(epg)
    findings: list[Finding] = []
    seen: set[tuple] = set()
    for outer, inner in reentrant_pairs(epg):
        if not any(f in flow_frames for f in epg.tree.subtree(inner)):
            continue
        hits = control_block(epg, inner) & succ_block(epg, outer, inner)
        for block in sorted(hits):
            victim = epg.tree.frame(epg.block_frame[block]).address
            key = (victim, epg.block_pc(block))
            if key in seen:
                continue
            seen.add(key)
            findings.append(
                Finding(
                    rule=RULE_REENTRANCY,
                    victim=victim,
                    block_pc=epg.block_pc(block),
                    witnesses={
                        "v0": epg.call_edge[outer],
                        "v": epg.call_edge[inner],
                        "b": block,
                    },
                )
            )
    return findings


def detect_reentrancy_r1(epg: Epg, cfg: DetectorConfig) -> list[Finding]:
    """Reentrant pair plus a stale read: some writable source version is
    read inside the re-entered subtree while a strictly later version is
    written after that subtree completes."""
    g = epg.graph
    ref_of = {vid: ref for ref, vid in epg.source_vertex.items()}
    written_block = {
        record.ref: epg.step_block[record.step_index] for record in epg.shadow.writes
    }
    findings: list[Finding] = []
    seen: set[tuple] = set()
    for outer, inner in reentrant_pairs(epg):
        sub_frames = set(epg.tree.subtree(inner))
        sub_blocks = frozenset(epg.blocks_of_subtree(inner))
        reads = set()
        for vid in in_(g, {"CONTROL"})(sub_blocks):
            reads.add(ref_of[vid])
        for record in epg.shadow.writes:
            if record.frame_id in sub_frames:
                reads.update(record.tags)
        succ = succ_block(epg, outer, inner)
        for ref in sorted(reads):
            if ref.kind not in WRITABLE_KINDS:
                continue
            for later, block in written_block.items():
                if (
                    later.identifier == ref.identifier
                    and later.version > ref.version
                    and block in succ
                ):
                    victim = epg.tree.frame(epg.block_frame[block]).address
                    key = (victim, epg.block_pc(block))
                    if key in seen:
                        continue
                    seen.add(key)
                    findings.append(
                        Finding(
                            rule=RULE_REENTRANCY_R1,
                            victim=victim,
                            block_pc=epg.block_pc(block),
                            witnesses={
                                "v0": epg.call_edge[outer],
                                "v": epg.call_edge[inner],
                                "b": block,
                                "source": epg.source_vertex[later],
                            },
                            refinements_applied=["r1"],
                        )
                    )
    return findings


# -- faulty access control -----------------------------------------------------


def _attacker_contracts(epg: Epg, cfg: DetectorConfig) -> frozenset:
    created = {
        frame.callee
        for frame in epg.tree.frames
        if frame.opcode in ("CREATE", "CREATE2") and frame.parent_id is not None
    }
    return frozenset(created) | cfg.attacker_contracts


def _origin_satisfied(epg: Epg, cfg: DetectorConfig, sources: frozenset) -> bool:
    origin = epg.source_vertex.get(ORIGIN_REF)
    if origin is not None and origin in sources:
        return True
    if cfg.accept_root_caller:
        root_caller = epg.source_vertex.get(caller_ref(epg.tree.root_id))
        if root_caller is not None and root_caller in sources:
            return True
    return False


def _flow_groups(epg: Epg) -> list[set[int]]:
    """Union-find over flows: flows sharing any amount-provenance source
    belong to one group."""
    parent = list(range(len(epg.flows)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_tag: dict = {}
    for i, flow in enumerate(epg.flows):
        for tag in flow.amount_tags:
            j = by_tag.setdefault(tag, i)
            parent[find(i)] = find(j)
    groups: dict[int, set[int]] = {}
    for i in range(len(epg.flows)):
        groups.setdefault(find(i), set()).add(i)
    return list(groups.values())


def detect_faulty_access_control(epg: Epg, cfg: DetectorConfig) -> list[Finding]:
    refinements = cfg.refinements
    excluded = _attacker_contracts(epg, cfg) if "a1" in refinements else frozenset()
    root_calldata = calldata_ref(epg.tree.root_id)

    satisfied_flows: set[int] = set()
    if "a3" in refinements:
        for group in _flow_groups(epg):
            if any(root_calldata in epg.flows[i].amount_tags for i in group):
                satisfied_flows |= group

    findings: list[Finding] = []
    seen: set[tuple] = set()
    for block in transfer_blocks(epg):
        sources = control_source(epg, block, excluded)
        if _origin_satisfied(epg, cfg, sources):
            continue
        applied = [r for r in ("a1",) if r in refinements]
        flows_here = [
            i for i, f in enumerate(epg.flows) if _block_of_flow(epg, f) == block
        ]
        if "a2" in refinements:
            applied.append("a2")
            if not any(
                root_calldata in epg.flows[i].to_tags for i in flows_here
            ):
                continue
        if "a3" in refinements:
            applied.append("a3")
            if flows_here and all(i in satisfied_flows for i in flows_here):
                continue
        victim = epg.tree.frame(epg.block_frame[block]).address
        key = (victim, epg.block_pc(block))
        if key in seen:
            continue
        seen.add(key)
        findings.append(
            Finding(
                rule=RULE_FAC,
                victim=victim,
                block_pc=epg.block_pc(block),
                witnesses={"b": block},
                refinements_applied=applied,
            )
        )
    return findings


# -- price manipulation --------------------------------------------------------


def _net_deltas(epg: Epg) -> dict[str, dict[str, int]]:
    """contract -> asset -> received minus sent, over all flows."""
    deltas: dict[str, dict[str, int]] = {}
    for flow in epg.flows:
        deltas.setdefault(flow.dst, {}).setdefault(flow.asset, 0)
        deltas[flow.dst][flow.asset] += flow.amount
        deltas.setdefault(flow.src, {}).setdefault(flow.asset, 0)
        deltas[flow.src][flow.asset] -= flow.amount
    return deltas


def _swap_pools(epg: Epg) -> set[str]:
    """Contracts that both receive and send token flows spanning at
    least two distinct assets."""
    received: dict[str, set[str]] = {}
    sent: dict[str, set[str]] = {}
    for flow in epg.flows:
        if flow.asset == "ETH":
            continue
        received.setdefault(flow.dst, set()).add(flow.asset)
        sent.setdefault(flow.src, set()).add(flow.asset)
    pools = set()
    for contract in set(received) & set(sent):
        if len(received[contract] | sent[contract]) >= 2:
            pools.add(contract)
    return pools


def _pool_shift(epg: Epg, contract: str, deltas: dict[str, dict[str, int]]) -> float:
    """Largest relative balance change across the contract's tokens.
    A zero or unknown pre-transaction balance counts as a full shift."""
    shift = 0.0
    for asset, delta in deltas.get(contract, {}).items():
        if asset == "ETH" or delta == 0:
            continue
        pre = epg.envelope.pre_token_balances.get(asset, {}).get(contract, 0)
        shift = max(shift, abs(delta) / pre if pre > 0 else 1.0)
    return shift


def detect_price_manipulation(
    epg: Epg, cfg: DetectorConfig, prices: PriceTable | None = None
) -> tuple[list[Finding], list[str]]:
    refinements = cfg.refinements
    deltas = _net_deltas(epg)
    pools = _swap_pools(epg)
    findings: list[Finding] = []
    warnings: list[str] = []
    seen: set[tuple] = set()
    for block in transfer_blocks(epg):
        if _origin_satisfied(epg, cfg, write_control(epg, block)):
            continue
        victim = epg.tree.frame(epg.block_frame[block]).address
        applied: list[str] = []
        note = ""
        if "p1" in refinements:
            applied.append("p1")
            if victim not in pools or _pool_shift(epg, victim, deltas) < cfg.p1_threshold:
                continue
        if "p2" in refinements:
            applied.append("p2")
            usd = 0.0
            degraded = False
            for asset, delta in deltas.get(victim, {}).items():
                if delta == 0:
                    continue
                scale = 10**18 if asset == "ETH" else 1
                try:
                    rate = (prices or PriceTable()).price(
                        asset, epg.envelope.block_number
                    )
                except MissingPrice as exc:
                    degraded = True
                    warnings.append(str(exc))
                    continue
                usd += abs(delta) / scale * rate
            if degraded:
                note = "incomplete price data, USD filter not fully evaluated"
            elif usd < cfg.p2_usd_threshold:
                continue
        key = (victim, epg.block_pc(block))
        if key in seen:
            continue
        seen.add(key)
        findings.append(
            Finding(
                rule=RULE_PRICE,
                victim=victim,
                block_pc=epg.block_pc(block),
                witnesses={"b": block},
                refinements_applied=applied,
                note=note,
            )
        )
    return findings, warnings


# -- orchestration -------------------------------------------------------------


def run_detectors(
    epg: Epg, cfg: DetectorConfig, prices: PriceTable | None = None
) -> tuple[list[Finding], list[str]]:
    """Runs the configured detectors in canonical order."""
    cfg.validate()
    findings: list[Finding] = []
    warnings: list[str] = []
    for name in DETECTOR_NAMES:
        if name not in cfg.detectors:
            continue
        if name == "reentrancy":
            findings.extend(detect_reentrancy(epg, cfg))
            if "r1" in cfg.refinements:
                findings.extend(detect_reentrancy_r1(epg, cfg))
        elif name == "fac":
            findings.extend(detect_faulty_access_control(epg, cfg))
        elif name == "price":
            price_findings, price_warnings = detect_price_manipulation(
                epg, cfg, prices
            )
            findings.extend(price_findings)
            warnings.extend(price_warnings)
    return findings, warnings
