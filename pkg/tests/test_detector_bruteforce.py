"""Exhaustive re-derivation of the reentrancy rule.

The detector navigates the graph through the traversal combinators.
This module recomputes the same (outer, inner, block) triples from the
raw shadow records and step indices, with no graph walking at all, and
demands exact agreement on every fixture.
"""
import json
from pathlib import Path

import pytest

from epg.detectors import (
    DetectorConfig,
    control_block,
    detect_reentrancy,
    reentrant_pairs,
    succ_block,
)
from epg.graph import construct_epg
from epg.trace import parse_trace

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_cache: dict[str, object] = {}


def fixture_epg(name):
    if name not in _cache:
        env, steps = parse_trace((FIXTURES / f"{name}.json").read_text())
        _cache[name] = construct_epg(env, steps)
    return _cache[name]


ALL_FIXTURES = sorted(json.loads((FIXTURES / "manifest.json").read_text()))


def brute_pairs(tree):
    out = []
    for frame in tree.frames:
        anc = tree.parent(frame.frame_id)
        while anc is not None:
            if tree.frame(anc).address == frame.address:
                out.append((anc, frame.frame_id))
            anc = tree.parent(anc)
    return sorted(out)


def brute_subtree(tree, frame_id):
    out = [frame_id]
    for child in tree.children(frame_id):
        out.extend(brute_subtree(tree, child))
    return out


def brute_control_blocks(epg, inner):
    """Blocks writing any version of an identifier that some branch in
    the subtree was conditioned on, straight from the shadow records."""
    sub = set(brute_subtree(epg.tree, inner))
    idents = set()
    for branch in epg.shadow.branches:
        if branch.frame_id in sub:
            idents.update(tag.identifier for tag in branch.tags)
    return {
        epg.step_block[w.step_index]
        for w in epg.shadow.writes
        if w.ref.identifier in idents
    }


def brute_succ_blocks(epg, outer, inner):
    """Blocks of the outer subtree whose first step runs after the last
    step executed anywhere under the inner frame."""
    last = 0
    for fid in brute_subtree(epg.tree, inner):
        frame = epg.tree.frame(fid)
        end = frame.step_range[1] if frame.step_range else frame.call_step
        last = max(last, end)
    scope = set(brute_subtree(epg.tree, outer))
    return {
        block
        for block, fid in epg.block_frame.items()
        if fid in scope and epg.block_span[block][0] > last
    }


def brute_findings(epg):
    flow_frames = {flow.frame_id for flow in epg.flows}
    out, seen = [], set()
    for outer, inner in brute_pairs(epg.tree):
        if not (set(brute_subtree(epg.tree, inner)) & flow_frames):
            continue
        hits = brute_control_blocks(epg, inner) & brute_succ_blocks(epg, outer, inner)
        for block in sorted(hits):
            victim = epg.tree.frame(epg.block_frame[block]).address
            key = (victim, epg.block_pc(block))
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def test_corpus_is_large_enough():
    assert len(ALL_FIXTURES) >= 12


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_pair_enumeration_matches(name):
    epg = fixture_epg(name)
    assert reentrant_pairs(epg) == brute_pairs(epg.tree)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_rule_sets_match_exhaustive_scan(name):
    epg = fixture_epg(name)
    for outer, inner in reentrant_pairs(epg):
        assert control_block(epg, inner) == brute_control_blocks(epg, inner), (
            f"control blocks diverge for pair ({outer}, {inner})"
        )
        assert succ_block(epg, outer, inner) == brute_succ_blocks(
            epg, outer, inner
        ), f"successor blocks diverge for pair ({outer}, {inner})"


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_detector_output_matches_exhaustive_scan(name):
    epg = fixture_epg(name)
    found = [
        (f.victim, f.block_pc) for f in detect_reentrancy(epg, DetectorConfig())
    ]
    assert found == brute_findings(epg)
