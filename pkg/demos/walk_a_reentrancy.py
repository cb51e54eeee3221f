"""Walk the classic withdraw-then-update bug from trace to finding.

Loads the bundled attack fixture, prints the reconstructed call tree,
runs the reentrancy detector, and then shows the two graph facts the
rule intersects: blocks controlled by state the victim later writes,
and blocks executed after the nested call returned. Ends with the
patched trace (update before transfer) staying quiet.
"""
from pathlib import Path

from epg.detectors import DetectorConfig, control_block, reentrant_pairs, succ_block
from epg.graph import construct_epg
from epg.pipeline import analyze_document
from epg.trace import parse_trace

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load(name):
    text = (FIXTURES / f"{name}.json").read_text()
    env, steps = parse_trace(text)
    return text, construct_epg(env, steps)


def show_tree(epg):
    print("call tree:")
    for frame in epg.tree.frames:
        indent = "  " * frame.depth
        print(f"{indent}frame {frame.frame_id}: {frame.opcode} -> {frame.callee[:10]}..")


def main():
    text, epg = load("reentrancy_attack")
    show_tree(epg)

    pairs = reentrant_pairs(epg)
    print(f"\nsame-contract ancestor/descendant frame pairs: {pairs}")

    outer, inner = pairs[0]
    controlled = control_block(epg, inner)
    after = succ_block(epg, outer, inner)
    witness = sorted(controlled & after)
    print(f"blocks guarded by state the subtree later rewrites: {sorted(controlled)}")
    print(f"blocks that ran after the nested call returned:     {sorted(after)}")
    print(f"intersection (the smoking gun):                     {witness}")
    for vid in witness:
        print(f"  block {vid} sits at pc={epg.block_pc(vid)} "
              f"in frame {epg.block_frame[vid]}")

    report = analyze_document(text, DetectorConfig(detectors=("reentrancy",)))
    print("\ndetector output:")
    for finding in report["findings"]:
        print(f"  {finding['rule']}: victim {finding['victim']} "
              f"at block pc={finding['blockPc']}")

    patched_text, _ = load("reentrancy_patched")
    patched = analyze_document(patched_text, DetectorConfig(detectors=("reentrancy",)))
    print(f"\npatched variant (state updated before the transfer): "
          f"{len(patched['findings'])} findings")


if __name__ == "__main__":
    main()
