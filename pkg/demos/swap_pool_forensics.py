"""Trace a synthetic pump through a two-token pool and price the damage.

Loads the bundled self-swap fixture, lists the asset flows the replay
attributed to each call edge, tallies per-contract net deltas, shows
the reserve-shift ratio the pool filter uses, and finally runs the
price detector twice: once bare, once with the shift and USD filters
plus the bundled price table.
"""
from collections import defaultdict
from pathlib import Path

from epg.detectors import DetectorConfig, PriceTable, detect_price_manipulation
from epg.graph import construct_epg
from epg.trace import parse_trace

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def short(addr):
    return addr[:6] + ".." + addr[-4:]


def main():
    env, steps = parse_trace((FIXTURES / "price_pump.json").read_text())
    epg = construct_epg(env, steps)

    print("asset flows recorded during replay:")
    for flow in epg.flows:
        asset = "ETH" if flow.asset == "ETH" else short(flow.asset)
        print(f"  step {flow.step_index:>3}: {asset:>12} "
              f"{short(flow.src)} -> {short(flow.dst)}  amount={flow.amount}")

    deltas = defaultdict(lambda: defaultdict(int))
    for flow in epg.flows:
        deltas[flow.dst][flow.asset] += flow.amount
        deltas[flow.src][flow.asset] -= flow.amount
    print("\nnet position change per contract:")
    for addr, by_asset in sorted(deltas.items()):
        moves = ", ".join(
            f"{'ETH' if a == 'ETH' else short(a)}: {d:+d}"
            for a, d in sorted(by_asset.items()) if d
        )
        if moves:
            print(f"  {short(addr)}  {moves}")

    print("\nreserve shift against pre-transaction balances:")
    for token, holders in sorted(env.pre_token_balances.items()):
        for holder, before in sorted(holders.items()):
            change = deltas[holder][token]
            if change and before:
                print(f"  {short(holder)} held {before} of {short(token)}, "
                      f"moved {change:+d} ({abs(change) / before:.0%})")

    bare, _ = detect_price_manipulation(epg, DetectorConfig(refinements=frozenset()))
    print(f"\nbare rule (origin never guards the payout): {len(bare)} findings")

    prices = PriceTable.load(str(FIXTURES / "prices.csv"))
    refined, warnings = detect_price_manipulation(epg, DetectorConfig(), prices)
    print("with the pool-shift and USD filters:")
    for finding in refined:
        print(f"  {finding.rule}: victim {short(finding.victim)} "
              f"at block pc={finding.block_pc}")
    print(f"warnings: {warnings or 'none'}")


if __name__ == "__main__":
    main()
