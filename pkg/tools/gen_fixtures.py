"""Regenerate the trace corpus under fixtures/.

Runs every scenario through the tracing interpreter, validates the result
against the scenario's own post-state checks, and freezes trace documents,
the manifest, the price table, the token allowlist, and a sample config.
"""
from __future__ import annotations

import json
from pathlib import Path

from fixturegen.asm import assemble
from fixturegen.keccak import keccak256
from fixturegen.minievm import BLOCK_NUMBER, MiniEvm, World
from fixturegen.scenarios import EOA, Scenario, all_scenarios

PKG_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = PKG_ROOT / "fixtures"

TOKEN_PRICES = {"ETH": 2000.0}


def build(scenario: Scenario) -> tuple[dict, dict]:
    world = World()
    world.account(EOA).balance = scenario.eoa_balance
    addrs: dict[str, str] = {}
    marks: dict[str, dict[str, int]] = {}
    for name, (addr, items, storage, balance) in scenario.contracts.items():
        code, offsets = assemble(items)
        acct = world.account(addr)
        acct.code = code
        acct.storage = dict(storage)
        acct.balance = balance
        addrs[name] = addr
        if offsets:
            marks[name] = offsets

    def resolve(holder: str) -> str:
        if holder == "eoa":
            return EOA
        return addrs.get(holder, holder)

    tx_hash = "0x" + keccak256(scenario.name.encode()).hex()
    evm = MiniEvm(world, origin=EOA)
    doc = evm.transact(
        sender=EOA,
        to=addrs[scenario.tx_to],
        value=scenario.tx_value,
        data=scenario.tx_input,
        tx_hash=tx_hash,
    )
    if scenario.token_balances:
        doc["tx"]["preTokenBalances"] = {
            addrs[token]: {resolve(h): amt for h, amt in holders.items()}
            for token, holders in scenario.token_balances.items()
        }
    if scenario.check is not None:
        scenario.check(world, addrs)

    entry = {
        "contracts": addrs,
        "marks": marks,
        "expected": scenario.expected,
    }
    return doc, entry


def validate(doc: dict, entry: dict) -> None:
    # The library must accept the document and see the intended frame shape.
    from epg.trace import parse_trace, reconstruct_frames

    envelope, steps = parse_trace(json.dumps(doc))
    tree = reconstruct_frames(envelope, steps)
    want = entry["expected"].get("frames")
    got = len(tree.frames)
    if want is not None and got != want:
        raise AssertionError(f"frame count {got}, expected {want}")


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    manifest: dict[str, dict] = {}
    tokens: set[str] = set()
    for scenario in all_scenarios():
        doc, entry = build(scenario)
        validate(doc, entry)
        path = FIXTURES / f"{scenario.name}.json"
        path.write_text(json.dumps(doc, indent=1) + "\n")
        manifest[scenario.name] = entry
        tokens.update(doc["tx"].get("preTokenBalances", {}))
        for name, addr in entry["contracts"].items():
            if name.startswith("tok") or name == "token":
                tokens.add(addr)
        print(f"{scenario.name}: {len(doc['trace']['structLogs'])} steps")

    (FIXTURES / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")

    rows = ["token,block,usd_price", f"ETH,{BLOCK_NUMBER},{TOKEN_PRICES['ETH']}"]
    for addr in sorted(tokens):
        rows.append(f"{addr},{BLOCK_NUMBER},2.0")
    (FIXTURES / "prices.csv").write_text("\n".join(rows) + "\n")

    (FIXTURES / "allowlist.txt").write_text("".join(a + "\n" for a in sorted(tokens)))

    (FIXTURES / "config.toml").write_text(
        "\n".join(
            [
                'detectors = ["reentrancy", "fac", "price"]',
                'refinements = ["p1", "p2"]',
                "p1_threshold = 0.5",
                "p2_usd_threshold = 10000.0",
                "accept_root_caller = false",
                "attacker_contracts = []",
                "",
            ]
        )
    )
    print(f"wrote {len(manifest)} fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
