"""One-call analysis pipeline: trace text in, report dict out."""
from __future__ import annotations

import logging
import time

from .detectors import DetectorConfig, Finding, PriceTable, run_detectors
from .graph import construct_epg
from .trace import parse_trace

log = logging.getLogger("epg.pipeline")


def order_findings(findings: list[Finding]) -> list[Finding]:
    """Stable report order: rule name, then witness ids."""
    return sorted(findings, key=lambda f: (f.rule, sorted(f.witnesses.items())))


def analyze_document(
    text: str,
    cfg: DetectorConfig | None = None,
    prices: PriceTable | None = None,
    allowlist: set[str] | None = None,
) -> dict:
    """Replays one trace document and runs the configured detectors."""
    cfg = cfg or DetectorConfig()
    envelope, steps = parse_trace(text)
    started = time.monotonic()
    epg = construct_epg(envelope, steps, allowlist=allowlist)
    built = time.monotonic()
    findings, warnings = run_detectors(epg, cfg, prices)
    finished = time.monotonic()
    log.info(
        "%s: %d steps, %d vertices, %d findings",
        envelope.tx_hash,
        len(steps),
        epg.graph.vertex_count,
        len(findings),
    )
    return {
        "txHash": envelope.tx_hash,
        "detectorsRun": list(cfg.detectors),
        "findings": [f.to_dict() for f in order_findings(findings)],
        "stats": {
            "vertexCount": epg.graph.vertex_count,
            "edgeCount": epg.graph.edge_count,
            "buildMillis": int((built - started) * 1000),
            "traversalMillis": int((finished - built) * 1000),
        },
        "warnings": list(warnings),
    }
