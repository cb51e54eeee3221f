"""Execution property graphs and flow-aware detectors for EVM traces."""

from .detectors import (
    DetectorConfig,
    Finding,
    PriceTable,
    detect_faulty_access_control,
    detect_price_manipulation,
    detect_reentrancy,
    detect_reentrancy_r1,
    run_detectors,
)
from .errors import EpgError
from .export import export_graph, import_graphson
from .graph import Epg, PropertyGraph, construct_epg
from .pipeline import analyze_document
from .shadow import FlowTracker, ShadowResult, SourceRef, load_allowlist
from .trace import (
    CallFrame,
    OpStep,
    TransactionEnvelope,
    parse_trace,
    reconstruct_frames,
    simulate,
)
from .traversal import compose, filter_, in_, out_, repeat, repeat_exclusive, tcon

__version__ = "0.1.0"

__all__ = [
    "CallFrame",
    "DetectorConfig",
    "Epg",
    "EpgError",
    "Finding",
    "FlowTracker",
    "PriceTable",
    "OpStep",
    "PropertyGraph",
    "ShadowResult",
    "SourceRef",
    "TransactionEnvelope",
    "analyze_document",
    "compose",
    "construct_epg",
    "detect_faulty_access_control",
    "detect_price_manipulation",
    "detect_reentrancy",
    "detect_reentrancy_r1",
    "export_graph",
    "filter_",
    "import_graphson",
    "in_",
    "load_allowlist",
    "out_",
    "parse_trace",
    "reconstruct_frames",
    "repeat",
    "repeat_exclusive",
    "run_detectors",
    "simulate",
    "tcon",
    "__version__",
]
