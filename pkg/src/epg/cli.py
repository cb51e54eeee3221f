"""Command-line front end: analyze traces and export graphs."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .detectors import (
    DETECTOR_NAMES,
    REFINEMENT_NAMES,
    DetectorConfig,
    PriceTable,
)
from .errors import EpgError, UnknownKey
from .export import VIEWS, export_graph
from .graph import construct_epg
from .pipeline import analyze_document
from .shadow import load_allowlist
from .trace import parse_trace

log = logging.getLogger("epg.cli")

CONFIG_KEYS = frozenset(
    {
        "detectors",
        "refinements",
        "p1_threshold",
        "p2_usd_threshold",
        "attacker_contracts",
        "allowlist",
        "prices",
        "accept_root_caller",
    }
)


def load_config(path: str) -> DetectorConfig:
    """Reads a TOML key/value file into a validated DetectorConfig.
    Relative side-input paths are resolved against the file's folder."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UnknownKey(f"unknown config keys: {sorted(unknown)}")
    base = Path(path).resolve().parent

    def side_path(key):
        value = data.get(key)
        if value is None:
            return None
        return str((base / value).resolve())

    cfg = DetectorConfig(
        detectors=tuple(data.get("detectors", DETECTOR_NAMES)),
        refinements=frozenset(data.get("refinements", ("p1", "p2"))),
        attacker_contracts=frozenset(
            a.lower() for a in data.get("attacker_contracts", ())
        ),
        p1_threshold=float(data.get("p1_threshold", 0.5)),
        p2_usd_threshold=float(data.get("p2_usd_threshold", 10_000.0)),
        accept_root_caller=bool(data.get("accept_root_caller", False)),
        allowlist=side_path("allowlist"),
        prices=side_path("prices"),
    )
    return cfg.validate()


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _effective_config(args) -> DetectorConfig:
    cfg = load_config(args.config) if args.config else DetectorConfig()
    overrides = {}
    if args.detectors:
        overrides["detectors"] = _csv_list(args.detectors)
    if args.refinements is not None:
        overrides["refinements"] = frozenset(_csv_list(args.refinements))
    if args.allowlist:
        overrides["allowlist"] = args.allowlist
    if args.prices:
        overrides["prices"] = args.prices
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg.validate()


def _analyze_one(path: Path, cfg: DetectorConfig, prices, allowlist) -> dict:
    log.info("analyzing %s", path)
    return analyze_document(
        path.read_text(), cfg, prices=prices, allowlist=allowlist
    )


def _emit(report: dict, out_path: str | None) -> None:
    blob = json.dumps(report, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(blob)
    else:
        sys.stdout.write(blob)


def cmd_analyze(args) -> int:
    cfg = _effective_config(args)
    prices = PriceTable.load(cfg.prices) if cfg.prices else None
    allowlist = load_allowlist(cfg.allowlist) if cfg.allowlist else None
    target = Path(args.trace)

    if target.is_dir():
        # batch mode: one report per trace file in the folder
        any_findings = False
        failures = 0
        for trace in sorted(target.glob("*.json")):
            try:
                report = _analyze_one(trace, cfg, prices, allowlist)
            except (EpgError, OSError, ValueError) as exc:
                failures += 1
                print(f"error: {trace}: {exc}", file=sys.stderr)
                continue
            any_findings = any_findings or bool(report["findings"])
            if args.out:
                out_dir = Path(args.out)
                out_dir.mkdir(parents=True, exist_ok=True)
                _emit(report, str(out_dir / f"{trace.stem}.report.json"))
            else:
                sys.stdout.write(json.dumps(report) + "\n")
        if failures:
            return 1
        return 2 if any_findings else 0

    try:
        report = _analyze_one(target, cfg, prices, allowlist)
    except (EpgError, OSError, ValueError) as exc:
        print(f"error: {target}: {exc}", file=sys.stderr)
        return 1
    _emit(report, args.out)
    return 2 if report["findings"] else 0


def cmd_export(args) -> int:
    path = Path(args.trace)
    try:
        envelope, steps = parse_trace(path.read_text())
        epg = construct_epg(envelope, steps)
        export_graph(epg, args.format, sys.stdout, args.graph)
    except (EpgError, OSError, ValueError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epg",
        description="Replay EVM transaction traces, build execution "
        "property graphs, and scan them for attack patterns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run detectors over a trace")
    analyze.add_argument("trace", help="trace file, or a folder of traces")
    analyze.add_argument("--config", help="TOML configuration file")
    analyze.add_argument(
        "--detectors", help=f"comma list from: {', '.join(DETECTOR_NAMES)}"
    )
    analyze.add_argument(
        "--refinements", help=f"comma list from: {', '.join(REFINEMENT_NAMES)}"
    )
    analyze.add_argument("--prices", help="CSV price table (token,block,usd_price)")
    analyze.add_argument("--allowlist", help="token allowlist file, one address per line")
    analyze.add_argument("--out", help="write the report here instead of stdout")
    analyze.set_defaults(func=cmd_analyze)

    export = sub.add_parser("export", help="serialize a graph view")
    export.add_argument("trace", help="trace file")
    export.add_argument(
        "--graph", choices=sorted(VIEWS), default="epg", help="which view to export"
    )
    export.add_argument(
        "--format", choices=("dot", "graphson"), default="dot", help="output format"
    )
    export.set_defaults(func=cmd_export)
    return parser


def _configure_logging() -> None:
    name = os.environ.get("EPG_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EpgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
