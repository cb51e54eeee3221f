"""Command-line behavior: exit codes, config handling, report schema."""
import json
import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from epg.cli import build_parser, load_config, main
from epg.detectors import DetectorConfig
from epg.errors import BadThreshold, UnknownKey

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

MANIFEST = json.loads((FIXTURES / "manifest.json").read_text())
ALL_FIXTURES = sorted(MANIFEST)


def expected_exit(name):
    exp = MANIFEST[name]["expected"]
    hits = exp.get("reentrancy", 0) + exp.get("fac", 0) + exp.get("price", 0)
    return 2 if hits else 0


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_exit_codes_follow_the_finding_contract(name, capsys):
    code, out, err = run_cli(["analyze", str(FIXTURES / f"{name}.json")], capsys)
    assert code == expected_exit(name)
    report = json.loads(out)
    assert bool(report["findings"]) == (code == 2)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_reports_validate_against_the_shipped_schema(name, capsys):
    schema = json.loads(
        resources.files("epg").joinpath("report_schema.json").read_text()
    )
    code, out, err = run_cli(
        [
            "analyze",
            str(FIXTURES / f"{name}.json"),
            "--refinements",
            "r1,a1,a2,a3,p1,p2",
            "--prices",
            str(FIXTURES / "prices.csv"),
        ],
        capsys,
    )
    assert code in (0, 2)
    jsonschema.validate(json.loads(out), schema)


def test_malformed_trace_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"tx": {}}')
    code, out, err = run_cli(["analyze", str(bad)], capsys)
    assert code == 1
    assert out == ""
    assert "error:" in err and "bad.json" in err


def test_missing_file_exits_one(capsys):
    code, out, err = run_cli(["analyze", str(FIXTURES / "no_such.json")], capsys)
    assert code == 1
    assert "error:" in err


def test_unparseable_json_exits_one(tmp_path, capsys):
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    code, out, err = run_cli(["analyze", str(garbled)], capsys)
    assert code == 1
    assert "error:" in err


# -- config files ------------------------------------------------------------


def test_empty_config_gives_defaults(tmp_path):
    empty = tmp_path / "empty.toml"
    empty.write_text("")
    assert load_config(str(empty)) == DetectorConfig()


def test_shipped_config_round_trips():
    cfg = load_config(str(FIXTURES / "config.toml"))
    assert cfg.detectors == ("reentrancy", "fac", "price")
    assert cfg.refinements == frozenset({"p1", "p2"})
    assert cfg.p1_threshold == 0.5
    assert cfg.p2_usd_threshold == 10000.0
    assert cfg.accept_root_caller is False


def test_unknown_config_key_is_rejected(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('p1_treshold = 0.4\n')
    with pytest.raises(UnknownKey):
        load_config(str(cfg))


def test_bad_threshold_in_config_is_rejected(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("p1_threshold = 1.5\n")
    with pytest.raises(BadThreshold):
        load_config(str(cfg))


def test_attacker_contracts_are_lowercased(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('attacker_contracts = ["0xAABB00000000000000000000000000000000CCDD"]\n')
    loaded = load_config(str(cfg))
    assert loaded.attacker_contracts == frozenset(
        {"0xaabb00000000000000000000000000000000ccdd"}
    )


def test_config_side_paths_resolve_against_the_config_dir(tmp_path):
    (tmp_path / "tokens.txt").write_text("0x" + "63" * 20 + "\n")
    (tmp_path / "prices.csv").write_text("token,block,usd_price\nETH,1,2.0\n")
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('allowlist = "tokens.txt"\nprices = "prices.csv"\n')
    loaded = load_config(str(cfg))
    # resolution must not depend on the process working directory
    assert loaded.allowlist == str(tmp_path / "tokens.txt")
    assert loaded.prices == str(tmp_path / "prices.csv")


def test_flag_overrides_beat_the_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('detectors = ["price"]\n')
    code, out, err = run_cli(
        [
            "analyze",
            str(FIXTURES / "reentrancy_attack.json"),
            "--config",
            str(cfg),
            "--detectors",
            "reentrancy",
        ],
        capsys,
    )
    report = json.loads(out)
    assert report["detectorsRun"] == ["reentrancy"]
    assert {f["rule"] for f in report["findings"]} == {"Reentrancy"}
    assert code == 2


def test_unknown_detector_flag_exits_one(capsys):
    code, out, err = run_cli(
        ["analyze", str(FIXTURES / "empty_transfer.json"), "--detectors", "sandwich"],
        capsys,
    )
    assert code == 1
    assert "error:" in err


def test_empty_refinements_flag_disables_the_defaults(capsys):
    code, out, err = run_cli(
        ["analyze", str(FIXTURES / "price_small_shift.json"), "--refinements", ""],
        capsys,
    )
    report = json.loads(out)
    # without P1 the generic price rule fires on the small swap too
    assert any(f["rule"] == "PriceManipulation" for f in report["findings"])
    assert code == 2


def test_detector_subset_limits_the_report(capsys):
    code, out, err = run_cli(
        ["analyze", str(FIXTURES / "reentrancy_attack.json"), "--detectors", "fac"],
        capsys,
    )
    report = json.loads(out)
    assert report["detectorsRun"] == ["fac"]
    assert {f["rule"] for f in report["findings"]} == {"FaultyAccessControl"}


def test_out_flag_writes_the_report_file(tmp_path, capsys):
    out_file = tmp_path / "report.json"
    code, out, err = run_cli(
        [
            "analyze",
            str(FIXTURES / "reentrancy_attack.json"),
            "--out",
            str(out_file),
        ],
        capsys,
    )
    assert code == 2
    assert out == ""
    report = json.loads(out_file.read_text())
    assert report["txHash"].startswith("0x")
    assert any(f["rule"] == "Reentrancy" for f in report["findings"])


def test_prices_flag_fills_in_p2(capsys):
    code, out, err = run_cli(
        [
            "analyze",
            str(FIXTURES / "price_pump.json"),
            "--prices",
            str(FIXTURES / "prices.csv"),
        ],
        capsys,
    )
    report = json.loads(out)
    price = [f for f in report["findings"] if f["rule"] == "PriceManipulation"]
    assert len(price) == 2
    assert report["warnings"] == []
    assert all("note" not in f for f in price)


def test_without_prices_p2_degrades_with_a_warning(capsys):
    code, out, err = run_cli(
        ["analyze", str(FIXTURES / "price_pump.json")], capsys
    )
    report = json.loads(out)
    price = [f for f in report["findings"] if f["rule"] == "PriceManipulation"]
    assert len(price) == 2
    assert report["warnings"]
    assert all("note" in f for f in price)


# -- batch mode ---------------------------------------------------------------


def _copy_fixture(name, folder):
    (folder / f"{name}.json").write_text((FIXTURES / f"{name}.json").read_text())


def test_batch_mode_streams_one_report_per_trace(tmp_path, capsys):
    _copy_fixture("empty_transfer", tmp_path)
    _copy_fixture("reentrancy_attack", tmp_path)
    code, out, err = run_cli(["analyze", str(tmp_path)], capsys)
    assert code == 2
    lines = [json.loads(line) for line in out.splitlines()]
    assert len(lines) == 2
    # sorted filename order: the clean trace first
    assert lines[0]["findings"] == []
    assert lines[1]["findings"]


def test_batch_mode_without_findings_exits_zero(tmp_path, capsys):
    _copy_fixture("empty_transfer", tmp_path)
    _copy_fixture("call_revert", tmp_path)
    code, out, err = run_cli(["analyze", str(tmp_path)], capsys)
    assert code == 0
    assert len(out.splitlines()) == 2


def test_batch_mode_reports_file_errors_and_exits_one(tmp_path, capsys):
    _copy_fixture("reentrancy_attack", tmp_path)
    (tmp_path / "broken.json").write_text("{}")
    code, out, err = run_cli(["analyze", str(tmp_path)], capsys)
    assert code == 1
    assert "broken.json" in err
    # the healthy trace is still analyzed
    assert len(out.splitlines()) == 1


def test_batch_mode_out_writes_a_report_folder(tmp_path, capsys):
    traces = tmp_path / "traces"
    traces.mkdir()
    _copy_fixture("empty_transfer", traces)
    _copy_fixture("fac_unguarded", traces)
    reports = tmp_path / "reports"
    code, out, err = run_cli(
        ["analyze", str(traces), "--out", str(reports)], capsys
    )
    assert code == 2
    assert out == ""
    names = sorted(p.name for p in reports.iterdir())
    assert names == ["empty_transfer.report.json", "fac_unguarded.report.json"]
    report = json.loads((reports / "fac_unguarded.report.json").read_text())
    assert any(f["rule"] == "FaultyAccessControl" for f in report["findings"])


# -- export -------------------------------------------------------------------


def test_export_ctg_matches_the_golden_file(capsys):
    code, out, err = run_cli(
        [
            "export",
            str(FIXTURES / "reentrancy_attack.json"),
            "--graph",
            "ctg",
            "--format",
            "dot",
        ],
        capsys,
    )
    assert code == 0
    assert out == (GOLDEN / "foo_bar_ctg.dot").read_text()


def test_export_graphson_emits_valid_ndjson(capsys):
    code, out, err = run_cli(
        [
            "export",
            str(FIXTURES / "benign_nested.json"),
            "--graph",
            "epg",
            "--format",
            "graphson",
        ],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines
    for line in lines:
        vertex = json.loads(line)
        assert {"id", "label"} <= set(vertex)


def test_export_default_view_is_the_full_graph(capsys):
    code, out, err = run_cli(
        ["export", str(FIXTURES / "empty_transfer.json")], capsys
    )
    assert code == 0
    assert out.startswith("digraph epg {")


def test_export_rejects_unknown_choices(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["export", str(FIXTURES / "empty_transfer.json"), "--graph", "nope"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_export_bad_trace_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    code, out, err = run_cli(["export", str(bad)], capsys)
    assert code == 1
    assert "error:" in err


# -- process-level behavior ---------------------------------------------------


def _run_process(argv, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "epg.cli", *argv],
        capture_output=True,
        text=True,
        env=env,
        cwd=str(FIXTURES.parent),
    )


def test_process_exit_codes_match_in_process_runs():
    hit = _run_process(["analyze", str(FIXTURES / "reentrancy_attack.json")])
    clean = _run_process(["analyze", str(FIXTURES / "empty_transfer.json")])
    broken = _run_process(["analyze", str(FIXTURES / "manifest.json")])
    assert hit.returncode == 2
    assert clean.returncode == 0
    assert broken.returncode == 1
    json.loads(hit.stdout)


def test_log_env_var_raises_verbosity():
    quiet = _run_process(["analyze", str(FIXTURES / "empty_transfer.json")])
    chatty = _run_process(
        ["analyze", str(FIXTURES / "empty_transfer.json")],
        env_extra={"EPG_LOG": "info"},
    )
    assert "INFO" not in quiet.stderr
    assert "INFO epg" in chatty.stderr


def test_log_env_var_ignores_nonsense_levels():
    result = _run_process(
        ["analyze", str(FIXTURES / "empty_transfer.json")],
        env_extra={"EPG_LOG": "blorp"},
    )
    assert result.returncode == 0


def test_parser_knows_both_commands():
    parser = build_parser()
    args = parser.parse_args(["analyze", "x.json", "--detectors", "fac"])
    assert args.command == "analyze"
    args = parser.parse_args(["export", "x.json", "--format", "graphson"])
    assert args.command == "export" and args.format == "graphson"
