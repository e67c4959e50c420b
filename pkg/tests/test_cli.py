"""End-to-end command-line tests.

Golden files under tests/golden/fixture were produced once from the 5x3
fixture and audited by hand (see the notes in tests/golden/README.md). Set
ECONRES_UPDATE_GOLDEN=1 to rewrite them after an intended output change.
"""

import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from econres.cli import main
from econres.testkit import write_fixture

GOLDEN = Path(__file__).parent / "golden" / "fixture"


def tree(root: Path, skip=("manifest.json",)) -> dict[str, bytes]:
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name not in skip
    }


@pytest.fixture()
def fixture_dir(tmp_path):
    write_fixture(tmp_path / "fx")
    return tmp_path / "fx"


def run(*argv):
    return main([str(a) for a in argv])


def test_golden_tree(fixture_dir):
    assert run("run", fixture_dir / "config.json") == 0
    produced = tree(fixture_dir / "out")
    if os.environ.get("ECONRES_UPDATE_GOLDEN"):
        shutil.rmtree(GOLDEN, ignore_errors=True)
        for rel, data in produced.items():
            (GOLDEN / rel).parent.mkdir(parents=True, exist_ok=True)
            (GOLDEN / rel).write_bytes(data)
    expected = tree(GOLDEN)
    assert sorted(produced) == sorted(expected)
    for rel in expected:
        assert produced[rel] == expected[rel], rel


def test_two_runs_identical_except_timestamp(fixture_dir, tmp_path):
    cfg = fixture_dir / "config.json"
    assert run("run", cfg, "--out", tmp_path / "a") == 0
    assert run("run", cfg, "--out", tmp_path / "b") == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    ma.pop("created_at"), mb.pop("created_at")
    assert ma == mb


def test_subcommands_compose_to_run(fixture_dir, tmp_path):
    cfg = fixture_dir / "config.json"
    full, chain = tmp_path / "full", tmp_path / "chain"
    assert run("run", cfg, "--out", full) == 0
    assert run("ingest", cfg, "--out", chain) == 0
    assert run("compute", cfg, "--out", chain) == 0
    for analysis in ("class-errorbars", "fixed-commute", "shifts", "continents"):
        assert run("analyze", analysis, "--out", chain) == 0
    assert run("render", "--out", chain) == 0
    assert tree(full) == tree(chain)


def test_manifest(fixture_dir):
    assert run("run", fixture_dir / "config.json") == 0
    out = fixture_dir / "out"
    m = json.loads((out / "manifest.json").read_text())
    assert m["created_at"]
    assert {s["location"] for s in m["sources"]} == {"gdp.csv", "covariates.csv"}
    assert all(s["content_hash"] and s["retrieved_at"] for s in m["sources"])
    import hashlib
    for rel, digest in m["outputs"].items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    assert "panel.csv" in m["outputs"] and "charts/class_r_en.svg" in m["outputs"]


def test_zero_enabled_shocks(fixture_dir, capsys):
    doc = json.loads((fixture_dir / "config.json").read_text())
    for s in doc["shocks"]:
        s["enabled"] = False
    bad = fixture_dir / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run("run", bad, "--out", fixture_dir / "o") == 2
    report = json.loads(capsys.readouterr().err)
    assert report["error"] == "ValidationError"
    assert json.loads((fixture_dir / "o" / "error.json").read_text()) == report


@pytest.mark.parametrize("flag, value", [("--level", "0.8"), ("--min-ref", "0")])
def test_invalid_overrides(fixture_dir, flag, value):
    assert run("run", fixture_dir / "config.json", flag, value) == 2


def test_unknown_config_key(fixture_dir):
    doc = json.loads((fixture_dir / "config.json").read_text())
    doc["colour"] = "blue"
    (fixture_dir / "c.json").write_text(json.dumps(doc))
    assert run("run", fixture_dir / "c.json") == 2


def test_malformed_data_exit_3(fixture_dir, capsys):
    gdp = fixture_dir / "gdp.csv"
    lines = gdp.read_text().splitlines()
    lines[2] = lines[2].replace(lines[2].split(",")[10], '"oops"', 1)
    gdp.write_text("\n".join(lines) + "\n")
    assert run("run", fixture_dir / "config.json") == 3
    report = json.loads(capsys.readouterr().err)
    assert report["error"] == "MalformedRow" and report["row"] == 3


def test_missing_data_file_exit_3(fixture_dir):
    (fixture_dir / "gdp.csv").unlink()
    assert run("run", fixture_dir / "config.json") == 3


def test_flags_override_config(fixture_dir, tmp_path):
    cfg = fixture_dir / "config.json"
    assert run("run", cfg, "--out", tmp_path / "o", "--level", "0.90", "--sign-convention", "as_printed") == 0
    table = (tmp_path / "o" / "tables" / "class_errorbars_components.csv").read_text().splitlines()
    assert all(line.endswith(",0.9") for line in table[1:])
    panel = json.loads((tmp_path / "o" / "panel.json").read_text())
    assert panel["config"]["sign_convention"] == "as_printed"
    classes = {(r["country"], r["year"]): r["class"] for r in panel["rows"]}
    assert classes[("BRA", 2007)] != "Low"  # the printed sign flips the downturn


def test_validate_clean_and_tampered(fixture_dir, capsys):
    assert run("run", fixture_dir / "config.json") == 0
    out = fixture_dir / "out"
    capsys.readouterr()
    assert run("validate", out / "panel.csv") == 0
    assert json.loads(capsys.readouterr().out)["violations"] == []

    lines = (out / "panel.csv").read_text().splitlines()
    cells = lines[1].split(",")
    cells[7] = "Low"  # BRA 1987 is High
    lines[1] = ",".join(cells)
    bad = out / "tampered.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert run("validate", bad) == 4
    violations = json.loads(capsys.readouterr().out)["violations"]
    assert {"row": 1, "country": "BRA", "shock": "Black Monday"}.items() <= violations[0].items()
    assert [v["check"] for v in violations] == ["class"]


def test_validate_reports_missing_pairs(fixture_dir, capsys):
    assert run("run", fixture_dir / "config.json") == 0
    lines = (fixture_dir / "out" / "panel.csv").read_text().splitlines()
    (fixture_dir / "short.csv").write_text("\n".join(lines[:-1]) + "\n")
    capsys.readouterr()
    assert run("validate", fixture_dir / "short.csv") == 4
    checks = [v["check"] for v in json.loads(capsys.readouterr().out)["violations"]]
    assert checks == ["row_count"]


def test_analyze_without_panel(tmp_path):
    assert run("analyze", "shifts", "--out", tmp_path) == 3


def test_boundaries_join(fixture_dir):
    fc = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"ISO_A3": code}, "geometry": None}
        for code in ("BRA", "JPN", "FRA")]}
    (fixture_dir / "world.geojson").write_text(json.dumps(fc))
    doc = json.loads((fixture_dir / "config.json").read_text())
    doc["boundaries"] = {"path": "world.geojson", "key": "ISO_A3"}
    (fixture_dir / "config.json").write_text(json.dumps(doc))
    assert run("run", fixture_dir / "config.json") == 0
    joined = json.loads((fixture_dir / "out" / "tables" / "choropleth.geojson").read_text())
    props = [f["properties"] for f in joined["features"]]
    assert [p["resilience_status"] for p in props] == ["Commute", "Commute", None]


def test_dropped_countries_reported(fixture_dir):
    gdp = fixture_dir / "gdp.csv"
    text = gdp.read_text()
    header = text.splitlines()[0]
    n_years = header.count(",") - 3
    extra = ['"World","WLD","GDP","NY.GDP.MKTP.KD",' + ",".join(["1.0"] * n_years),
             '"Greenland","GRL","GDP","NY.GDP.MKTP.KD",' + ",".join([""] * n_years)]
    gdp.write_text(text + "\n".join(extra) + "\n")
    assert run("run", fixture_dir / "config.json") == 0
    m = json.loads((fixture_dir / "out" / "manifest.json").read_text())
    assert m["dropped_unmapped"] == ["WLD"]
    assert m["dropped_no_data"] == ["GRL"]
    panel = json.loads((fixture_dir / "out" / "panel.json").read_text())
    assert len(panel["rows"]) == 15


def test_fetch_source(api, tmp_path):
    doc = {
        "gdp": {"fetch": {"base_url": api, "snapshot_dir": "snapshots"}},
        "shocks": [{"name": "test shock", "year": 2017}],
        "split": {"min_ref": 2, "min_perf": 2},
        "year_range": [2015, 2020],
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))
    assert run("run", cfg) == 0
    m = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert m["sources"][0]["kind"] == "http"
    assert list((tmp_path / "snapshots").glob("*.json"))
    rows = json.loads((tmp_path / "out" / "panel.json").read_text())["rows"]
    assert [(r["country"], r["not_computable_reason"]) for r in rows] == [
        ("BRA", None), ("GRC", None), ("KIR", "GapAtShock")]


def test_module_entry_point(fixture_dir):
    proc = subprocess.run([sys.executable, "-m", "econres", "validate", fixture_dir / "nowhere.json"],
                          capture_output=True, text=True)
    assert proc.returncode == 3
    assert json.loads(proc.stderr)["error"] == "DataError"
