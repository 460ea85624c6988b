import json
import subprocess
import sys

import pytest

from diskmorse.cli import main, read_config_file, UsageError


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def pair_census(tmp_path_factory):
    out = tmp_path_factory.mktemp("pair")
    assert main(["census", "-n", "2", "--samples", "60", "--seed", "3", "--out", str(out)]) == 0
    return out


def test_minima_two_disks(tmp_path, capsys):
    code, out, err = run(["minima", "-n", 2, "--samples", 20, "--seed", 5, "--out", tmp_path], capsys)
    assert code == 0
    assert "seed=5" in err
    lines = out.splitlines()
    assert lines[0].startswith("# ") and json.loads(lines[0][2:])["base_seed"] == 5
    assert lines[2].startswith("0,0.2928932188,0,4,")
    assert (tmp_path / "census.json").exists() and (tmp_path / "census.csv").read_text() == out


def test_census_writes_histogram(pair_census):
    for name in ("census.json", "census.csv", "histogram.csv", "histogram_summary.json"):
        assert (pair_census / name).exists()
    hist = (pair_census / "histogram.csv").read_text().splitlines()
    assert hist[1].startswith("radius_lo,radius_hi,index0")
    meta = json.loads((pair_census / "census.json").read_text())["metadata"]
    assert meta["neb_cutoff"] == 0.6


@pytest.mark.parametrize("command", ["dendrogram", "betti", "render"])
def test_reports_from_census(pair_census, tmp_path, capsys, command):
    code, out, _ = run([command, pair_census / "census.json", "--out", tmp_path], capsys)
    assert code == 0
    assert any(tmp_path.iterdir())
    if command == "betti":
        meta = json.loads((tmp_path / "betti.csv").read_text().splitlines()[0][2:])
        assert meta["command"] == "betti" and meta["census"]["n"] == 2
        assert out.splitlines()[-1].split(",")[4:6] == ["1", "1"]


def test_verify_passes(pair_census, capsys):
    code, out, _ = run(["verify", pair_census / "census.json", "-n", 3], capsys)
    assert code == 0 and out.strip().endswith("ok")


@pytest.mark.parametrize(
    "args",
    [
        ["minima", "-n", "0"],
        ["minima", "--samples", "0"],
        ["minima", "--workers", "0"],
        ["minima", "--eps", "-1"],
        ["minima", "--hardness", "1"],
        ["minima", "--tol", "0"],
        ["census", "--neb-cutoff", "-0.5"],
        ["minima", "-n", "two"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_2(args, capsys):
    assert main(args) == 2


def test_missing_census_exits_1(tmp_path, capsys):
    code, _, err = run(["betti", tmp_path / "nope.json", "--out", tmp_path], capsys)
    assert code == 1 and "cannot read" in err


@pytest.mark.parametrize("text", ["{not json", '{"format": 1, "types": [{"radius": 0.2}]}', "[]"])
def test_malformed_census_is_a_schema_error(tmp_path, capsys, text):
    bad = tmp_path / "bad.json"
    bad.write_text(text)
    code, _, err = run(["dendrogram", bad, "--out", tmp_path], capsys)
    assert code == 1 and "schema error" in err


def test_empty_census_gives_empty_reports(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"format": 1, "spec": None, "types": [], "failures": {}}))
    code, _, _ = run(["betti", empty, "--out", tmp_path], capsys)
    assert code == 0
    assert (tmp_path / "betti.csv").read_text().splitlines()[1].startswith("radius,")


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("# two disks\nn = 2\nsamples = 10\nseed = 9\n")
    code, out, err = run(["minima", "--config", cfg, "--seed", 4, "--out", tmp_path], capsys)
    assert code == 0 and "seed=4" in err
    meta = json.loads(out.splitlines()[0][2:])
    assert meta["n"] == 2 and meta["samples"] == 10 and meta["base_seed"] == 4


@pytest.mark.parametrize("text", ["n 2\n", "colour = red\n", "n = two\n"])
def test_bad_config_files(tmp_path, text):
    cfg = tmp_path / "bad.conf"
    cfg.write_text(text)
    with pytest.raises(UsageError):
        read_config_file(cfg)
    assert main(["minima", "--config", str(cfg)]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "diskmorse.cli", "minima", "-n", "1", "--samples", "3", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert "0.5000000000" in res.stdout
