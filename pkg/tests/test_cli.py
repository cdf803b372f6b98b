import csv

import pytest

from cdrcommute.__main__ import main, parse_region_args
from cdrcommute.exceptions import ConfigError, ExitCodes

from .fixtures import MONDAY, commuter_events


def first_row(path) -> dict[str, str]:
    with path.open(encoding="utf-8", newline="") as fh:
        return next(csv.DictReader(fh))


def test_no_command(capsys):
    assert main([]) == ExitCodes.CONFIG_ERROR
    assert "Invalid command" in capsys.readouterr().err


def test_synth(tmp_path, capsys):
    outdir = tmp_path / "world"
    code = main(
        [
            "synth",
            str(outdir),
            "--seed",
            "3",
            "--n-agents",
            "5",
            "--days",
            "3",
            "--n-towers",
            "60",
            "--region-km",
            "10",
        ]
    )

    assert code == ExitCodes.SUCCESS
    assert "World of 5 agents" in capsys.readouterr().out
    for name in ("towers.csv", "calls.csv", "ground_truth.csv", "world.conf"):
        assert (outdir / name).is_file()
    assert "n_agents = 5" in (outdir / "world.conf").read_text(encoding="utf-8")


def test_synth_invalid_world(tmp_path):
    code = main(["synth", str(tmp_path), "--regime", "boat"])
    assert code == ExitCodes.CONFIG_ERROR


def test_analyze_evaluate_compare(small_world, tmp_path, capsys):
    """Test the commands chain over a synthetic world"""
    out = tmp_path / "out"
    code = main(
        [
            "analyze",
            "--cdr",
            str(small_world.calls),
            "--towers",
            str(small_world.towers),
            "--outdir",
            str(out),
        ]
    )
    assert code == ExitCodes.SUCCESS
    assert "Analyzed 40 users" in capsys.readouterr().out

    code = main(["evaluate", str(small_world.truth), "--outdir", str(out)])
    assert code == ExitCodes.SUCCESS
    assert "Home recovery" in capsys.readouterr().out
    assert (out / "recovery.json").is_file()

    home_work = out / "home_work.csv"
    code = main(
        ["compare", f"a={home_work}", f"b={home_work}", "-o", str(tmp_path / "ks")]
    )
    assert code == ExitCodes.SUCCESS
    assert "a vs b: D=0.0000" in capsys.readouterr().out
    assert (tmp_path / "ks" / "ks_pairs.csv").is_file()


def test_config_file_with_override(cdr_config, tmp_path):
    cfg = cdr_config(commuter_events("u1", MONDAY, days=3))
    conf = tmp_path / "run.conf"
    conf.write_text(
        "# three days of one commuter\n"
        f"cdr = {cfg.cdr}\n"
        f"towers = {cfg.towers}\n"
        f"outdir = {cfg.outdir}\n"
        "region = from_file\n",
        encoding="utf-8",
    )

    code = main(["analyze", "-c", str(conf), "--region", "from_flag"])

    assert code == ExitCodes.SUCCESS
    assert first_row(cfg.outdir / "fig2_summary.csv")["region"] == "from_flag"


def test_missing_input(tmp_path, capsys):
    code = main(
        [
            "analyze",
            "--cdr",
            str(tmp_path / "calls.csv"),
            "--towers",
            str(tmp_path / "towers.csv"),
        ]
    )
    assert code == ExitCodes.CONFIG_ERROR
    assert "not found" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text",
    ["colour = blue\n", "share_threshold = 2\n", "this is not a setting\n"],
)
def test_bad_config_file(tmp_path, text):
    conf = tmp_path / "bad.conf"
    conf.write_text(text, encoding="utf-8")
    assert main(["analyze", "-c", str(conf)]) == ExitCodes.CONFIG_ERROR


def test_missing_config_file(tmp_path):
    code = main(["analyze", "-c", str(tmp_path / "absent.conf")])
    assert code == ExitCodes.CONFIG_ERROR


def test_empty_cdr(cdr_config, capsys):
    cfg = cdr_config([])
    code = main(
        [
            "analyze",
            "--cdr",
            str(cfg.cdr),
            "--towers",
            str(cfg.towers),
            "--outdir",
            str(cfg.outdir),
        ]
    )
    assert code == ExitCodes.DATA_ERROR
    assert "No usable records" in capsys.readouterr().err
    assert (cfg.outdir / "report.json").is_file()


def test_parse_region_args(tmp_path):
    regions = parse_region_args([f"north={tmp_path}/n.csv", "south=s.csv"])
    assert sorted(regions) == ["north", "south"]
    assert str(regions["south"]) == "s.csv"

    for bad in (["north=n.csv"], ["north=n.csv", "north=m.csv"], ["n.csv", "x=y"]):
        with pytest.raises(ConfigError):
            parse_region_args(bad)
