import json

from click.testing import CliRunner

from emrs.cli import main
from emrs.scenario import packaged_path


def test_run_single_case_writes_reports(tmp_path):
    out = tmp_path / "reports"
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["run", "--campaign", "campaign_default", "--out", str(out),
         "--case", "point-turn-15", "--no-figures"],
    )
    assert result.exit_code == 0, result.output
    assert "[PASS] point-turn-15" in result.output
    report = json.loads((out / "point-turn-15.json").read_text())
    assert report["verdict"] == "pass"
    assert (out / "point-turn-15_ticks.csv").exists()
    assert (out / "summary.json").exists()


def test_run_expected_flag_case_exits_zero(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["run", "--campaign", "campaign_default", "--out", str(tmp_path),
         "--case", "point-turn-20", "--no-figures"],
    )
    assert result.exit_code == 0, result.output
    assert "[PASS*] point-turn-20" in result.output


def test_run_unknown_case_fails_cleanly(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["run", "--campaign", "campaign_default", "--out", str(tmp_path),
         "--case", "nope", "--no-figures"],
    )
    assert result.exit_code == 2
    assert "error" in result.output


def test_validate_scenario_and_campaign():
    runner = CliRunner()
    for name, needle in (("pel_indoor", "scenario"), ("campaign_default", "campaign")):
        result = runner.invoke(main, ["validate", str(packaged_path(name))])
        assert result.exit_code == 0, result.output
        assert needle in result.output


def test_validate_rejects_broken_file(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: campaign\nname: x\nseed: -3\ncases: []\n")
    runner = CliRunner()
    result = runner.invoke(main, ["validate", str(bad)])
    assert result.exit_code == 2
    assert "error" in result.output
