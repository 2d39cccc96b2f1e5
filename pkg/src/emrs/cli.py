"""Command-line entry points: run a campaign, validate a file, serve teleop."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import EmrsError, ParseError, SchemaViolation
from .harness import emit_reports, load_campaign, run_campaign
from .scenario import load_scenario, resolve_ref


@click.group()
def main():
    """Rover locomotion simulator and analogue test campaign runner."""


@main.command()
@click.option("--campaign", "campaign_file", required=True,
              help="Campaign file or packaged name (e.g. campaign_default)")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Report output directory")
@click.option("--seed", type=int, default=None, help="Override the campaign seed")
@click.option("--case", "case_id", default=None, help="Run a single case by id")
@click.option("--figures/--no-figures", default=True, help="Render report figures")
def run(campaign_file, out_dir, seed, case_id, figures):
    """Run a campaign and write reports; exit 0 iff every verdict is
    pass or pass-expected-flag."""
    try:
        campaign = load_campaign(resolve_ref(campaign_file))
        reports = run_campaign(campaign, seed=seed, only_case=case_id)
        used_seed = campaign.seed if seed is None else seed
        emit_reports(reports, out_dir, campaign_name=campaign.name,
                     seed=used_seed, figures=figures)
    except (ParseError, SchemaViolation, EmrsError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    ok = True
    for rep in reports:
        mark = {"pass": "PASS", "pass_expected_flag": "PASS*"}.get(rep.verdict, "FAIL")
        click.echo(f"[{mark}] {rep.id}" + (f"  ({'; '.join(rep.failures)})" if rep.failures else ""))
        ok &= rep.verdict in ("pass", "pass_expected_flag")
    click.echo(f"{len(reports)} case(s); reports in {out_dir}")
    sys.exit(0 if ok else 1)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def validate(file):
    """Strictly validate a scenario or campaign file."""
    import yaml

    try:
        doc = yaml.safe_load(Path(file).read_text())
        kind = doc.get("kind") if isinstance(doc, dict) else None
        if kind == "scenario":
            scen = load_scenario(file)
            click.echo(f"ok: scenario '{scen.name}'")
        elif kind == "campaign":
            camp = load_campaign(file)
            for case in camp.cases:
                load_scenario(resolve_ref(case.scenario_ref, camp.source.parent))
            click.echo(f"ok: campaign '{camp.name}' with {len(camp.cases)} case(s)")
        else:
            click.echo("error: kind must be 'scenario' or 'campaign'", err=True)
            sys.exit(2)
    except (ParseError, SchemaViolation, yaml.YAMLError, EmrsError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@main.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--scenario", "scenario_file", default="pel_indoor", show_default=True,
              help="Scenario file or packaged name")
@click.option("--seed", type=int, default=None)
@click.option("--console-dir", type=click.Path(file_okay=False), default=None,
              help="Directory of the built browser console (frontend/dist)")
def serve(port, scenario_file, seed, console_dir):
    """Serve the teleoperation WebSocket endpoint and console."""
    from .server import serve as run_server

    if console_dir is None:
        guess = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        console_dir = guess if guess.exists() else None
    try:
        run_server(scenario_file, port=port, seed=seed, console_dir=console_dir)
    except (ParseError, SchemaViolation, EmrsError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
