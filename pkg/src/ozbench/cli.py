"""Command line entry points.

    ozbench serve --port 8080 --world w.json --rules rules/default.json \
        --log-dir logs --tick-ms 50
    ozbench replay <log> [--verify-pose x,y,theta --verify-map-hash <hex>]
    ozbench bot --role dm --script script.json
    ozbench transcript <log>
    ozbench stats <log> [--format json|text]
    ozbench verify <log> --world w.json [--pose x,y,theta] [--map-hash <hex>]

Exit codes: 0 pass/ok, 1 fail, 2 invalid input. OZBENCH_PORT overrides
--port when set.
"""

from __future__ import annotations

import asyncio
import json
import os
import sys
from pathlib import Path

import click

from ozbench import bot as botmod
from ozbench import corpus
from ozbench.eventlog import CorruptLogError, WorldMismatchError
from ozbench.guidelines import RulesError
from ozbench.protocol import Role
from ozbench.replay import replay as run_replay
from ozbench.server import SessionServer, generate_session_id
from ozbench.session import Session
from ozbench.simulator import SimConfig
from ozbench.world import WorldError


@click.group()
def main() -> None:
    """Two-wizard dialogue platform tools."""


def _parse_pose(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise click.BadParameter("expected x,y,theta")
    try:
        return float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise click.BadParameter("expected three numbers") from None


@main.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--world", required=True, type=click.Path())
@click.option("--rules", required=True, type=click.Path())
@click.option("--log-dir", required=True, type=click.Path())
@click.option("--tick-ms", type=int, default=50, show_default=True)
@click.option("--session-id", default=None, help="defaults to a random id")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="built console assets to serve under /ui/")
@click.option("--one-shot", is_flag=True, help="exit once the session closes")
def serve(port, host, world, rules, log_dir, tick_ms, session_id, ui_dir, one_shot):
    """Run the session server with one session."""
    env_port = os.environ.get("OZBENCH_PORT")
    if env_port is not None:
        try:
            port = int(env_port)
        except ValueError:
            raise click.ClickException(f"OZBENCH_PORT is not an integer: {env_port}")
    session_id = session_id or generate_session_id()
    config = SimConfig(tick_ms=tick_ms)
    try:
        session = Session(session_id, world, rules, log_dir, config)
    except (WorldError, RulesError, FileExistsError) as exc:
        raise click.ClickException(str(exc))
    server = SessionServer(host=host, port=port, ui_dir=ui_dir, one_shot=one_shot)
    server.add_session(session)
    click.echo(f"session {session_id}")
    click.echo(f"attach: ws://{host}:{port}/session/{session_id}/attach?role=<role>")
    if ui_dir:
        click.echo(f"consoles: http://{host}:{port}/ui/<role>?session={session_id}")
    click.echo(f"log: {session.log_path}")
    try:
        asyncio.run(server.run())
    except KeyboardInterrupt:
        session.close()


@main.command("replay")
@click.argument("log", type=click.Path())
@click.option("--world", type=click.Path(), default=None,
              help="world file; defaults to the copy embedded in the log header")
@click.option("--verify-pose", default=None, help="expected final pose x,y,theta")
@click.option("--verify-map-hash", default=None, help="expected discovered-map hash")
def replay_cmd(log, world, verify_pose, verify_map_hash):
    """Re-execute a log and print the final state summary."""
    expected_pose = _parse_pose(verify_pose) if verify_pose else None
    try:
        if expected_pose is not None or verify_map_hash is not None:
            result = corpus.verify(log, world, expected_pose, verify_map_hash)
            click.echo(json.dumps(result.summary.to_dict(), indent=2))
            if not result.passed:
                for diff in result.diffs:
                    click.echo(f"FAIL: {diff}", err=True)
                sys.exit(1)
            click.echo("verified")
        else:
            summary = run_replay(log, world)
            click.echo(json.dumps(summary.to_dict(), indent=2))
            if summary.divergences:
                for diff in summary.divergences:
                    click.echo(f"DIVERGENCE: {diff}", err=True)
                sys.exit(1)
    except (CorruptLogError, WorldMismatchError, WorldError, FileNotFoundError, OSError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)


@main.command("bot")
@click.option("--role", required=True,
              type=click.Choice([r.value for r in (Role.PARTICIPANT, Role.DM, Role.RN)]))
@click.option("--script", "script_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--session", "session_id", default="main", show_default=True)
@click.option("--timeout", type=float, default=30.0, show_default=True)
@click.option("--linger", type=float, default=0.0, show_default=True,
              help="seconds to keep receiving after the script finishes")
def bot_cmd(role, script_path, host, port, session_id, timeout, linger):
    """Run a headless scripted client against a live server."""
    role_ = Role.parse(role)
    try:
        steps = botmod.load_script(script_path)
    except (OSError, json.JSONDecodeError, botmod.BotError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    url = botmod.attach_url(host, port, session_id, role_)
    try:
        report = asyncio.run(
            botmod.run_bot(url, session_id, role_, steps, timeout_s=timeout, linger_s=linger)
        )
    except botmod.BotError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    click.echo(
        json.dumps(
            {
                "role": role,
                "sent": len(report.sent),
                "received": len(report.received),
                "received_kinds": report.received_kinds(),
            }
        )
    )


@main.command("transcript")
@click.argument("log", type=click.Path())
def transcript_cmd(log):
    """Render a log as a human-readable transcript."""
    try:
        click.echo(corpus.transcript(log), nl=False)
    except (CorruptLogError, FileNotFoundError, OSError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)


@main.command("stats")
@click.argument("log", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text",
              show_default=True)
def stats_cmd(log, fmt):
    """Channel, distance, and turn-taking statistics for a log."""
    try:
        result = corpus.stats(log)
    except (CorruptLogError, FileNotFoundError, OSError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    if fmt == "json":
        click.echo(json.dumps(result.to_dict(), indent=2))
    else:
        click.echo(result.to_text(), nl=False)


@main.command("verify")
@click.argument("log", type=click.Path())
@click.option("--world", required=True, type=click.Path())
@click.option("--pose", default=None, help="expected final pose x,y,theta")
@click.option("--map-hash", default=None, help="expected discovered-map hash")
def verify_cmd(log, world, pose, map_hash):
    """Replay a log against its world file and check the final state."""
    expected_pose = _parse_pose(pose) if pose else None
    try:
        result = corpus.verify(log, world, expected_pose, map_hash)
    except (CorruptLogError, WorldMismatchError, WorldError, FileNotFoundError, OSError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    if result.passed:
        click.echo("pass")
    else:
        for diff in result.diffs:
            click.echo(f"fail: {diff}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
