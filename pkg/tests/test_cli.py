"""Command line surfaces and exit codes."""

import json
import os
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from conftest import REPO_ROOT, FakeTransport
from ozbench.cli import main
from ozbench.protocol import Channel, Envelope, MessageKind, Role, encode
from ozbench.session import Session
from ozbench.simulator import SimConfig

P, DM, RN = Role.PARTICIPANT, Role.DM, Role.RN


@pytest.fixture
def live_log(room_world, rules_path, tmp_path):
    session = Session("cli1", room_world, rules_path, tmp_path, SimConfig())
    for role in (P, DM, RN):
        session.attach(role, FakeTransport())
    env = Envelope(session="cli1", sender=RN, channel=Channel.RN_SIM_CMD,
                   kind=MessageKind.MOTION,
                   payload={"primitive": "translate", "magnitude": 1.524})
    session.handle_text(RN, encode(env).decode())
    while session.sim.busy:
        session.tick()
    pose = session.sim.pose
    map_hash = session.sim.grid.map_hash()
    session.close()
    return session.log_path, pose, map_hash


def test_transcript_cli(live_log):
    log_path, _, _ = live_log
    result = CliRunner().invoke(main, ["transcript", str(log_path)])
    assert result.exit_code == 0
    assert "[motion translate 1.524]" in result.output
    assert "[status: closed]" in result.output


def test_transcript_cli_missing_file(tmp_path):
    result = CliRunner().invoke(main, ["transcript", str(tmp_path / "none.jsonl")])
    assert result.exit_code == 2


def test_stats_cli_json_and_text(live_log):
    log_path, _, _ = live_log
    result = CliRunner().invoke(main, ["stats", str(log_path), "--format", "json"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["distance_commanded_m"] == pytest.approx(1.524)
    text = CliRunner().invoke(main, ["stats", str(log_path)])
    assert text.exit_code == 0
    assert "distance commanded" in text.output


def test_replay_cli(live_log):
    log_path, pose, _ = live_log
    result = CliRunner().invoke(main, ["replay", str(log_path)])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["final_pose"]["x"] == pytest.approx(pose.x)
    assert doc["divergences"] == []


def test_replay_cli_with_verification(live_log, room_world):
    log_path, pose, map_hash = live_log
    result = CliRunner().invoke(main, [
        "replay", str(log_path), "--world", str(room_world),
        "--verify-pose", f"{pose.x},{pose.y},{pose.theta}",
        "--verify-map-hash", map_hash,
    ])
    assert result.exit_code == 0, result.output
    assert "verified" in result.output


def test_verify_cli_exit_codes(live_log, room_world, pillars_world):
    log_path, pose, map_hash = live_log
    ok = CliRunner().invoke(main, [
        "verify", str(log_path), "--world", str(room_world),
        "--pose", f"{pose.x},{pose.y},{pose.theta}", "--map-hash", map_hash,
    ])
    assert ok.exit_code == 0
    assert "pass" in ok.output

    bad_pose = CliRunner().invoke(main, [
        "verify", str(log_path), "--world", str(room_world),
        "--pose", f"{pose.x + 1.0},{pose.y},{pose.theta}",
    ])
    assert bad_pose.exit_code == 1

    wrong_world = CliRunner().invoke(main, [
        "verify", str(log_path), "--world", str(pillars_world),
    ])
    assert wrong_world.exit_code == 2


def test_verify_cli_tampered_log(live_log, room_world, tmp_path):
    log_path, _, _ = live_log
    lines = Path(log_path).read_text().strip().split("\n")
    edited = []
    for line in lines:
        obj = json.loads(line)
        envelope = obj.get("envelope", {})
        if envelope.get("kind") == "motion":
            envelope["payload"]["magnitude"] = 0.5
        edited.append(json.dumps(obj, separators=(",", ":")))
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text("\n".join(edited) + "\n")
    result = CliRunner().invoke(main, ["verify", str(tampered), "--world", str(room_world)])
    assert result.exit_code == 1


def free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_serve_env_port_override_and_bot_close(tmp_path):
    """OZBENCH_PORT beats --port; a scripted bot can close the session and a
    one-shot server exits cleanly."""
    port = free_port()
    env = dict(os.environ, OZBENCH_PORT=str(port), PYTHONUNBUFFERED="1")
    serve_proc = subprocess.Popen(
        [
            sys.executable, "-m", "ozbench.cli", "serve",
            "--port", "1",  # would fail to bind; the env var must win
            "--world", str(REPO_ROOT / "worlds" / "room_6x4.json"),
            "--rules", str(REPO_ROOT / "rules" / "default.json"),
            "--log-dir", str(tmp_path),
            "--tick-ms", "5",
            "--session-id", "clie2e",
            "--one-shot",
        ],
        env=env,
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        deadline = time.time() + 15
        while time.time() < deadline:
            try:
                with socket.create_connection(("127.0.0.1", port), timeout=0.2):
                    break
            except OSError:
                time.sleep(0.1)
        else:
            raise AssertionError("server never came up on the env port")

        script = tmp_path / "close.json"
        script.write_text(json.dumps([{"close_session": True}]))
        bot = subprocess.run(
            [
                sys.executable, "-m", "ozbench.cli", "bot",
                "--role", "dm", "--script", str(script),
                "--port", str(port), "--session", "clie2e",
                "--linger", "0.2",
            ],
            capture_output=True,
            text=True,
            timeout=20,
        )
        assert bot.returncode == 0, bot.stderr
        serve_proc.wait(timeout=15)
        assert serve_proc.returncode == 0
    finally:
        if serve_proc.poll() is None:
            serve_proc.kill()
            serve_proc.wait()
