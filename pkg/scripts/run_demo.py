#!/usr/bin/env python3
"""Run a complete scripted session end to end and print the artifacts.

Starts a server on an ephemeral port, attaches three scripted bots
(participant, DM, RN), plays out an image request, a clarification, and a
translated movement order, closes the session, then prints the transcript,
the statistics, and the replay verification result.
"""

import asyncio
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from ozbench.bot import attach_url, run_bot  # noqa: E402
from ozbench.corpus import stats, transcript, verify  # noqa: E402
from ozbench.protocol import Role  # noqa: E402
from ozbench.server import SessionServer  # noqa: E402
from ozbench.session import Session  # noqa: E402
from ozbench.simulator import SimConfig  # noqa: E402

WORLD = REPO / "worlds" / "room_6x4.json"
RULES = REPO / "rules" / "default.json"

PARTICIPANT = [
    {"wait_for": {"kind": "status", "payload": {"code": "running"}}},
    {"send": {"channel": "p_dm_speech", "kind": "chat",
              "payload": {"text": "can you send me a picture?"}}},
    {"wait_for": {"channel": "sim_sensor", "kind": "image"}},
    {"send": {"channel": "p_dm_speech", "kind": "chat",
              "payload": {"text": "turn left here"}}},
    {"wait_for": {"channel": "dm_p_chat", "kind": "chat", "text_contains": "Where exactly"}},
    {"send": {"channel": "p_dm_speech", "kind": "chat",
              "payload": {"text": "move forward five feet"}}},
    {"wait_for": {"channel": "dm_p_chat", "kind": "chat", "text_contains": "Done"}},
    {"close_session": True},
]

DM = [
    {"wait_for": {"channel": "p_dm_speech", "kind": "chat", "text_contains": "picture"}},
    {"send": {"channel": "dm_rn_chat", "kind": "command", "payload": {"text": "send image"}}},
    {"send": {"channel": "dm_p_chat", "kind": "chat",
              "payload": {"text": "Sending you an image."}}},
    {"wait_for": {"channel": "p_dm_speech", "kind": "chat", "text_contains": "here"}},
    {"send": {"channel": "dm_p_chat", "kind": "chat",
              "payload": {"text": "Where exactly? Please give me a distance or an amount to turn."}}},
    {"wait_for": {"channel": "p_dm_speech", "kind": "chat", "text_contains": "five feet"}},
    {"send": {"channel": "dm_rn_chat", "kind": "command",
              "payload": {"text": "move forward 1.524 m"}}},
    {"send": {"channel": "dm_p_chat", "kind": "chat",
              "payload": {"text": "Moving forward 1.524 m."}}},
    {"wait_for": {"channel": "rn_dm_speech", "kind": "chat", "text_contains": "done"}},
    {"send": {"channel": "dm_p_chat", "kind": "chat", "payload": {"text": "Done."}}},
]

RN = [
    {"wait_for": {"channel": "dm_rn_chat", "kind": "command", "text_contains": "send image"}},
    {"send": {"channel": "rn_sim_cmd", "kind": "motion",
              "payload": {"primitive": "capture", "magnitude": 0.0}}},
    {"wait_for": {"channel": "dm_rn_chat", "kind": "command", "text_contains": "move forward"}},
    {"send": {"channel": "rn_sim_cmd", "kind": "motion",
              "payload": {"primitive": "translate", "magnitude": 1.524}}},
    {"wait_for": {"kind": "status", "payload": {"code": "completed"}}},
    {"send": {"channel": "rn_dm_speech", "kind": "chat", "payload": {"text": "done"}}},
]


async def main() -> None:
    log_dir = Path(tempfile.mkdtemp(prefix="ozbench_demo_"))
    session = Session("demo", WORLD, RULES, log_dir, SimConfig(tick_ms=10))
    server = SessionServer(host="127.0.0.1", port=0, one_shot=True)
    server.add_session(session)
    run_task = asyncio.create_task(server.run())
    await server.wait_started()
    print(f"server on port {server.port}, log at {session.log_path}\n")

    await asyncio.gather(
        run_bot(attach_url("127.0.0.1", server.port, "demo", Role.PARTICIPANT),
                "demo", Role.PARTICIPANT, PARTICIPANT, linger_s=0.5),
        run_bot(attach_url("127.0.0.1", server.port, "demo", Role.DM),
                "demo", Role.DM, DM, linger_s=3.0),
        run_bot(attach_url("127.0.0.1", server.port, "demo", Role.RN),
                "demo", Role.RN, RN, linger_s=3.0),
    )
    server.stop()
    await run_task

    print("=== transcript ===")
    print(transcript(session.log_path))
    print("=== stats ===")
    print(stats(session.log_path).to_text())
    pose = session.sim.pose
    result = verify(session.log_path, WORLD,
                    (pose.x, pose.y, pose.theta), session.sim.grid.map_hash())
    print(f"=== replay verification: {'pass' if result.passed else 'FAIL'} ===")
    for diff in result.diffs:
        print(f"  {diff}")


if __name__ == "__main__":
    asyncio.run(main())
