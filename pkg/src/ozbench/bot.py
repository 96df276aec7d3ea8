"""Headless scripted client: plays one role from a JSON script.

A script is an array of steps, each optionally waiting for a frame and
then sending one:

    [
      {"wait_for": {"channel": "dm_p_chat", "kind": "chat",
                    "text_contains": "image"}},
      {"send": {"channel": "p_dm_speech", "kind": "chat",
                "payload": {"text": "please send a picture"}}},
      {"close_session": true}
    ]

wait_for matches on any of: channel, kind, from, text_contains (substring
of payload.text), payload (subset of payload keys). Frames that do not
match are kept; every frame the bot ever received is in its report, which
is what the integration assertions run against.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import websockets

from ozbench.protocol import Channel, DecodeError, Envelope, MessageKind, Role, decode, encode


class BotError(RuntimeError):
    pass


@dataclass
class BotReport:
    role: Role
    received: list[Envelope] = field(default_factory=list)
    sent: list[Envelope] = field(default_factory=list)

    def received_kinds(self) -> list[str]:
        return [e.kind.value for e in self.received]


def _matches(envelope: Envelope, spec: dict[str, Any]) -> bool:
    if "channel" in spec and envelope.channel.value != spec["channel"]:
        return False
    if "kind" in spec and envelope.kind.value != spec["kind"]:
        return False
    if "from" in spec and envelope.sender.value != spec["from"]:
        return False
    if "text_contains" in spec:
        text = envelope.payload.get("text")
        if not isinstance(text, str) or spec["text_contains"] not in text:
            return False
    if "payload" in spec:
        for key, value in spec["payload"].items():
            if envelope.payload.get(key) != value:
                return False
    return True


def load_script(path: str | Path) -> list[dict[str, Any]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, list):
        raise BotError("script must be a JSON array of steps")
    return doc


async def run_bot(
    url: str,
    session_id: str,
    role: Role,
    steps: list[dict[str, Any]],
    timeout_s: float = 30.0,
    linger_s: float = 0.0,
) -> BotReport:
    """Attach, run the script, optionally linger to keep receiving, return
    everything seen. Raises BotError on wait timeouts."""
    report = BotReport(role=role)
    consumed: set[int] = set()  # indexes into report.received already matched
    async with websockets.connect(url, max_size=None) as conn:

        async def recv_one() -> Optional[Envelope]:
            raw = await conn.recv()
            try:
                return decode(raw)
            except DecodeError:
                return None

        async def wait_for(spec: dict[str, Any]) -> Envelope:
            for i, envelope in enumerate(report.received):
                if i not in consumed and _matches(envelope, spec):
                    consumed.add(i)
                    return envelope
            deadline = asyncio.get_running_loop().time() + timeout_s
            while True:
                remaining = deadline - asyncio.get_running_loop().time()
                if remaining <= 0:
                    raise BotError(f"{role.value}: timed out waiting for {spec}")
                try:
                    envelope = await asyncio.wait_for(recv_one(), timeout=remaining)
                except asyncio.TimeoutError:
                    raise BotError(f"{role.value}: timed out waiting for {spec}") from None
                if envelope is None:
                    continue
                report.received.append(envelope)
                if _matches(envelope, spec):
                    consumed.add(len(report.received) - 1)
                    return envelope

        for step in steps:
            if "delay_ms" in step:
                await asyncio.sleep(step["delay_ms"] / 1000.0)
            if "wait_for" in step:
                await wait_for(step["wait_for"])
            if "send" in step:
                send_spec = step["send"]
                envelope = Envelope(
                    session=session_id,
                    sender=role,
                    channel=Channel(send_spec["channel"]),
                    kind=MessageKind(send_spec["kind"]),
                    payload=send_spec.get("payload", {}),
                )
                await conn.send(encode(envelope).decode("utf-8"))
                report.sent.append(envelope)
            if step.get("close_session"):
                await conn.send(json.dumps({"ctrl": "close"}))

        if linger_s > 0:
            deadline = asyncio.get_running_loop().time() + linger_s
            while True:
                remaining = deadline - asyncio.get_running_loop().time()
                if remaining <= 0:
                    break
                try:
                    envelope = await asyncio.wait_for(recv_one(), timeout=remaining)
                except (asyncio.TimeoutError, websockets.ConnectionClosed):
                    break
                if envelope is not None:
                    report.received.append(envelope)
    return report


def attach_url(host: str, port: int, session_id: str, role: Role) -> str:
    return f"ws://{host}:{port}/session/{session_id}/attach?role={role.value}"
