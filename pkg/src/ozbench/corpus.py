"""Offline analytics over session logs: transcripts, statistics, verification.

Everything here is a pure function of the log bytes, so output is
bit-stable across runs. The statistics partition the log: per-channel
delivered counts plus denials always sum to the record count.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ozbench.commands import format_number
from ozbench.eventlog import DENIED, EventRecord, read_log
from ozbench.protocol import Channel, MessageKind, format_ts
from ozbench.replay import POSE_TOLERANCE, ReplaySummary, replay


def _render(record: EventRecord, image_index: int) -> str:
    env = record.envelope
    payload = env.payload
    kind = env.kind
    if kind in (MessageKind.CHAT, MessageKind.COMMAND):
        text = payload.get("text")
        body = text if isinstance(text, str) else "[malformed text payload]"
    elif kind is MessageKind.IMAGE:
        body = f"[image #{image_index}]"
    elif kind is MessageKind.MAP_DELTA:
        cells = payload.get("cells")
        n = len(cells) if isinstance(cells, list) else 0
        body = f"[map Δ{n} cells]"
    elif kind is MessageKind.POSE:
        try:
            body = (
                f"[pose {format_number(float(payload['x']))},"
                f"{format_number(float(payload['y']))},"
                f"{format_number(float(payload['theta']))}]"
            )
        except (KeyError, TypeError, ValueError):
            body = "[pose ?]"
    elif kind is MessageKind.LIVE_VIEW:
        body = "[live view]"
    elif kind is MessageKind.SCAN:
        ranges = payload.get("ranges")
        n = len(ranges) if isinstance(ranges, list) else 0
        body = f"[scan {n} ranges]"
    elif kind is MessageKind.MOTION:
        prim = payload.get("primitive", "?")
        mag = payload.get("magnitude", 0.0)
        try:
            body = f"[motion {prim} {format_number(float(mag))}]"
        except (TypeError, ValueError):
            body = f"[motion {prim} ?]"
    elif kind is MessageKind.STATUS:
        body = f"[status: {payload.get('code', '?')}]"
    elif kind is MessageKind.JOIN:
        body = f"[join: {payload.get('role', '?')}]"
    elif kind is MessageKind.ACK:
        body = "[ack]"
    else:
        body = f"[{kind.value}: {payload.get('code', '?')}]"
    if record.disposition == DENIED:
        return f"[DENIED: {record.reason}] {body}"
    return body


def transcript(log_path: str | Path) -> str:
    """Human-readable rendering, one line per record, in sequence order."""
    _header, records = read_log(log_path)
    lines = []
    images = 0
    for record in records:
        env = record.envelope
        if env.kind is MessageKind.IMAGE and record.disposition != DENIED:
            images += 1
        rendered = _render(record, images)
        lines.append(
            f"{env.seq:>5}  {format_ts(env.ts)}  {env.channel.value:<12}  "
            f"{env.sender.value:<11}  {rendered}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class SessionStats:
    channel_counts: dict[str, int] = field(default_factory=dict)
    denials: int = 0
    records: int = 0
    images_sent: int = 0
    distance_commanded: float = 0.0
    distance_traveled: float = 0.0
    dm_latencies_ms: list[float] = field(default_factory=list)

    @property
    def latency_mean_ms(self) -> Optional[float]:
        return statistics.fmean(self.dm_latencies_ms) if self.dm_latencies_ms else None

    @property
    def latency_median_ms(self) -> Optional[float]:
        return statistics.median(self.dm_latencies_ms) if self.dm_latencies_ms else None

    def to_dict(self) -> dict:
        return {
            "channel_counts": dict(sorted(self.channel_counts.items())),
            "denials": self.denials,
            "records": self.records,
            "images_sent": self.images_sent,
            "distance_commanded_m": self.distance_commanded,
            "distance_traveled_m": self.distance_traveled,
            "dm_latencies_ms": self.dm_latencies_ms,
            "latency_mean_ms": self.latency_mean_ms,
            "latency_median_ms": self.latency_median_ms,
        }

    def to_text(self) -> str:
        lines = ["channel counts:"]
        for channel, count in sorted(self.channel_counts.items()):
            lines.append(f"  {channel:<12} {count}")
        lines.append(f"denials:             {self.denials}")
        lines.append(f"records:             {self.records}")
        lines.append(f"images sent:         {self.images_sent}")
        lines.append(f"distance commanded:  {self.distance_commanded:.3f} m")
        lines.append(f"distance traveled:   {self.distance_traveled:.3f} m")
        mean = self.latency_mean_ms
        median = self.latency_median_ms
        lines.append(
            "dm response latency: "
            + (
                f"n={len(self.dm_latencies_ms)} mean={mean:.0f} ms median={median:.0f} ms"
                if self.dm_latencies_ms
                else "n=0"
            )
        )
        return "\n".join(lines) + "\n"


def stats(log_path: str | Path) -> SessionStats:
    """Channel, distance, and turn-taking statistics for one log.

    DM response latency pairs each participant utterance with the first
    later message on dm_p_chat, the minimal well-defined turn-taking
    proxy for this topology.
    """
    _header, records = read_log(log_path)
    result = SessionStats(records=len(records))
    last_pose: Optional[tuple[float, float]] = None
    dm_replies: list[tuple[int, float]] = []  # (seq, epoch ms)

    for record in records:
        env = record.envelope
        if record.disposition == DENIED:
            result.denials += 1
            continue
        result.channel_counts[env.channel.value] = (
            result.channel_counts.get(env.channel.value, 0) + 1
        )
        if env.kind is MessageKind.IMAGE:
            result.images_sent += 1
        elif env.channel is Channel.RN_SIM_CMD and env.kind is MessageKind.MOTION:
            if env.payload.get("primitive") == "translate":
                try:
                    result.distance_commanded += abs(float(env.payload.get("magnitude", 0.0)))
                except (TypeError, ValueError):
                    pass
        elif env.kind is MessageKind.POSE:
            try:
                x, y = float(env.payload["x"]), float(env.payload["y"])
            except (KeyError, TypeError, ValueError):
                continue
            if last_pose is not None:
                dx, dy = x - last_pose[0], y - last_pose[1]
                result.distance_traveled += (dx * dx + dy * dy) ** 0.5
            last_pose = (x, y)
        if env.channel is Channel.DM_P_CHAT and env.kind is MessageKind.CHAT:
            dm_replies.append((env.seq, env.ts.timestamp() * 1000.0))

    for record in records:
        env = record.envelope
        if record.disposition == DENIED:
            continue
        if env.channel is Channel.P_DM_SPEECH and env.kind is MessageKind.CHAT:
            sent_ms = env.ts.timestamp() * 1000.0
            reply = next((ms for seq, ms in dm_replies if seq > env.seq), None)
            if reply is not None:
                result.dm_latencies_ms.append(reply - sent_ms)

    return result


@dataclass(frozen=True)
class VerifyResult:
    passed: bool
    diffs: tuple[str, ...]
    summary: ReplaySummary


def verify(
    log_path: str | Path,
    world_path: str | Path | None = None,
    expected_pose: tuple[float, float, float] | None = None,
    expected_map_hash: str | None = None,
) -> VerifyResult:
    """Replay the log and compare against the expected final state.

    CorruptLogError and WorldMismatchError propagate; semantic
    disagreements are reported as diffs.
    """
    summary = replay(log_path, world_path)
    diffs = list(summary.divergences)
    if expected_pose is not None:
        fx, fy, ft = summary.final_pose
        ex, ey, et = expected_pose
        dt = abs(ft - et)
        dt = min(dt, 360.0 - dt)
        if abs(fx - ex) > POSE_TOLERANCE or abs(fy - ey) > POSE_TOLERANCE or dt > POSE_TOLERANCE:
            diffs.append(
                f"final pose ({fx}, {fy}, {ft}) != expected ({ex}, {ey}, {et})"
            )
    if expected_map_hash is not None and summary.map_hash != expected_map_hash:
        diffs.append(f"map hash {summary.map_hash} != expected {expected_map_hash}")
    return VerifyResult(passed=not diffs, diffs=tuple(diffs), summary=summary)
