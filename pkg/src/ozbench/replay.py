"""Deterministic re-execution of a session log.

Replay walks the records in sequence order and rebuilds the robot's world
from nothing but the log: the header carries the world text and simulator
configuration. Motions re-execute when their completion pose record
arrives, which lets replay reproduce outcomes that depended on live
timing straight from the log's total order:

  * a motion logged while another was still executing was rejected as
    busy by the live sim (its completion pose had not appeared yet), so
    replay skips it the same way;
  * a halt mid-primitive stopped the robot at a wall-clock-dependent
    point; the completion pose record is authoritative, so replay
    teleports there and rescans.

Completed and blocked motions are recomputed from scratch and checked
against the logged pose; any disagreement beyond 1e-9 m is reported as a
divergence (this is what makes tampering visible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ozbench.eventlog import (
    DENIED,
    LogHeader,
    WorldMismatchError,
    read_log,
    sha256_text,
)
from ozbench.protocol import (
    CAPTURE,
    HALT,
    Channel,
    MessageKind,
    MotionPrimitive,
)
from ozbench.simulator import Simulator
from ozbench.world import Pose, WorldError, parse_world

POSE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ReplaySummary:
    final_pose: tuple[float, float, float]
    map_hash: str
    channel_counts: tuple[tuple[str, int], ...]  # delivered records per channel
    denials: int
    records: int
    divergences: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.divergences

    def to_dict(self) -> dict:
        return {
            "final_pose": {
                "x": self.final_pose[0],
                "y": self.final_pose[1],
                "theta": self.final_pose[2],
            },
            "map_hash": self.map_hash,
            "channel_counts": dict(self.channel_counts),
            "denials": self.denials,
            "records": self.records,
            "divergences": list(self.divergences),
        }


def _world_text(header: LogHeader, world_path: str | Path | None) -> str:
    if world_path is not None:
        text = Path(world_path).read_text(encoding="utf-8")
        if sha256_text(text) != header.world_sha256:
            raise WorldMismatchError(f"{world_path} does not match the log header hash")
        return text
    if not header.world_text:
        raise WorldMismatchError("log header carries no world text; pass the world file")
    if sha256_text(header.world_text) != header.world_sha256:
        raise WorldMismatchError("embedded world text does not match its recorded hash")
    return header.world_text


def replay(log_path: str | Path, world_path: str | Path | None = None) -> ReplaySummary:
    """Re-execute a log and summarize the final state.

    Raises CorruptLogError on sequence gaps and WorldMismatchError when
    the available world does not hash to the header's value. Semantic
    disagreements between re-execution and the logged poses land in
    summary.divergences instead of raising.
    """
    header, records = read_log(log_path)
    text = _world_text(header, world_path)
    grid, start = parse_world(text)
    sim = Simulator(grid, start, header.config)

    pending: Optional[MotionPrimitive] = None
    halted = False
    started = False
    counts: dict[str, int] = {}
    denials = 0
    divergences: list[str] = []

    for record in records:
        env = record.envelope
        if record.disposition == DENIED:
            denials += 1
            continue
        counts[env.channel.value] = counts.get(env.channel.value, 0) + 1

        if env.channel is Channel.SERVER_CTRL and env.kind is MessageKind.STATUS:
            if env.payload.get("code") == "running" and not started:
                started = True
                sim.initial_events()
            continue

        if env.channel is Channel.RN_SIM_CMD and env.kind is MessageKind.MOTION:
            try:
                prim = MotionPrimitive.from_payload(env.payload)
            except ValueError:
                continue  # live sim rejected it; no state change
            if prim.primitive == HALT:
                if pending is not None:
                    halted = True
            elif prim.primitive == CAPTURE:
                pass
            elif not math.isfinite(prim.magnitude):
                continue  # live sim rejected it
            elif pending is None:
                pending = prim
                halted = False
            # else: arrived while one was executing; live sim said busy
            continue

        if env.channel is Channel.SIM_SENSOR and env.kind is MessageKind.POSE:
            logged = _pose_from_payload(env.payload, env.seq, divergences)
            if logged is None:
                continue
            if pending is not None:
                if halted:
                    try:
                        sim.set_pose(logged)
                    except WorldError:
                        divergences.append(
                            f"seq {env.seq}: halted pose overlaps an obstacle"
                        )
                else:
                    sim.run_primitive(pending)
                    _check_pose(sim.pose, logged, env.seq, divergences)
                pending = None
                halted = False
            else:
                _check_pose(sim.pose, logged, env.seq, divergences)
            continue

    return ReplaySummary(
        final_pose=(sim.pose.x, sim.pose.y, sim.pose.theta),
        map_hash=grid.map_hash(),
        channel_counts=tuple(sorted(counts.items())),
        denials=denials,
        records=len(records),
        divergences=tuple(divergences),
    )


def _pose_from_payload(payload: dict, seq: int, divergences: list[str]) -> Optional[Pose]:
    try:
        return Pose(float(payload["x"]), float(payload["y"]), float(payload["theta"]))
    except (KeyError, TypeError, ValueError):
        divergences.append(f"seq {seq}: malformed pose payload")
        return None


def _check_pose(actual: Pose, logged: Pose, seq: int, divergences: list[str]) -> None:
    dx = actual.x - logged.x
    dy = actual.y - logged.y
    dt = abs(actual.theta - logged.theta)
    dt = min(dt, 360.0 - dt)
    if abs(dx) > POSE_TOLERANCE or abs(dy) > POSE_TOLERANCE or dt > POSE_TOLERANCE:
        divergences.append(
            f"seq {seq}: replayed pose ({actual.x}, {actual.y}, {actual.theta}) "
            f"!= logged pose ({logged.x}, {logged.y}, {logged.theta})"
        )
