"""Session state machine: role attachment, routing, logging, sim driving.

Everything here runs on one logical thread (the server's event queue), so
no locking happens at this layer. Methods mutate session state, append to
the log, and push frames onto attached transports; the caller owns the
serialization discipline.

Disposition rules:
  * every client frame is either routed (delivered/denied, one log record)
    or answered with an ephemeral error frame (undecodable, wrong session,
    buffer overflow) so nothing is silently dropped;
  * denials are logged, not dropped: misrouted traffic is session data;
  * lifecycle events (joins, state changes) are logged and sequenced;
  * acks, error replies, and suggestion frames are ephemeral control
    traffic and never consume a sequence number.
"""

from __future__ import annotations

import json
from collections import deque
from pathlib import Path
from typing import Optional, Protocol

import ozbench
from ozbench import guidelines
from ozbench.eventlog import (
    DELIVERED,
    DENIED,
    EventRecord,
    LogHeader,
    LogWriter,
    sha256_text,
)
from ozbench.protocol import (
    HUMAN_ROLES,
    Channel,
    DecodeError,
    Envelope,
    MessageKind,
    MotionPrimitive,
    Role,
    SeqCounter,
    decode,
    encode,
    validate_route,
)
from ozbench.simulator import SimBusyError, SimConfig, Simulator
from ozbench.world import SEEN_FREE, SEEN_OCCUPIED, WorldError, parse_world

LOBBY = "lobby"
RUNNING = "running"
PAUSED = "paused"
CLOSED = "closed"

BUFFER_LIMIT = 1000
LIVE_VIEW_INTERVAL_MS = 500  # 2 frames per second

PLATFORM_VERSION = f"ozbench/{ozbench.__version__}"


class Transport(Protocol):
    """Where delivered frames go. send_text must not block."""

    def send_text(self, text: str) -> None: ...


class AttachError(Exception):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}{': ' + detail if detail else ''}")


class UnknownSessionError(KeyError):
    pass


def create_session(
    world_path: str | Path,
    rules_path: str | Path,
    log_dir: str | Path,
    session_id: str | None = None,
    config: SimConfig | None = None,
) -> "Session":
    """Build a lobby-state session with its log created and header written."""
    import uuid

    return Session(
        session_id or uuid.uuid4().hex[:8],
        world_path,
        rules_path,
        log_dir,
        config,
    )


class Session:
    """One experiment session: three human stations, one simulated robot."""

    def __init__(
        self,
        session_id: str,
        world_path: str | Path,
        rules_path: str | Path,
        log_dir: str | Path,
        config: SimConfig | None = None,
    ):
        self.id = session_id
        self.config = config or SimConfig()

        world_path = Path(world_path)
        try:
            world_text = world_path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise WorldError("file_not_found", str(world_path)) from None
        grid, start = parse_world(world_text)

        rules_path = Path(rules_path)
        self.rules = guidelines.load_rules(rules_path)
        rules_text = rules_path.read_text(encoding="utf-8")

        self.sim = Simulator(grid, start, self.config)
        self.state = LOBBY
        self.attached: dict[Role, Transport] = {}
        self.seq = SeqCounter()
        self.pending: deque[Envelope] = deque()
        self._tick_count = 0
        self._live_every = max(1, round(LIVE_VIEW_INTERVAL_MS / self.config.tick_ms))

        header = LogHeader(
            world_sha256=sha256_text(world_text),
            rules_sha256=sha256_text(rules_text),
            version=PLATFORM_VERSION,
            session=session_id,
            world_path=str(world_path),
            world_text=world_text,
            config=self.config,
        )
        self.log_path = Path(log_dir) / f"{session_id}.jsonl"
        self.log = LogWriter(self.log_path, header)

    # --- attachment -----------------------------------------------------------

    def attach(self, role: Role, transport: Transport) -> None:
        """Bind a client connection to a human role.

        Raises AttachError(role_taken | bad_role | session_closed). On
        success the client's join record, a state snapshot, and any
        lifecycle frames arrive through its transport.
        """
        if self.state == CLOSED:
            raise AttachError("session_closed")
        if role not in HUMAN_ROLES:
            raise AttachError("bad_role", f"cannot attach as {role.value}")
        if role in self.attached:
            raise AttachError("role_taken", role.value)

        self.attached[role] = transport
        self._log_lifecycle(MessageKind.JOIN, {"role": role.value})
        self._send_control(role, MessageKind.STATUS, self._snapshot_payload())

        if self.state in (LOBBY, PAUSED) and HUMAN_ROLES <= set(self.attached):
            resumed = self.state == PAUSED
            self._set_state(RUNNING)
            if not resumed:
                for event in self.sim.initial_events():
                    self.dispatch_sensor(event.kind, event.payload)
            self._drain_pending()

    def detach(self, role: Role) -> None:
        if role not in self.attached:
            return
        del self.attached[role]
        if self.state == RUNNING:
            self._set_state(PAUSED, detail=f"{role.value} detached")

    # --- client frames ----------------------------------------------------------

    def handle_text(self, role: Role, text: str) -> None:
        """Full inbound pipeline for one raw frame from an attached client."""
        if self.state == CLOSED:
            self._send_control(
                role, MessageKind.ERROR, {"code": "session_closed", "detail": ""}
            )
            return
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            self._send_control(
                role, MessageKind.ERROR, {"code": "bad_json", "detail": "frame is not JSON"}
            )
            return
        if isinstance(obj, dict) and "ctrl" in obj and "v" not in obj:
            self._handle_ctrl(role, obj)
            return
        try:
            envelope = decode(text)
        except DecodeError as exc:
            self._send_control(
                role,
                MessageKind.ERROR,
                {"code": exc.code, "detail": exc.field},
            )
            return
        if envelope.session != self.id:
            self._send_control(
                role,
                MessageKind.ERROR,
                {"code": "bad_session", "detail": envelope.session, "of": envelope.id},
            )
            return
        if envelope.sender is not role:
            # impersonation: denied as wrong_sender regardless of channel
            record = self._append(
                EventRecord(
                    envelope.with_seq(self.seq.next()),
                    DENIED,
                    reason="wrong_sender",
                )
            )
            self._send_control(
                role,
                MessageKind.ERROR,
                {"code": "wrong_sender", "detail": "from does not match your role",
                 "of": envelope.id},
                seq=record.envelope.seq,
            )
            return
        if self.state != RUNNING:
            if len(self.pending) >= BUFFER_LIMIT:
                self._send_control(
                    role,
                    MessageKind.ERROR,
                    {"code": "busy", "detail": "session buffer full", "of": envelope.id},
                )
                return
            self.pending.append(envelope)
            return
        self.route(envelope)

    def _handle_ctrl(self, role: Role, obj: dict) -> None:
        directive = obj.get("ctrl")
        if directive == "close":
            self.close(initiator=role)
        else:
            self._send_control(
                role,
                MessageKind.ERROR,
                {"code": "unknown_ctrl", "detail": str(directive)},
            )

    # --- routing ----------------------------------------------------------------

    def route(self, envelope: Envelope) -> EventRecord:
        """Apply the routing matrix to one envelope and log the outcome.

        The caller vouches for envelope.sender (connection handlers check
        it against the attached role; the sim path is internal).
        """
        decision = validate_route(envelope.sender, envelope.channel, envelope.kind)
        stamped = envelope.with_seq(self.seq.next())
        if not decision.allowed:
            record = self._append(EventRecord(stamped, DENIED, reason=decision.reason))
            self._send_control(
                envelope.sender,
                MessageKind.ERROR,
                {"code": decision.reason, "detail": envelope.channel.value,
                 "of": envelope.id},
                seq=stamped.seq,
            )
            return record

        delivered = tuple(r for r in sorted(decision.receivers, key=lambda r: r.value)
                          if r in self.attached or r is Role.SIM)
        skipped = tuple(r for r in sorted(decision.receivers, key=lambda r: r.value)
                        if r not in self.attached and r is not Role.SIM)
        record = self._append(
            EventRecord(stamped, DELIVERED, delivered_to=delivered, skipped=skipped)
        )
        frame = encode(stamped).decode("utf-8")
        for receiver in delivered:
            if receiver is Role.SIM:
                continue
            self.attached[receiver].send_text(frame)
        self._send_control(
            envelope.sender, MessageKind.ACK, {"of": envelope.id}, seq=stamped.seq
        )
        if Role.SIM in decision.receivers:
            self._sim_receive(stamped)
        if envelope.channel is Channel.P_DM_SPEECH and envelope.kind is MessageKind.CHAT:
            self._suggest(stamped)
        return record

    def dispatch_sensor(self, kind: MessageKind, payload: dict) -> EventRecord:
        """Emit one sensor frame from the session's own sim."""
        envelope = Envelope(
            session=self.id,
            sender=Role.SIM,
            channel=Channel.SIM_SENSOR,
            kind=kind,
            payload=payload,
        )
        return self.route(envelope)

    def _sim_receive(self, envelope: Envelope) -> None:
        if envelope.kind is not MessageKind.MOTION:
            return
        try:
            prim = MotionPrimitive.from_payload(envelope.payload)
        except ValueError as exc:
            self._send_control(
                envelope.sender,
                MessageKind.ERROR,
                {"code": "bad_payload", "detail": str(exc), "of": envelope.id},
            )
            return
        try:
            outcome, events = self.sim.apply(prim)
        except (SimBusyError, ValueError) as exc:
            code = "busy" if isinstance(exc, SimBusyError) else "bad_payload"
            self._send_control(
                envelope.sender,
                MessageKind.ERROR,
                {"code": code, "detail": str(exc), "of": envelope.id},
            )
            return
        if outcome is not None:
            self._send_control(
                envelope.sender,
                MessageKind.STATUS,
                {"code": outcome.kind, "detail": f"{outcome.amount:.6f}"},
            )
        for event in events:
            self.dispatch_sensor(event.kind, event.payload)

    def _suggest(self, envelope: Envelope) -> None:
        if Role.DM not in self.attached:
            return
        text = envelope.payload.get("text")
        if not isinstance(text, str):
            return
        disposition = guidelines.classify(self.rules, text)
        drafts = guidelines.suggest(disposition)
        self._send_control(
            Role.DM,
            MessageKind.STATUS,
            {
                "code": "suggestion",
                "of": envelope.id,
                "rule": disposition.rule_id,
                "disposition": disposition.kind,
                "drafts": [
                    {"channel": d.channel.value, "kind": d.kind.value, "text": d.text}
                    for d in drafts
                ],
            },
        )

    # --- time -------------------------------------------------------------------

    def tick(self) -> None:
        """One sim tick. No-op unless the session is running."""
        if self.state != RUNNING:
            return
        self._tick_count += 1
        outcome, events = self.sim.tick()
        if outcome is not None and Role.RN in self.attached:
            self._send_control(
                Role.RN,
                MessageKind.STATUS,
                {"code": outcome.kind, "detail": f"{outcome.amount:.6f}"},
            )
        for event in events:
            self.dispatch_sensor(event.kind, event.payload)
        if self._tick_count % self._live_every == 0:
            live = self.sim.live_frame()
            self.dispatch_sensor(live.kind, live.payload)

    def next_seq(self) -> int:
        return self.seq.next()

    # --- lifecycle ----------------------------------------------------------------

    def close(self, initiator: Optional[Role] = None) -> None:
        if self.state == CLOSED:
            return
        detail = f"closed by {initiator.value}" if initiator else "closed"
        self._set_state(CLOSED, detail=detail)
        self.log.close()

    def _set_state(self, new_state: str, detail: str = "") -> None:
        self.state = new_state
        payload = {"code": new_state}
        if detail:
            payload["detail"] = detail
        self._log_lifecycle(MessageKind.STATUS, payload)

    def _log_lifecycle(self, kind: MessageKind, payload: dict) -> None:
        envelope = Envelope(
            session=self.id,
            sender=Role.SERVER,
            channel=Channel.SERVER_CTRL,
            kind=kind,
            payload=payload,
            seq=self.seq.next(),
        )
        receivers = tuple(sorted(self.attached, key=lambda r: r.value))
        self._append(EventRecord(envelope, DELIVERED, delivered_to=receivers))
        frame = encode(envelope).decode("utf-8")
        for role in receivers:
            self.attached[role].send_text(frame)

    def _drain_pending(self) -> None:
        while self.pending and self.state == RUNNING:
            self.route(self.pending.popleft())

    # --- plumbing -------------------------------------------------------------------

    def _append(self, record: EventRecord) -> EventRecord:
        self.log.append(record)
        return record

    def _send_control(
        self, role: Role, kind: MessageKind, payload: dict, seq: int = 0
    ) -> None:
        """Ephemeral server frame to one connection; never logged."""
        transport = self.attached.get(role)
        if transport is None:
            return
        envelope = Envelope(
            session=self.id,
            sender=Role.SERVER,
            channel=Channel.SERVER_CTRL,
            kind=kind,
            payload=payload,
            seq=seq,
        )
        transport.send_text(encode(envelope).decode("utf-8"))

    def _snapshot_payload(self) -> dict:
        grid = self.sim.grid
        cells = []
        for cy in range(grid.height):
            base = cy * grid.width
            for cx in range(grid.width):
                state = grid.overlay[base + cx]
                if state == SEEN_FREE:
                    cells.append({"cx": cx, "cy": cy, "state": "free"})
                elif state == SEEN_OCCUPIED:
                    cells.append({"cx": cx, "cy": cy, "state": "occupied"})
        pose = self.sim.pose
        return {
            "code": "snapshot",
            "state": self.state,
            "attached": sorted(r.value for r in self.attached),
            "pose": {"x": pose.x, "y": pose.y, "theta": pose.theta},
            "map": {
                "width": grid.width,
                "height": grid.height,
                "resolution": grid.resolution,
            },
            "cells": cells,
        }
