"""Shared message vocabulary: roles, channels, envelopes, and the routing table.

Every other module speaks in terms of the types defined here. The routing
table is the platform's central invariant: it is a total function over
(sender role, channel, message kind) that either names the receiver set or
gives a machine-readable denial reason.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping


class Role(str, Enum):
    PARTICIPANT = "participant"
    DM = "dm"
    RN = "rn"
    SIM = "sim"
    SERVER = "server"

    @classmethod
    def parse(cls, text: str) -> "Role":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown role: {text!r}") from None


#: Roles a network client may attach as. sim and server are internal.
HUMAN_ROLES = frozenset({Role.PARTICIPANT, Role.DM, Role.RN})


class Channel(str, Enum):
    P_DM_SPEECH = "p_dm_speech"
    DM_P_CHAT = "dm_p_chat"
    DM_RN_CHAT = "dm_rn_chat"
    RN_DM_SPEECH = "rn_dm_speech"
    RN_SIM_CMD = "rn_sim_cmd"
    SIM_SENSOR = "sim_sensor"
    SERVER_CTRL = "server_ctrl"


class MessageKind(str, Enum):
    CHAT = "chat"
    COMMAND = "command"
    MOTION = "motion"
    MAP_DELTA = "map_delta"
    POSE = "pose"
    IMAGE = "image"
    LIVE_VIEW = "live_view"
    SCAN = "scan"
    STATUS = "status"
    ERROR = "error"
    JOIN = "join"
    ACK = "ack"


#: Single permitted sender per channel.
CHANNEL_SENDER: Mapping[Channel, Role] = {
    Channel.P_DM_SPEECH: Role.PARTICIPANT,
    Channel.DM_P_CHAT: Role.DM,
    Channel.DM_RN_CHAT: Role.DM,
    Channel.RN_DM_SPEECH: Role.RN,
    Channel.RN_SIM_CMD: Role.RN,
    Channel.SIM_SENSOR: Role.SIM,
    Channel.SERVER_CTRL: Role.SERVER,
}

#: Kinds legal on each channel.
CHANNEL_KINDS: Mapping[Channel, frozenset[MessageKind]] = {
    Channel.P_DM_SPEECH: frozenset({MessageKind.CHAT}),
    Channel.DM_P_CHAT: frozenset({MessageKind.CHAT}),
    Channel.DM_RN_CHAT: frozenset({MessageKind.CHAT, MessageKind.COMMAND}),
    Channel.RN_DM_SPEECH: frozenset({MessageKind.CHAT}),
    Channel.RN_SIM_CMD: frozenset({MessageKind.MOTION}),
    Channel.SIM_SENSOR: frozenset(
        {
            MessageKind.MAP_DELTA,
            MessageKind.POSE,
            MessageKind.IMAGE,
            MessageKind.LIVE_VIEW,
            MessageKind.SCAN,
        }
    ),
    Channel.SERVER_CTRL: frozenset(
        {MessageKind.STATUS, MessageKind.ERROR, MessageKind.JOIN, MessageKind.ACK}
    ),
}

#: Sensor fan-out: who receives each sensor kind. The participant never
#: receives live_view (no live video) and only the RN sees raw scans.
SENSOR_FANOUT: Mapping[MessageKind, frozenset[Role]] = {
    MessageKind.MAP_DELTA: frozenset({Role.PARTICIPANT, Role.DM, Role.RN}),
    MessageKind.POSE: frozenset({Role.PARTICIPANT, Role.DM, Role.RN}),
    MessageKind.IMAGE: frozenset({Role.PARTICIPANT, Role.DM, Role.RN}),
    MessageKind.LIVE_VIEW: frozenset({Role.DM, Role.RN}),
    MessageKind.SCAN: frozenset({Role.RN}),
}

#: Receivers of each point-to-point channel (sensor fan-out is per kind).
_CHANNEL_RECEIVERS: Mapping[Channel, frozenset[Role]] = {
    Channel.P_DM_SPEECH: frozenset({Role.DM}),
    Channel.DM_P_CHAT: frozenset({Role.PARTICIPANT}),
    Channel.DM_RN_CHAT: frozenset({Role.RN}),
    Channel.RN_DM_SPEECH: frozenset({Role.DM}),
    Channel.RN_SIM_CMD: frozenset({Role.SIM}),
    # server_ctrl frames are directed at a single connection by the server
    # (acks, denial errors, lifecycle notices); the matrix assigns them no
    # fan-out so the control plane adds no edges to the role graph.
    Channel.SERVER_CTRL: frozenset(),
}


def _build_allow_table() -> dict[tuple[Role, Channel, MessageKind], frozenset[Role]]:
    table: dict[tuple[Role, Channel, MessageKind], frozenset[Role]] = {}
    for channel, sender in CHANNEL_SENDER.items():
        for kind in CHANNEL_KINDS[channel]:
            if channel is Channel.SIM_SENSOR:
                receivers = SENSOR_FANOUT[kind]
            else:
                receivers = _CHANNEL_RECEIVERS[channel]
            table[(sender, channel, kind)] = receivers
    return table


#: The allow-table: (from, channel, kind) -> receiver set, for permitted
#: triples only. Everything else is denied.
ALLOWED_ROUTES: Mapping[tuple[Role, Channel, MessageKind], frozenset[Role]] = (
    _build_allow_table()
)

DENY_WRONG_SENDER = "wrong_sender"
DENY_KIND = "kind_not_allowed_on_channel"


@dataclass(frozen=True)
class RouteDecision:
    allowed: bool
    receivers: frozenset[Role] = frozenset()
    reason: str | None = None


def validate_route(sender: Role, channel: Channel, kind: MessageKind) -> RouteDecision:
    """Decide whether `sender` may emit `kind` on `channel`.

    Pure function of the routing table. Denial is a value, not an
    exception; the reason is machine-readable.
    """
    if CHANNEL_SENDER[channel] is not sender:
        return RouteDecision(False, reason=DENY_WRONG_SENDER)
    if kind not in CHANNEL_KINDS[channel]:
        return RouteDecision(False, reason=DENY_KIND)
    return RouteDecision(True, receivers=ALLOWED_ROUTES[(sender, channel, kind)])


def role_edges() -> frozenset[tuple[Role, Role]]:
    """Directed role-to-role edges induced by the allow-table."""
    edges = set()
    for (sender, _channel, _kind), receivers in ALLOWED_ROUTES.items():
        for receiver in receivers:
            edges.add((sender, receiver))
    return frozenset(edges)


# --- envelopes -------------------------------------------------------------

WIRE_VERSION = 1

_ID_RE = re.compile(r"^[0-9a-f]{32}$")
_TS_FORMAT = "%Y-%m-%dT%H:%M:%S.%fZ"


def new_id() -> str:
    return uuid.uuid4().hex


def now_ts() -> datetime:
    """Current UTC time truncated to millisecond precision."""
    dt = datetime.now(timezone.utc)
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def format_ts(ts: datetime) -> str:
    return f"{ts:%Y-%m-%dT%H:%M:%S}.{ts.microsecond // 1000:03d}Z"


def parse_ts(text: str) -> datetime:
    dt = datetime.strptime(text, _TS_FORMAT)
    return dt.replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class Envelope:
    """One wire message. seq is meaningful only once the server assigned it."""

    session: str
    sender: Role
    channel: Channel
    kind: MessageKind
    payload: dict[str, Any]
    seq: int = 0
    id: str = field(default_factory=new_id)
    ts: datetime = field(default_factory=now_ts)
    version: int = WIRE_VERSION

    def __post_init__(self) -> None:
        # keep ts at millisecond precision so encode/decode round-trips
        if self.ts.tzinfo is None:
            object.__setattr__(self, "ts", self.ts.replace(tzinfo=timezone.utc))
        us = self.ts.microsecond
        if us % 1000:
            object.__setattr__(self, "ts", self.ts.replace(microsecond=(us // 1000) * 1000))

    def with_seq(self, seq: int) -> "Envelope":
        return Envelope(
            session=self.session,
            sender=self.sender,
            channel=self.channel,
            kind=self.kind,
            payload=self.payload,
            seq=seq,
            id=self.id,
            ts=self.ts,
            version=self.version,
        )


class DecodeError(ValueError):
    """Structured decode failure naming the offending field."""

    def __init__(self, code: str, fieldname: str, detail: str = ""):
        self.code = code
        self.field = fieldname
        self.detail = detail
        super().__init__(f"{code}({fieldname}){': ' + detail if detail else ''}")


def to_frame(envelope: Envelope) -> dict[str, Any]:
    """The canonical wire object for an envelope."""
    return {
        "v": envelope.version,
        "id": envelope.id,
        "session": envelope.session,
        "seq": envelope.seq,
        "ts": format_ts(envelope.ts),
        "from": envelope.sender.value,
        "channel": envelope.channel.value,
        "kind": envelope.kind.value,
        "payload": envelope.payload,
    }


def encode(envelope: Envelope) -> bytes:
    """Canonical UTF-8 JSON frame, one frame per message."""
    return json.dumps(to_frame(envelope), separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


# wire key -> (logical field name, required type)
_FIELDS = (
    ("v", "version", int),
    ("id", "id", str),
    ("session", "session", str),
    ("seq", "seq", int),
    ("ts", "ts", str),
    ("from", "from", str),
    ("channel", "channel", str),
    ("kind", "kind", str),
    ("payload", "payload", dict),
)


def decode(data: bytes | str) -> Envelope:
    """Parse a wire frame. Raises DecodeError naming the bad field."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError:
            raise DecodeError("bad_encoding", "frame") from None
    try:
        obj = json.loads(data)
    except json.JSONDecodeError:
        raise DecodeError("bad_json", "frame") from None
    return from_frame(obj)


def from_frame(obj: Any) -> Envelope:
    """Validate and build an Envelope from a parsed wire object."""
    if not isinstance(obj, dict):
        raise DecodeError("bad_json", "frame", "top level is not an object")

    values: dict[str, Any] = {}
    for wire_key, name, typ in _FIELDS:
        if wire_key not in obj:
            raise DecodeError("missing_field", name)
        value = obj[wire_key]
        if typ is int and isinstance(value, bool):
            raise DecodeError("bad_type", name)
        if not isinstance(value, typ):
            raise DecodeError("bad_type", name)
        values[name] = value

    if values["version"] != WIRE_VERSION:
        raise DecodeError("bad_version", "version", f"expected {WIRE_VERSION}")
    if not _ID_RE.match(values["id"]):
        raise DecodeError("bad_value", "id", "expected 32 lowercase hex digits")
    if values["seq"] < 0:
        raise DecodeError("bad_value", "seq", "negative")
    try:
        ts = parse_ts(values["ts"])
    except ValueError:
        raise DecodeError("bad_value", "ts", "expected ISO-8601 with milliseconds and Z") from None
    try:
        sender = Role(values["from"])
    except ValueError:
        raise DecodeError("unknown_enum", "from") from None
    try:
        channel = Channel(values["channel"])
    except ValueError:
        raise DecodeError("unknown_enum", "channel") from None
    try:
        kind = MessageKind(values["kind"])
    except ValueError:
        raise DecodeError("unknown_enum", "kind") from None

    return Envelope(
        session=values["session"],
        sender=sender,
        channel=channel,
        kind=kind,
        payload=values["payload"],
        seq=values["seq"],
        id=values["id"],
        ts=ts,
        version=values["version"],
    )


class SeqCounter:
    """Per-session monotonic sequence source: 0, 1, 2, ... with no gaps.

    Must be driven from a single serialization point; it is not locked.
    """

    def __init__(self) -> None:
        self._next = 0

    def next(self) -> int:
        value = self._next
        self._next += 1
        return value

    @property
    def assigned(self) -> int:
        """How many sequence numbers have been handed out."""
        return self._next


# --- motion payloads ---------------------------------------------------------

TRANSLATE = "translate"
ROTATE = "rotate"
HALT = "halt"
CAPTURE = "capture"

_PRIMITIVES = (TRANSLATE, ROTATE, HALT, CAPTURE)


@dataclass(frozen=True)
class MotionPrimitive:
    """One robot motion order: the payload of a `motion` frame.

    magnitude is signed: positive translate moves along the heading,
    negative backs up; positive rotate is counterclockwise.
    """

    primitive: str
    magnitude: float = 0.0

    def __post_init__(self) -> None:
        if self.primitive not in _PRIMITIVES:
            raise ValueError(f"unknown primitive: {self.primitive!r}")

    def to_payload(self) -> dict[str, Any]:
        return {"primitive": self.primitive, "magnitude": self.magnitude}

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "MotionPrimitive":
        primitive = payload.get("primitive")
        if primitive not in _PRIMITIVES:
            raise ValueError(f"unknown primitive: {primitive!r}")
        magnitude = payload.get("magnitude", 0.0)
        if isinstance(magnitude, bool) or not isinstance(magnitude, (int, float)):
            raise ValueError("magnitude must be a number")
        return cls(primitive=primitive, magnitude=float(magnitude))
