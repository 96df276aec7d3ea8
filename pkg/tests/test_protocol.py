"""Routing table, codec, and sequence counter."""

import json
import random
import string
from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ozbench.protocol import (
    ALLOWED_ROUTES,
    Channel,
    DecodeError,
    Envelope,
    MessageKind,
    MotionPrimitive,
    Role,
    RouteDecision,
    SeqCounter,
    decode,
    encode,
    role_edges,
    validate_route,
)

P, DM, RN, SIM, SERVER = Role.PARTICIPANT, Role.DM, Role.RN, Role.SIM, Role.SERVER

# The allow-table restated literally, independent of how protocol.py builds
# its own copy. (sender, channel, kind) -> receiver set; all other triples
# are denied.
EXPECTED_ALLOWED = {
    (P, Channel.P_DM_SPEECH, MessageKind.CHAT): {DM},
    (DM, Channel.DM_P_CHAT, MessageKind.CHAT): {P},
    (DM, Channel.DM_RN_CHAT, MessageKind.CHAT): {RN},
    (DM, Channel.DM_RN_CHAT, MessageKind.COMMAND): {RN},
    (RN, Channel.RN_DM_SPEECH, MessageKind.CHAT): {DM},
    (RN, Channel.RN_SIM_CMD, MessageKind.MOTION): {SIM},
    (SIM, Channel.SIM_SENSOR, MessageKind.MAP_DELTA): {P, DM, RN},
    (SIM, Channel.SIM_SENSOR, MessageKind.POSE): {P, DM, RN},
    (SIM, Channel.SIM_SENSOR, MessageKind.IMAGE): {P, DM, RN},
    (SIM, Channel.SIM_SENSOR, MessageKind.LIVE_VIEW): {DM, RN},
    (SIM, Channel.SIM_SENSOR, MessageKind.SCAN): {RN},
    # control plane: server-only, directed at single connections (no fan-out)
    (SERVER, Channel.SERVER_CTRL, MessageKind.STATUS): set(),
    (SERVER, Channel.SERVER_CTRL, MessageKind.ERROR): set(),
    (SERVER, Channel.SERVER_CTRL, MessageKind.JOIN): set(),
    (SERVER, Channel.SERVER_CTRL, MessageKind.ACK): set(),
}

ALL_TRIPLES = [
    (role, channel, kind)
    for role in Role
    for channel in Channel
    for kind in MessageKind
]


def test_exactly_420_triples():
    assert len(ALL_TRIPLES) == 5 * 7 * 12 == 420


def test_routing_matrix_full_enumeration():
    for triple in ALL_TRIPLES:
        decision = validate_route(*triple)
        if triple in EXPECTED_ALLOWED:
            assert decision.allowed, triple
            assert decision.receivers == frozenset(EXPECTED_ALLOWED[triple]), triple
            assert decision.reason is None
        else:
            assert not decision.allowed, triple
            assert decision.receivers == frozenset()
            assert decision.reason in ("wrong_sender", "kind_not_allowed_on_channel")


def test_denial_reasons():
    # wrong sender beats kind checks
    assert validate_route(P, Channel.DM_RN_CHAT, MessageKind.CHAT).reason == "wrong_sender"
    assert validate_route(DM, Channel.P_DM_SPEECH, MessageKind.CHAT).reason == "wrong_sender"
    # right sender, wrong kind
    assert (
        validate_route(P, Channel.P_DM_SPEECH, MessageKind.COMMAND).reason
        == "kind_not_allowed_on_channel"
    )
    assert (
        validate_route(SIM, Channel.SIM_SENSOR, MessageKind.CHAT).reason
        == "kind_not_allowed_on_channel"
    )


def test_routing_spec_examples():
    assert validate_route(P, Channel.P_DM_SPEECH, MessageKind.CHAT) == RouteDecision(
        True, frozenset({DM})
    )
    denied = validate_route(P, Channel.DM_RN_CHAT, MessageKind.CHAT)
    assert not denied.allowed and denied.reason == "wrong_sender"
    assert validate_route(DM, Channel.DM_P_CHAT, MessageKind.CHAT).receivers == frozenset({P})
    live = validate_route(SIM, Channel.SIM_SENSOR, MessageKind.LIVE_VIEW)
    assert live.receivers == frozenset({DM, RN})
    assert P not in live.receivers


def test_participant_never_receives_live_view_or_scan():
    for (sender, channel, kind), receivers in ALLOWED_ROUTES.items():
        if kind in (MessageKind.LIVE_VIEW, MessageKind.SCAN):
            assert P not in receivers


def test_role_graph_edges_exact():
    expected = {
        (P, DM),
        (DM, P),
        (DM, RN),
        (RN, DM),
        (RN, SIM),
        (SIM, P),
        (SIM, DM),
        (SIM, RN),
    }
    assert role_edges() == frozenset(expected)


def test_no_participant_to_rn_path_avoiding_dm():
    """Reachability over the allow-table: removing dm disconnects p from rn."""
    edges = role_edges()
    # BFS from participant over edges that avoid dm entirely
    frontier, seen = {P}, {P}
    while frontier:
        nxt = set()
        for a, b in edges:
            if a in frontier and b is not DM and b not in seen:
                nxt.add(b)
        seen |= nxt
        frontier = nxt
    assert RN not in seen


def test_role_parse_rejects_unknown():
    assert Role.parse("dm") is DM
    with pytest.raises(ValueError):
        Role.parse("wizard")
    with pytest.raises(ValueError):
        Role.parse("DM")


# --- codec -------------------------------------------------------------------

ROLES = list(Role)
CHANNELS = list(Channel)
KINDS = list(MessageKind)

json_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(2**31), max_value=2**31),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
    st.text(max_size=20),
)
payloads = st.dictionaries(
    st.text(min_size=1, max_size=10),
    st.one_of(json_scalars, st.lists(json_scalars, max_size=4)),
    max_size=5,
)

envelopes = st.builds(
    Envelope,
    session=st.text(min_size=1, max_size=16),
    sender=st.sampled_from(ROLES),
    channel=st.sampled_from(CHANNELS),
    kind=st.sampled_from(KINDS),
    payload=payloads,
    seq=st.integers(min_value=0, max_value=2**40),
    ts=st.datetimes(
        min_value=datetime(2000, 1, 1),
        max_value=datetime(2100, 1, 1),
    ).map(lambda d: d.replace(tzinfo=timezone.utc)),
)


@given(envelopes)
def test_decode_encode_identity(envelope):
    assert decode(encode(envelope)) == envelope


def test_decode_empty_object_missing_version():
    with pytest.raises(DecodeError) as exc_info:
        decode(b"{}")
    assert exc_info.value.code == "missing_field"
    assert exc_info.value.field == "version"


def test_decode_unknown_channel():
    frame = json.loads(encode(Envelope("s", P, Channel.P_DM_SPEECH, MessageKind.CHAT, {})))
    frame["channel"] = "p_rn_chat"
    with pytest.raises(DecodeError) as exc_info:
        decode(json.dumps(frame))
    assert exc_info.value.code == "unknown_enum"
    assert exc_info.value.field == "channel"


def test_decode_bad_version():
    frame = json.loads(encode(Envelope("s", P, Channel.P_DM_SPEECH, MessageKind.CHAT, {})))
    frame["v"] = 2
    with pytest.raises(DecodeError) as exc_info:
        decode(json.dumps(frame))
    assert exc_info.value.code == "bad_version"


def test_decode_unknown_role_and_kind():
    base = json.loads(encode(Envelope("s", P, Channel.P_DM_SPEECH, MessageKind.CHAT, {})))
    bad_from = dict(base, **{"from": "ghost"})
    with pytest.raises(DecodeError) as e1:
        decode(json.dumps(bad_from))
    assert (e1.value.code, e1.value.field) == ("unknown_enum", "from")
    bad_kind = dict(base, kind="telemetry")
    with pytest.raises(DecodeError) as e2:
        decode(json.dumps(bad_kind))
    assert (e2.value.code, e2.value.field) == ("unknown_enum", "kind")


def test_decode_arbitrary_bytes_never_aborts():
    rng = random.Random(1234)
    alphabet = string.printable
    for _ in range(2000):
        blob = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 60)))
        try:
            decode(blob.encode("utf-8", errors="ignore"))
        except DecodeError:
            pass
    for _ in range(500):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 40)))
        try:
            decode(blob)
        except DecodeError:
            pass


@given(st.binary(max_size=64))
def test_decode_fuzz_property(blob):
    try:
        decode(blob)
    except DecodeError:
        pass


def test_ts_round_trip_millisecond_precision():
    env = Envelope("s", P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": "x"})
    again = decode(encode(env))
    assert again.ts == env.ts
    assert again.ts.microsecond % 1000 == 0


# --- sequence counter -------------------------------------------------------


def test_seq_counter_starts_at_zero():
    counter = SeqCounter()
    assert counter.next() == 0
    assert counter.next() == 1
    assert counter.next() == 2


@given(st.integers(min_value=1, max_value=500))
def test_seq_counter_gap_free(n):
    counter = SeqCounter()
    values = [counter.next() for _ in range(n)]
    assert values == list(range(n))


# --- motion payloads -----------------------------------------------------------


def test_motion_primitive_round_trip():
    prim = MotionPrimitive("translate", -1.524)
    assert MotionPrimitive.from_payload(prim.to_payload()) == prim


def test_motion_primitive_rejects_unknown():
    with pytest.raises(ValueError):
        MotionPrimitive("teleport", 1.0)
    with pytest.raises(ValueError):
        MotionPrimitive.from_payload({"primitive": "warp"})
    with pytest.raises(ValueError):
        MotionPrimitive.from_payload({"primitive": "translate", "magnitude": "far"})
