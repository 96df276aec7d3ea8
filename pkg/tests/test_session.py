"""Session state machine: attachment, routing, buffering, lifecycle, log."""

import json

import pytest

from conftest import FakeTransport
from ozbench.eventlog import DELIVERED, DENIED, read_log
from ozbench.guidelines import RulesError
from ozbench.protocol import (
    ALLOWED_ROUTES,
    Channel,
    Envelope,
    MessageKind,
    Role,
    encode,
)
from ozbench.session import (
    BUFFER_LIMIT,
    CLOSED,
    LOBBY,
    PAUSED,
    RUNNING,
    AttachError,
    Session,
    create_session,
)
from ozbench.simulator import SimConfig
from ozbench.world import WorldError

P, DM, RN, SIM, SERVER = Role.PARTICIPANT, Role.DM, Role.RN, Role.SIM, Role.SERVER


@pytest.fixture
def session(room_world, rules_path, tmp_path):
    return Session("s1", room_world, rules_path, tmp_path, SimConfig())


@pytest.fixture
def running(session):
    transports = {role: FakeTransport() for role in (P, DM, RN)}
    for role, transport in transports.items():
        session.attach(role, transport)
    assert session.state == RUNNING
    return session, transports


def env(sender, channel, kind, payload=None, session_id="s1"):
    return Envelope(
        session=session_id, sender=sender, channel=channel, kind=kind,
        payload=payload or {},
    )


def send(session, role, envelope):
    session.handle_text(role, encode(envelope).decode())


def kinds(transport):
    return [e.kind for e in transport.frames]


# --- creation ---------------------------------------------------------------


def test_create_session_lobby_state(room_world, rules_path, tmp_path):
    s = create_session(room_world, rules_path, tmp_path, session_id="fresh")
    assert s.state == LOBBY
    assert s.seq.assigned == 0
    assert s.log_path.exists()
    header, records = read_log(s.log_path)
    assert records == []
    assert header.session == "fresh"


def test_create_session_missing_world(rules_path, tmp_path):
    with pytest.raises(WorldError) as exc_info:
        Session("x", tmp_path / "none.json", rules_path, tmp_path)
    assert exc_info.value.code == "file_not_found"


def test_create_session_invalid_world(write_world, rules_path, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "resolution": 0.1,
        "start": {"x": 0.5, "y": 0.5, "theta": 0},
        "rows": ["##########", "#........#", "#.......#", "##########"],
    }))
    with pytest.raises(WorldError) as exc_info:
        Session("x", bad, rules_path, tmp_path)
    assert exc_info.value.code == "non_rectangular"


def test_create_session_missing_rules(room_world, tmp_path):
    with pytest.raises(RulesError):
        Session("x", room_world, tmp_path / "no_rules.json", tmp_path)


# --- attach -----------------------------------------------------------------


def test_attach_then_role_taken(session):
    session.attach(DM, FakeTransport())
    assert session.state == LOBBY
    with pytest.raises(AttachError) as exc_info:
        session.attach(DM, FakeTransport())
    assert exc_info.value.code == "role_taken"


def test_attach_rejects_system_roles(session):
    for role in (SIM, SERVER):
        with pytest.raises(AttachError) as exc_info:
            session.attach(role, FakeTransport())
        assert exc_info.value.code == "bad_role"


def test_third_attach_starts_session_and_emits_initial_sensors(running):
    session, transports = running
    participant_kinds = kinds(transports[P])
    assert MessageKind.POSE in participant_kinds
    assert MessageKind.MAP_DELTA in participant_kinds
    # lidar scans are RN-only
    assert MessageKind.SCAN not in participant_kinds
    assert MessageKind.SCAN in kinds(transports[RN])
    header, records = read_log(session.log_path)
    statuses = [r for r in records if r.envelope.kind is MessageKind.STATUS]
    assert statuses[0].envelope.payload["code"] == RUNNING
    joins = [r for r in records if r.envelope.kind is MessageKind.JOIN]
    assert [r.envelope.payload["role"] for r in joins] == ["participant", "dm", "rn"]


def test_attach_after_close(session):
    session.close()
    with pytest.raises(AttachError) as exc_info:
        session.attach(DM, FakeTransport())
    assert exc_info.value.code == "session_closed"


def test_snapshot_sent_on_attach(session):
    transport = FakeTransport()
    session.attach(DM, transport)
    snapshots = [
        e for e in transport.frames
        if e.kind is MessageKind.STATUS and e.payload.get("code") == "snapshot"
    ]
    assert len(snapshots) == 1
    snap = snapshots[0].payload
    assert snap["map"]["width"] == 60
    assert snap["cells"] == []  # nothing discovered in the lobby
    assert snap["pose"]["x"] == 1.05


# --- routing ----------------------------------------------------------------


def test_participant_chat_reaches_dm_only(running):
    session, transports = running
    send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT,
                         {"text": "move forward five feet"}))
    dm_chats = [e for e in transports[DM].frames if e.kind is MessageKind.CHAT]
    assert len(dm_chats) == 1
    assert dm_chats[0].payload["text"] == "move forward five feet"
    assert all(e.kind is not MessageKind.CHAT for e in transports[RN].frames)
    assert all(e.kind is not MessageKind.CHAT for e in transports[P].frames)


def test_sender_gets_ack_with_log_seq(running):
    session, transports = running
    message = env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": "hello"})
    send(session, P, message)
    acks = [e for e in transports[P].frames if e.kind is MessageKind.ACK]
    assert len(acks) == 1
    assert acks[0].payload == {"of": message.id}
    _, records = read_log(session.log_path)
    assert records[-1].envelope.seq == acks[0].seq


def test_forged_channel_denied_and_logged(running):
    session, transports = running
    rn_chat_before = len(transports[RN].frames)
    bad = env(P, Channel.DM_RN_CHAT, MessageKind.CHAT, {"text": "psst"})
    send(session, P, bad)
    errors = [e for e in transports[P].frames if e.kind is MessageKind.ERROR]
    assert errors and errors[-1].payload["code"] == "wrong_sender"
    assert len(transports[RN].frames) == rn_chat_before  # rn receives nothing
    _, records = read_log(session.log_path)
    assert records[-1].disposition == DENIED
    assert records[-1].reason == "wrong_sender"
    assert records[-1].envelope.id == bad.id


def test_impersonation_denied(running):
    session, transports = running
    forged = env(DM, Channel.DM_RN_CHAT, MessageKind.COMMAND, {"text": "stop"})
    session.handle_text(P, encode(forged).decode())  # participant connection
    _, records = read_log(session.log_path)
    assert records[-1].disposition == DENIED
    assert records[-1].reason == "wrong_sender"
    assert all(e.kind is not MessageKind.COMMAND for e in transports[RN].frames)


def test_dm_command_reaches_rn(running):
    session, transports = running
    send(session, DM, env(DM, Channel.DM_RN_CHAT, MessageKind.COMMAND,
                          {"text": "move forward 1.524 m"}))
    rn_commands = [e for e in transports[RN].frames if e.kind is MessageKind.COMMAND]
    assert len(rn_commands) == 1
    assert rn_commands[0].payload["text"] == "move forward 1.524 m"


def test_suggestion_control_frame_to_dm(running):
    session, transports = running
    send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT,
                         {"text": "take a picture"}))
    suggestions = [
        e for e in transports[DM].frames
        if e.kind is MessageKind.STATUS and e.payload.get("code") == "suggestion"
    ]
    assert len(suggestions) == 1
    payload = suggestions[0].payload
    assert payload["rule"] == "R1"
    assert payload["disposition"] == "executable"
    assert payload["drafts"][0] == {
        "channel": "dm_rn_chat", "kind": "command", "text": "send image",
    }
    # suggestions are ephemeral: not in the log
    _, records = read_log(session.log_path)
    assert all(r.envelope.payload.get("code") != "suggestion" for r in records)


def test_every_client_frame_yields_exactly_one_record(running):
    session, transports = running
    _, before = read_log(session.log_path)
    human_before = sum(1 for r in before if r.envelope.sender in (P, DM, RN))
    sent = 0
    for i in range(7):
        send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": str(i)}))
        sent += 1
    for i in range(5):
        send(session, P, env(P, Channel.DM_RN_CHAT, MessageKind.CHAT, {"text": str(i)}))
        sent += 1
    send(session, RN, env(RN, Channel.RN_DM_SPEECH, MessageKind.CHAT, {"text": "x"}))
    sent += 1
    _, records = read_log(session.log_path)
    human_records = sum(1 for r in records if r.envelope.sender in (P, DM, RN))
    assert human_records - human_before == sent


def test_adversarial_enumeration_at_session_level(running):
    """route() disposition over all 420 triples matches the matrix, and the
    denial records are precisely the complement of the allow-table."""
    session, _transports = running
    _, before = read_log(session.log_path)
    attempted = []
    for sender in Role:
        for channel in Channel:
            for kind in MessageKind:
                payload = {"primitive": "halt"} if kind is MessageKind.MOTION else {"n": 1}
                record = session.route(env(sender, channel, kind, payload))
                attempted.append(((sender, channel, kind), record))
    for triple, record in attempted:
        if triple in ALLOWED_ROUTES:
            assert record.disposition == DELIVERED, triple
            expected = {r.value for r in ALLOWED_ROUTES[triple]}
            got = {r.value for r in record.delivered_to} | {r.value for r in record.skipped}
            assert got == expected, triple
        else:
            assert record.disposition == DENIED, triple
    _, after = read_log(session.log_path)
    new = after[len(before):]
    denied = [r for r in new if r.disposition == DENIED]
    assert len(denied) == 420 - len(ALLOWED_ROUTES)


def test_seq_values_dense_across_everything(running):
    session, _ = running
    for i in range(4):
        send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": str(i)}))
        send(session, P, env(P, Channel.SERVER_CTRL, MessageKind.CHAT, {}))  # denied
    session.close()
    _, records = read_log(session.log_path)
    assert [r.envelope.seq for r in records] == list(range(len(records)))


# --- sim handoff ----------------------------------------------------------------


def test_motion_drives_sim_and_emits_completion(running):
    session, transports = running
    send(session, RN, env(RN, Channel.RN_SIM_CMD, MessageKind.MOTION,
                          {"primitive": "translate", "magnitude": 0.1}))
    for _ in range(10):
        session.tick()
    assert session.sim.pose.x == pytest.approx(1.15, abs=1e-9)
    statuses = [
        e for e in transports[RN].frames
        if e.kind is MessageKind.STATUS and e.payload.get("code") == "completed"
    ]
    assert statuses
    poses = [e for e in transports[P].frames if e.kind is MessageKind.POSE]
    assert poses[-1].payload["x"] == pytest.approx(1.15, abs=1e-9)


def test_second_motion_while_active_gets_busy(running):
    session, transports = running
    motion = {"primitive": "translate", "magnitude": 1.0}
    send(session, RN, env(RN, Channel.RN_SIM_CMD, MessageKind.MOTION, motion))
    session.tick()
    send(session, RN, env(RN, Channel.RN_SIM_CMD, MessageKind.MOTION, motion))
    errors = [e for e in transports[RN].frames if e.kind is MessageKind.ERROR]
    assert errors and errors[-1].payload["code"] == "busy"
    # both frames were delivered to the sim and logged
    _, records = read_log(session.log_path)
    motions = [r for r in records if r.envelope.kind is MessageKind.MOTION]
    assert len(motions) == 2
    assert all(r.disposition == DELIVERED for r in motions)


def test_capture_motion_emits_image_to_all_humans(running):
    session, transports = running
    send(session, RN, env(RN, Channel.RN_SIM_CMD, MessageKind.MOTION,
                          {"primitive": "capture"}))
    for transport in transports.values():
        images = [e for e in transport.frames if e.kind is MessageKind.IMAGE]
        assert len(images) == 1
        assert images[0].payload["format"] == "pgm"


def test_bad_motion_payload_gets_error(running):
    session, transports = running
    send(session, RN, env(RN, Channel.RN_SIM_CMD, MessageKind.MOTION,
                          {"primitive": "warp", "magnitude": 1}))
    errors = [e for e in transports[RN].frames if e.kind is MessageKind.ERROR]
    assert errors and errors[-1].payload["code"] == "bad_payload"


def test_live_view_reaches_wizards_not_participant(running):
    session, transports = running
    for _ in range(session._live_every):
        session.tick()
    assert MessageKind.LIVE_VIEW in kinds(transports[DM])
    assert MessageKind.LIVE_VIEW in kinds(transports[RN])
    assert MessageKind.LIVE_VIEW not in kinds(transports[P])


# --- buffering and lifecycle --------------------------------------------------------


def test_lobby_frames_buffered_until_running(session):
    dm_transport = FakeTransport()
    session.attach(DM, dm_transport)
    send(session, DM, env(DM, Channel.DM_RN_CHAT, MessageKind.CHAT, {"text": "early"}))
    _, records = read_log(session.log_path)
    assert all(r.envelope.kind is not MessageKind.CHAT for r in records)
    rn_transport = FakeTransport()
    session.attach(RN, rn_transport)
    session.attach(P, FakeTransport())
    assert session.state == RUNNING
    chats = [e for e in rn_transport.frames if e.kind is MessageKind.CHAT]
    assert [e.payload["text"] for e in chats] == ["early"]


def test_wizard_disconnect_pauses_and_resume_drains(running):
    session, transports = running
    session.detach(RN)
    assert session.state == PAUSED
    send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": "anyone?"}))
    dm_chats_before = len([e for e in transports[DM].frames if e.kind is MessageKind.CHAT])
    assert dm_chats_before == 0
    session.tick()  # ticks are ignored while paused
    rn2 = FakeTransport()
    session.attach(RN, rn2)
    assert session.state == RUNNING
    dm_chats = [e for e in transports[DM].frames if e.kind is MessageKind.CHAT]
    assert [e.payload["text"] for e in dm_chats] == ["anyone?"]


def test_buffer_overflow_reports_busy(session):
    transport = FakeTransport()
    session.attach(P, transport)
    for i in range(BUFFER_LIMIT):
        send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": str(i)}))
    send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": "overflow"}))
    errors = [e for e in transport.frames if e.kind is MessageKind.ERROR]
    assert errors and errors[-1].payload["code"] == "busy"


def test_close_logs_status_and_rejects_frames(running):
    session, transports = running
    session.handle_text(DM, json.dumps({"ctrl": "close"}))
    assert session.state == CLOSED
    _, records = read_log(session.log_path)
    assert records[-1].envelope.payload["code"] == CLOSED
    send(session, P, env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": "late"}))
    errors = [e for e in transports[P].frames if e.kind is MessageKind.ERROR]
    assert errors and errors[-1].payload["code"] == "session_closed"


def test_undecodable_frame_gets_error_not_logged(running):
    session, transports = running
    _, before = read_log(session.log_path)
    session.handle_text(P, "{nonsense")
    session.handle_text(P, json.dumps({"v": 1}))
    errors = [e for e in transports[P].frames if e.kind is MessageKind.ERROR]
    assert len(errors) >= 2
    assert errors[-2].payload["code"] == "bad_json"
    assert errors[-1].payload["code"] == "missing_field"
    _, after = read_log(session.log_path)
    assert len(after) == len(before)


def test_wrong_session_id_rejected(running):
    session, transports = running
    message = env(P, Channel.P_DM_SPEECH, MessageKind.CHAT, {"text": "x"},
                  session_id="other")
    send(session, P, message)
    errors = [e for e in transports[P].frames if e.kind is MessageKind.ERROR]
    assert errors and errors[-1].payload["code"] == "bad_session"
