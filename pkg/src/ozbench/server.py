"""WebSocket front end: connections in, one serialized event queue, frames out.

Every routing decision, sequence assignment, and log append happens on a
single consumer task draining one queue; connection handlers only enqueue.
Sim ticks enter the same queue, so observable delivery order equals log
order for every receiver. Each connection gets its own writer task and
unbounded outbox so a slow client never stalls the session.

Endpoints:
  * WS  /session/<id>/attach?role=<participant|dm|rn>
  * GET /ui/<role>?session=<id>  (static console assets, when built)
"""

from __future__ import annotations

import asyncio
import logging
import re
import uuid
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlsplit

import websockets
from websockets.asyncio.server import serve as ws_serve
from websockets.datastructures import Headers
from websockets.http11 import Response

from ozbench.protocol import (
    Channel,
    Envelope,
    MessageKind,
    Role,
    encode,
)
from ozbench.session import AttachError, Session, UnknownSessionError

logger = logging.getLogger("ozbench.server")

_ATTACH_RE = re.compile(r"^/session/([^/]+)/attach$")
_UI_RE = re.compile(r"^/ui/(participant|dm|rn)$")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


def _error_frame(session_id: str, code: str, detail: str = "") -> str:
    envelope = Envelope(
        session=session_id,
        sender=Role.SERVER,
        channel=Channel.SERVER_CTRL,
        kind=MessageKind.ERROR,
        payload={"code": code, "detail": detail},
    )
    return encode(envelope).decode("utf-8")


class WsTransport:
    """Per-connection outbox drained by a dedicated writer task."""

    def __init__(self, connection):
        self.connection = connection
        self.outbox: asyncio.Queue[Optional[str]] = asyncio.Queue()
        self.writer = asyncio.create_task(self._drain())

    def send_text(self, text: str) -> None:
        self.outbox.put_nowait(text)

    async def _drain(self) -> None:
        try:
            while True:
                item = await self.outbox.get()
                if item is None:
                    return
                await self.connection.send(item)
        except websockets.ConnectionClosed:
            return

    async def stop(self) -> None:
        self.outbox.put_nowait(None)
        try:
            await self.writer
        except asyncio.CancelledError:
            pass


class SessionServer:
    """Hosts sessions behind one WebSocket endpoint."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 8080,
        ui_dir: str | Path | None = None,
        one_shot: bool = False,
    ):
        self.host = host
        self.port = port
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.one_shot = one_shot
        self.sessions: dict[str, Session] = {}
        self.queue: asyncio.Queue = asyncio.Queue()
        self._stopped = asyncio.Event()
        self._started = asyncio.Event()

    def add_session(self, session: Session) -> None:
        self.sessions[session.id] = session

    def next_seq(self, session_id: str) -> int:
        try:
            return self.sessions[session_id].next_seq()
        except KeyError:
            raise UnknownSessionError(session_id) from None

    # --- lifecycle -------------------------------------------------------------

    async def run(self) -> None:
        async with ws_serve(
            self._handler,
            self.host,
            self.port,
            process_request=self._process_request,
        ) as ws_server:
            if self.port == 0:
                sockets = ws_server.sockets or ()
                if sockets:
                    self.port = sockets[0].getsockname()[1]
            self._started.set()
            processor = asyncio.create_task(self._process())
            ticker = asyncio.create_task(self._ticker())
            try:
                await self._stopped.wait()
            finally:
                ticker.cancel()
                processor.cancel()
                for session in self.sessions.values():
                    session.close()

    async def wait_started(self) -> None:
        await self._started.wait()

    def stop(self) -> None:
        self._stopped.set()

    # --- queue consumer -----------------------------------------------------------

    async def _process(self) -> None:
        while True:
            item = await self.queue.get()
            kind = item[0]
            try:
                if kind == "frame":
                    _, session, role, text = item
                    session.handle_text(role, text)
                elif kind == "tick":
                    for session in self.sessions.values():
                        session.tick()
                elif kind == "attach":
                    _, session, role, transport, fut = item
                    try:
                        session.attach(role, transport)
                        if not fut.done():
                            fut.set_result(None)
                    except AttachError as exc:
                        if not fut.done():
                            fut.set_exception(exc)
                elif kind == "detach":
                    _, session, role, transport = item
                    if session.attached.get(role) is transport:
                        session.detach(role)
            except Exception:
                logger.exception("error while processing %s", kind)
            if self.one_shot and self.sessions and all(
                s.state == "closed" for s in self.sessions.values()
            ):
                self.stop()

    async def _ticker(self) -> None:
        # one cadence for the whole server; sessions ignore ticks unless running
        tick_s = min(
            (s.config.tick_s for s in self.sessions.values()), default=0.05
        )
        while True:
            await asyncio.sleep(tick_s)
            self.queue.put_nowait(("tick",))

    # --- connections -----------------------------------------------------------------

    async def _handler(self, connection) -> None:
        parts = urlsplit(connection.request.path)
        match = _ATTACH_RE.match(parts.path)
        if not match:
            await connection.send(_error_frame("", "bad_path", parts.path))
            await connection.close()
            return
        session_id = match.group(1)
        role_values = parse_qs(parts.query).get("role", [])
        session = self.sessions.get(session_id)
        if session is None:
            await connection.send(_error_frame(session_id, "unknown_session", session_id))
            await connection.close()
            return
        try:
            role = Role.parse(role_values[0]) if role_values else None
        except ValueError:
            role = None
        if role is None:
            await connection.send(
                _error_frame(session_id, "bad_role", ",".join(role_values))
            )
            await connection.close()
            return

        transport = WsTransport(connection)
        fut: asyncio.Future = asyncio.get_running_loop().create_future()
        self.queue.put_nowait(("attach", session, role, transport, fut))
        try:
            await fut
        except AttachError as exc:
            await transport.stop()
            await connection.send(_error_frame(session_id, exc.code, exc.detail))
            await connection.close()
            return

        try:
            async for message in connection:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", errors="replace")
                self.queue.put_nowait(("frame", session, role, message))
        except websockets.ConnectionClosed:
            pass
        finally:
            self.queue.put_nowait(("detach", session, role, transport))
            await transport.stop()

    # --- static assets -------------------------------------------------------------------

    def _process_request(self, connection, request):
        path = urlsplit(request.path).path
        if _ATTACH_RE.match(path):
            return None  # proceed with the WebSocket handshake
        return self._static_response(path)

    def _static_response(self, path: str) -> Response:
        def plain(status: int, text: str) -> Response:
            body = text.encode("utf-8")
            return Response(
                status,
                "OK" if status == 200 else "Not Found",
                Headers({"Content-Type": "text/plain; charset=utf-8",
                         "Content-Length": str(len(body))}),
                body,
            )

        if self.ui_dir is None:
            return plain(404, "no console assets configured (serve with --ui-dir)")
        if _UI_RE.match(path):
            target = self.ui_dir / "index.html"
        elif path.startswith("/ui/"):
            candidate = (self.ui_dir / path[len("/ui/"):]).resolve()
            if not str(candidate).startswith(str(self.ui_dir.resolve())):
                return plain(404, "not found")
            target = candidate
        else:
            return plain(404, "not found")
        if not target.is_file():
            return plain(404, f"not found: {path}")
        body = target.read_bytes()
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        return Response(
            200,
            "OK",
            Headers({"Content-Type": content_type, "Content-Length": str(len(body))}),
            body,
        )


def generate_session_id() -> str:
    return uuid.uuid4().hex[:8]
