"""Append-only session log: one header line, then one event record per line.

The log is the authoritative record of a session. Sequence numbers are
dense (0, 1, 2, ...) over records; a gap or duplicate means the file is
corrupt. The header pins everything replay needs: hashes of the world and
rules files, the raw world text itself, and the simulator configuration,
so a log can be replayed with nothing but this file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional, TextIO

from ozbench.protocol import DecodeError, Envelope, Role, from_frame, to_frame
from ozbench.simulator import SimConfig

DELIVERED = "delivered"
DENIED = "denied"


class CorruptLogError(ValueError):
    def __init__(self, detail: str, seq: int | None = None):
        self.seq = seq
        super().__init__(f"corrupt_log: {detail}")


class WorldMismatchError(ValueError):
    def __init__(self, detail: str = ""):
        super().__init__(f"world_mismatch{': ' + detail if detail else ''}")


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class LogHeader:
    world_sha256: str
    rules_sha256: str
    version: str
    session: str = ""
    world_path: str = ""
    world_text: str = ""
    config: SimConfig = field(default_factory=SimConfig)

    def to_obj(self) -> dict[str, Any]:
        return {
            "world_sha256": self.world_sha256,
            "rules_sha256": self.rules_sha256,
            "version": self.version,
            "session": self.session,
            "world_path": self.world_path,
            "world": self.world_text,
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "LogHeader":
        for key in ("world_sha256", "rules_sha256", "version"):
            if key not in obj:
                raise CorruptLogError(f"header missing {key}")
        return cls(
            world_sha256=obj["world_sha256"],
            rules_sha256=obj["rules_sha256"],
            version=obj["version"],
            session=obj.get("session", ""),
            world_path=obj.get("world_path", ""),
            world_text=obj.get("world", ""),
            config=SimConfig.from_dict(obj.get("config", {})),
        )


@dataclass(frozen=True)
class EventRecord:
    """An envelope plus what the server did with it."""

    envelope: Envelope
    disposition: str  # delivered | denied
    reason: Optional[str] = None  # denial reason
    delivered_to: tuple[Role, ...] = ()
    skipped: tuple[Role, ...] = ()  # allowed receivers that were not attached

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "envelope": to_frame(self.envelope),
            "disposition": self.disposition,
            "delivered_to": [r.value for r in self.delivered_to],
        }
        if self.reason is not None:
            obj["reason"] = self.reason
        if self.skipped:
            obj["skipped"] = [r.value for r in self.skipped]
        return obj

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "EventRecord":
        if not isinstance(obj, dict) or "envelope" not in obj:
            raise CorruptLogError("record is not an object with an envelope")
        try:
            envelope = from_frame(obj["envelope"])
        except DecodeError as exc:
            raise CorruptLogError(f"bad envelope: {exc}") from None
        disposition = obj.get("disposition")
        if disposition not in (DELIVERED, DENIED):
            raise CorruptLogError(f"bad disposition {disposition!r}", seq=envelope.seq)
        return cls(
            envelope=envelope,
            disposition=disposition,
            reason=obj.get("reason"),
            delivered_to=tuple(Role(r) for r in obj.get("delivered_to", [])),
            skipped=tuple(Role(r) for r in obj.get("skipped", [])),
        )


class LogWriter:
    """Single-writer JSONL sink; every record is flushed as it lands."""

    def __init__(self, path: str | Path, header: LogHeader):
        self.path = Path(path)
        if self.path.exists():
            raise FileExistsError(f"log already exists: {self.path}")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: TextIO = open(self.path, "w", encoding="utf-8")
        self._write_obj(header.to_obj())

    def append(self, record: EventRecord) -> None:
        self._write_obj(record.to_obj())

    def _write_obj(self, obj: dict[str, Any]) -> None:
        self._fh.write(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
        self._fh.write("\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


def iter_log(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError:
                raise CorruptLogError(f"line {lineno} is not valid JSON") from None


def read_log(path: str | Path) -> tuple[LogHeader, list[EventRecord]]:
    """Read and validate a whole log: header first, then dense-seq records."""
    header: LogHeader | None = None
    records: list[EventRecord] = []
    expected_seq = 0
    for lineno, obj in iter_log(path):
        if header is None:
            header = LogHeader.from_obj(obj)
            continue
        record = EventRecord.from_obj(obj)
        if record.envelope.seq != expected_seq:
            raise CorruptLogError(
                f"expected seq {expected_seq}, found {record.envelope.seq} at line {lineno}",
                seq=expected_seq,
            )
        expected_seq += 1
        records.append(record)
    if header is None:
        raise CorruptLogError("empty file: missing header line")
    return header, records
