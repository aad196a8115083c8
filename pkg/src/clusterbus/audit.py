"""Append-only audit log of every control action.

One JSON object per line, so the log is greppable, tail-able, and append
operations stay atomic per entry (a single write of one full line). Entries
are never rewritten; queries re-read the file, which keeps the log honest
across process restarts.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone


@dataclass(frozen=True)
class AuditEntry:
    """One recorded control action."""

    wall_time: str  # ISO 8601, UTC
    actor: str
    target: str  # node address, block name, "broadcast", or "scan:LO-HI"
    command: str
    outcome: str  # "acked" | "timeout" | "error"
    detail: str = ""

    def to_json(self) -> dict:
        return asdict(self)


class AuditLog:
    """Newline-delimited JSON records at *path*; safe for one writer."""

    def __init__(self, path: str) -> None:
        self.path = path
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        self._lock = threading.Lock()
        self._fp = open(path, "a", encoding="utf-8")

    def close(self) -> None:
        with self._lock:
            if not self._fp.closed:
                self._fp.close()

    def append(
        self,
        actor: str,
        target: str,
        command: str,
        outcome: str,
        detail: str = "",
    ) -> AuditEntry:
        """Write one entry as a single flushed line and return it."""
        entry = AuditEntry(
            wall_time=datetime.now(timezone.utc).isoformat(),
            actor=actor or "anonymous",
            target=str(target),
            command=command,
            outcome=outcome,
            detail=detail,
        )
        line = json.dumps(entry.to_json(), ensure_ascii=False)
        with self._lock:
            self._fp.write(line + "\n")
            self._fp.flush()
        return entry

    def entries(self) -> list[AuditEntry]:
        """Re-read every entry from disk, in append order."""
        result: list[AuditEntry] = []
        try:
            with open(self.path, "r", encoding="utf-8") as fp:
                for line in fp:
                    line = line.strip()
                    if line:
                        result.append(AuditEntry(**json.loads(line)))
        except FileNotFoundError:
            pass
        return result

    def query(
        self,
        since: str | None = None,
        until: str | None = None,
        actor: str | None = None,
        target: str | None = None,
    ) -> list[AuditEntry]:
        """Filter entries by time range, actor, and target."""
        since_dt = _parse_time(since)
        until_dt = _parse_time(until)
        matches = []
        for entry in self.entries():
            if actor is not None and entry.actor != actor:
                continue
            if target is not None and entry.target != target:
                continue
            if since_dt is not None or until_dt is not None:
                stamp = _parse_time(entry.wall_time)
                if since_dt is not None and stamp < since_dt:
                    continue
                if until_dt is not None and stamp > until_dt:
                    continue
            matches.append(entry)
        return matches


def _parse_time(value: str | None) -> datetime | None:
    if value is None:
        return None
    stamp = datetime.fromisoformat(value)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp
