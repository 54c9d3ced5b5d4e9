"""Canonical JSON and timestamp formatting shared by the store, the wire
protocol, and the event log.

One serialization rule everywhere: compact JSON with sorted keys, UTF-8,
timestamps as RFC 3339 UTC with exactly millisecond precision. Byte-for-byte
determinism of this form is what the snapshot/export and repeated-read
guarantees rest on.
"""

from __future__ import annotations

import json
import re
from datetime import date, datetime, timezone
from typing import Any

_TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z$")


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_dump_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def truncate_ms(dt: datetime) -> datetime:
    """Clamp a datetime to UTC with millisecond precision."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def format_ts(dt: datetime) -> str:
    dt = truncate_ms(dt)
    return f"{dt.strftime('%Y-%m-%dT%H:%M:%S')}.{dt.microsecond // 1000:03d}Z"


def parse_ts(s: str) -> datetime:
    if not _TS_RE.match(s):
        raise ValueError(f"bad timestamp: {s!r}")
    return datetime.strptime(s, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


def format_date(d: date) -> str:
    return d.isoformat()


def parse_date(s: str) -> date:
    return date.fromisoformat(s)


def epoch_ms(dt: datetime) -> int:
    return int(truncate_ms(dt).timestamp() * 1000)
