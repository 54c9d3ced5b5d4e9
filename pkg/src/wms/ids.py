"""Lexically sortable entity identifiers.

26-character uppercase Crockford base32, 48-bit millisecond timestamp prefix
plus 80 random bits. Sorting id strings therefore sorts by creation time with
stable tie-breaking, which the store's list ordering relies on.
"""

from __future__ import annotations

import secrets
import time
from typing import Callable

ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"
ID_LENGTH = 26
_RANDOM_BYTES = 10
_MAX_TS_MS = (1 << 48) - 1
_DECODE = {c: i for i, c in enumerate(ALPHABET)}


def new_id(
    timestamp_ms: int | None = None,
    randbytes: Callable[[int], bytes] | None = None,
) -> str:
    """Generate a fresh id; timestamp and randomness are injectable so callers
    that need reproducible output (the seed fixtures) can pin both."""
    ts = time.time_ns() // 1_000_000 if timestamp_ms is None else timestamp_ms
    if not 0 <= ts <= _MAX_TS_MS:
        raise ValueError(f"timestamp out of range: {ts}")
    rand = (secrets.token_bytes if randbytes is None else randbytes)(_RANDOM_BYTES)
    if len(rand) != _RANDOM_BYTES:
        raise ValueError(f"need exactly {_RANDOM_BYTES} random bytes")
    value = (ts << 80) | int.from_bytes(rand, "big")
    chars = []
    for shift in range(ID_LENGTH * 5 - 5, -1, -5):
        chars.append(ALPHABET[(value >> shift) & 0b11111])
    return "".join(chars)


def is_valid_id(s: str) -> bool:
    return len(s) == ID_LENGTH and all(c in _DECODE for c in s)


def id_timestamp_ms(s: str) -> int:
    """Extract the embedded creation timestamp (milliseconds since epoch)."""
    if not is_valid_id(s):
        raise ValueError(f"not a valid id: {s!r}")
    value = 0
    for c in s:
        value = (value << 5) | _DECODE[c]
    return value >> 80
