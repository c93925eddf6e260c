"""Canonical byte encodings used for hashing and on-chain payloads.

Every digest in the system is computed over the canonical JSON form of a
plain Python value: keys sorted, no whitespace, integers in base 10, and
binary data pre-encoded as lowercase hex strings by the caller.  Two
structurally equal values therefore always serialize to identical bytes.
"""

from __future__ import annotations

import json
from typing import Any


def canonical_json(value: Any) -> bytes:
    """Serialize ``value`` to canonical JSON bytes."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=True
    ).encode("utf-8")


def from_canonical_json(data: bytes) -> Any:
    return json.loads(data.decode("utf-8"))


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str) -> bytes:
    return bytes.fromhex(text)
