"""Small shared helpers: stable seed derivation and canonical JSON lines."""

import hashlib
import json


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary parts.

    Uses blake2b so the derivation is identical across processes and runs
    (unlike ``hash()``); used to give every (caption, attempt) and every
    image its own RNG stream.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def json_line(obj) -> str:
    """Canonical single-line JSON: fixed separators, keys in insertion order."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))
