"""Small shared utilities: seed derivation, deterministic noise, JSONL files."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable


def derive_seed(*parts: object) -> int:
    """Derive a stable 63-bit seed from a master seed plus context labels.

    Stable across processes and platforms, unlike built-in ``hash`` which is
    salted per interpreter run.
    """
    text = ":".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def unit_normal(seed: int, key: bytes, draw: int = 0) -> float:
    """Standard-normal deviate that is a pure function of (seed, key, draw)."""
    h = hashlib.blake2b(digest_size=16)
    h.update(str(seed).encode("utf-8"))
    h.update(b"\x00")
    h.update(key)
    h.update(draw.to_bytes(8, "big", signed=False))
    d = h.digest()
    # Box-Muller; u1 lands in (0, 1] so the log stays finite.
    u1 = (int.from_bytes(d[:8], "big") + 1) / 2.0**64
    u2 = int.from_bytes(d[8:], "big") / 2.0**64
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def content_hash(obj: object) -> str:
    """SHA-256 of a canonical JSON rendering; used in run manifests."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
