"""Deterministic seed derivation for named random streams.

Every component's randomness flows from one master seed; named substreams
(per model, per metric, per fold) derive stable 63-bit seeds so results do
not depend on execution order and stay reproducible even when components
run concurrently.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, label: str) -> int:
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
