"""Named-stream random generators derived from one master seed.

Every random choice in the pipeline draws from its own named stream so that
adding a new consumer never perturbs the choices of existing ones.
"""

from __future__ import annotations

import hashlib
import random


def stream_seed(master_seed: int, name: str) -> int:
    """Derive a stable 64-bit seed for the stream `name`."""
    digest = hashlib.sha256(f"{master_seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream_rng(master_seed: int, name: str) -> random.Random:
    """A fresh generator for the stream `name` under `master_seed`."""
    return random.Random(stream_seed(master_seed, name))
