"""Deterministic, label-addressed random streams.

Every consumer (terminal placement, traffic, fading, block errors, ...)
draws from its own counter-based stream derived from (master seed, label),
so adding or removing one consumer never perturbs the draws of another and
the two radio stacks can share identical scenario realizations.
"""

import hashlib

import numpy as np


def stream(master_seed: int, label: str) -> np.random.Generator:
    """Return an independent Generator for (master_seed, label)."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    spawn_key = tuple(
        int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)
    )
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed: int, label: str) -> int:
    """Deterministic child seed for (master_seed, label)."""
    digest = hashlib.blake2b(f"{master_seed}/{label}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
