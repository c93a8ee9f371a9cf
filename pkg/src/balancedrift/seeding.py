"""Stable seed derivation shared by the simulator and the experiment runner."""

import hashlib

import numpy as np

_SEED_MASK = (1 << 63) - 1


def derive_seed(*parts) -> int:
    """Hash an arbitrary tuple of ints/strings into a 63-bit seed.

    The hash is independent of the Python process (no ``hash()`` salting), so
    derived seeds are stable across runs, platforms and worker processes.
    """
    h = hashlib.sha256()
    for part in parts:
        token = f"{type(part).__name__}:{part}".encode()
        h.update(len(token).to_bytes(4, "little"))
        h.update(token)
    return int.from_bytes(h.digest()[:8], "little") & _SEED_MASK


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))
