"""Seeded random streams.

All randomness goes through numpy's counter-based Philox generator. Independent
substreams are addressed by a spawn key appended to the 64-bit seed, e.g.
``(run, generation)`` inside the optimizer or ``(sweep_point, trial)`` in the
benchmark driver, so results never depend on execution order or thread count.
"""

import numpy as np


SEED_LIMIT = 2**64


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Philox generator for ``seed`` and the substream named by ``spawn_key``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *spawn_key: int) -> int:
    """64-bit child seed: the SeedSequence hash of (seed, spawn_key)."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
