"""Deterministic RNG derivation.

All randomness in a run flows from one master seed.  Independent streams are
derived with ``numpy.random.SeedSequence`` spawn keys, so per-sample and
per-point streams are reproducible regardless of generation order or worker
count.
"""

from __future__ import annotations

import numpy as np

STREAM_SAMPLE = 0
STREAM_SPLIT = 1
STREAM_CHANNEL = 2
STREAM_SWEEP = 3


def derived_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by ``key`` under ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    """Per-sample generator; sample content is independent of generation order."""
    return derived_rng(master_seed, STREAM_SAMPLE, index)
