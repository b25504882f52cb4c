"""Deterministic random streams.

Streams are built on the counter-based Philox generator so that seeds split
cleanly: `derive_seed(base, *key)` hashes a base seed and an integer key path
into an independent substream seed, and parallel consumers that derive their
own seeds reproduce serial runs exactly.

Gaussian draws go through the inverse normal CDF applied to open-interval
uniforms rather than through a rejection sampler, so the values depend only
on the bit stream and IEEE double arithmetic, not on library internals.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_U53 = float(2.0**-53)


def derive_seed(base_seed: int, *key: int) -> int:
    """Hash (base_seed, key...) into a 64-bit substream seed."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def make_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def uniform_open(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1); safe to feed to inverse CDFs."""
    # (k + 0.5) / 2^53 never hits 0 or 1
    return (rng.integers(0, 1 << 53, size=size, dtype=np.uint64) + 0.5) * _U53


def gaussians(rng: np.random.Generator, size: int, sd: float = 1.0) -> np.ndarray:
    """i.i.d. N(0, sd^2) draws via the inverse-CDF transform."""
    if sd == 0.0:
        return np.zeros(size)
    return sd * ndtri(uniform_open(rng, size))


def pareto(rng: np.random.Generator, size: int, shape: float) -> np.ndarray:
    """Pareto(scale 1) draws: P(X > m) = m^(-shape) for m >= 1."""
    return uniform_open(rng, size) ** (-1.0 / shape)
