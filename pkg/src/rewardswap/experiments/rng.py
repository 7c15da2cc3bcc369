"""Reproducible random streams for the Monte Carlo experiments.

Seeds for sweep cells are derived statelessly with splitmix64 so that any
cell can be re-run in isolation. Each stream is numpy's PCG64 (PCG XSL-RR
128/64) seeded through ``numpy.random.SeedSequence``. Uniform doubles are
formed from raw 64-bit outputs as ``(x >> 11) * 2**-53`` and normals with the
cosine branch of Box-Muller, so a port only needs the same bit generator
to reproduce every draw. See docs/rng.md.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, cell: int, replication: int) -> int:
    h = splitmix64(int(master) & MASK64)
    h = splitmix64(h ^ (int(cell) & MASK64))
    return splitmix64(h ^ (int(replication) & MASK64))


def uniforms(seed: int, n: int) -> np.ndarray:
    """``n`` doubles in [0, 1) from the PCG64 stream for ``seed``."""
    raw = np.random.PCG64(int(seed) & MASK64).random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def lognormal_params(mean: float, std: float) -> tuple[float, float]:
    """Underlying normal (mu, sigma) whose lognormal has the given mean and std."""
    m2 = mean * mean
    return float(np.log(m2 / np.sqrt(m2 + std * std))), float(np.sqrt(np.log1p(std * std / m2)))


def redemption_sizes(
    seed: int,
    n: int,
    mean: float = 50.0,
    std: float = 15.0,
    whale_prob: float = 0.10,
    whale_size: float = 200.0,
) -> np.ndarray:
    """Per-transaction redemption sizes.

    Transaction ``t`` consumes uniforms ``3t, 3t+1, 3t+2``: the first decides
    whether it is a whale, the other two feed Box-Muller for the lognormal
    draw. The slot layout is fixed whether or not the whale branch is taken.
    """
    u = uniforms(seed, 3 * n).reshape(n, 3)
    mu_n, sigma_n = lognormal_params(mean, std)
    z = np.sqrt(-2.0 * np.log1p(-u[:, 1])) * np.cos(2.0 * np.pi * u[:, 2])
    sizes = np.exp(mu_n + sigma_n * z)
    return np.where(u[:, 0] < whale_prob, whale_size, sizes)
