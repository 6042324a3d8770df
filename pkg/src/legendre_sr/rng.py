"""Seeded random streams.

Every randomized run derives independent streams from one integer seed via
``numpy.random.SeedSequence`` spawn keys, one key per named component, so
adding draws to one component never shifts another. The bit generator is
PCG64. Normals are produced by Box-Muller on its uniform doubles rather
than numpy's ziggurat so the transform is documented and portable.
"""

from __future__ import annotations

import numpy as np

STREAMS = {
    "process_noise": 0,
    "observation_noise": 1,
    "reservoir": 2,
    "inputs": 3,
    "checks": 4,
}


def stream(seed: int, name: str, trial: int = 0) -> np.random.Generator:
    """Generator for component ``name`` of trial ``trial`` under ``seed``."""
    key = (STREAMS[name], trial)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def box_muller(gen: np.random.Generator, size) -> np.ndarray:
    """Standard normals from pairs of uniforms in (0, 1]."""
    count = int(np.prod(size))
    pairs = (count + 1) // 2
    u1 = 1.0 - gen.random(pairs)
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2.0 * np.pi * u2), radius * np.sin(2.0 * np.pi * u2)])
    return z[:count].reshape(size)


def gaussian(gen: np.random.Generator, cov: np.ndarray, count: int) -> np.ndarray:
    """``count`` draws from ``N(0, cov)`` as rows."""
    chol = np.linalg.cholesky(cov)
    return box_muller(gen, (count, cov.shape[0])) @ chol.T
