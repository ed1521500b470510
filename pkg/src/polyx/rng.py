"""Seed discipline.

All randomness in the package flows from a single 64-bit base seed. Each
component derives its own independent stream from (seed, label, index) through
``numpy.random.SeedSequence`` (a splitmix-style derivation), so repeated runs
are reproducible and "R runs" means base seeds S, S+1, ..., S+R-1.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream", "run_seeds"]


def _label_key(label: str) -> int:
    # crc32 is stable across processes and platforms, unlike hash().
    return zlib.crc32(label.encode("utf-8"))


def stream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Derive the named random stream for a component.

    Args:
        seed: the run's base seed (any Python int; reduced mod 2**64).
        label: component name, e.g. "kmeans-init" or "bench-polyhedron".
        index: optional sub-stream index (per class, per k, ...).
    """
    ss = np.random.SeedSequence([seed % 2**64, _label_key(label), index])
    return np.random.Generator(np.random.PCG64(ss))


def run_seeds(base_seed: int, runs: int) -> list[int]:
    """Seeds for a multi-run experiment: base, base+1, ..., base+runs-1."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    return [base_seed + r for r in range(runs)]
