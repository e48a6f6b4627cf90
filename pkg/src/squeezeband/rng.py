"""Per-trajectory random streams.

Every trajectory draws from its own counter-based Philox stream keyed by
``(seed, trajectory index)``, so an ensemble gives the same numbers whatever
order or batch size its members are simulated in.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence

import numpy as np

# Draws are made in blocks of this many time steps; a fixed block keeps the
# per-stream consumption pattern independent of the run length.
BLOCK_STEPS = 4096


def trajectory_generator(seed: int, index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def normal_blocks(
    seed: int, indices: Sequence[int], n_steps: int, width: int
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(start, block)`` with ``block`` of shape ``(len(indices), steps, width)``.

    Standard normals for steps ``start .. start + steps`` of every listed
    trajectory.
    """
    gens = [trajectory_generator(seed, i) for i in indices]
    for start in range(0, n_steps, BLOCK_STEPS):
        steps = min(BLOCK_STEPS, n_steps - start)
        yield start, np.stack([g.standard_normal((steps, width)) for g in gens])
