"""Counter-based random substreams and deterministic block execution.

Every Monte Carlo estimator in the package draws its samples in fixed-size
blocks.  Block ``b`` of a computation keyed by ``key`` uses the generator
``substream(seed, *key, b)``, which is a pure function of its arguments.
Sample ``k`` therefore always lives in block ``k // BLOCK_SIZE`` at row
``k % BLOCK_SIZE``, whatever the total sample count or the number of worker
threads.  Blocks are always drawn at full size and truncated afterwards, so
a prefix of a run with K samples equals the run with fewer samples.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .errors import ValidationError

BLOCK_SIZE = 1024
MAX_SEED = 2**64 - 1
THREADS_ENV = "ARA_ENGINE_THREADS"

# Stream tags keep unrelated computations on disjoint substreams.
STREAM_ATTACKER = 0
STREAM_NASH = 100
STREAM_DOMINANCE = 200


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream identified by ``(seed, *key)``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, then ``ARA_ENGINE_THREADS``, then all cores."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValidationError("threads must be >= 1")
    return threads


def run_blocks(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    seed: int,
    key: tuple[int, ...],
    threads: int | None = None,
) -> np.ndarray:
    """Evaluate ``draw(rng, BLOCK_SIZE)`` on every block and stack the first ``n`` rows.

    ``draw`` must return an array whose leading axis has length BLOCK_SIZE.
    The reduction is a concatenation in block order, so the output is
    independent of ``threads``.
    """
    if n < 1:
        raise ValidationError("sample count must be >= 1")
    n_blocks = -(-n // BLOCK_SIZE)

    def one(b: int) -> np.ndarray:
        out = draw(substream(seed, *key, b), BLOCK_SIZE)
        return out[: min(BLOCK_SIZE, n - b * BLOCK_SIZE)]

    workers = min(resolve_threads(threads), n_blocks)
    if workers == 1:
        parts = [one(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(n_blocks)))
    return np.concatenate(parts, axis=0)
