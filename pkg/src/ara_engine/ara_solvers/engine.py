"""Monte Carlo core: sample a modeled agent's problem, record its best response.

All functions return integer choice arrays with one row per sample.  Sample
``k`` is drawn from block ``k // BLOCK_SIZE`` of the substream
``(seed, stream, level, block)``.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..core_model.games import expected_table
from ..judgments import JudgmentModel, RandomBeliefSpec, sample_attacker_problems
from ..rng import run_blocks

TIE_BREAKS = ("lowest", "random")


def pick(obj: np.ndarray, rng: np.random.Generator, tie_break: str = "lowest") -> np.ndarray:
    """Argmax along the last axis.

    ``lowest`` takes the first maximizer.  ``random`` picks uniformly among
    exact maximizers using one extra uniform per row, drawn after all other
    draws of the block.
    """
    if tie_break == "lowest":
        return np.argmax(obj, axis=-1)
    if tie_break != "random":
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
    ties = obj == obj.max(axis=-1, keepdims=True)
    count = ties.sum(axis=-1)
    r = np.floor(rng.random(obj.shape[:-1]) * count).astype(int)
    rank = np.cumsum(ties, axis=-1) - 1
    return np.argmax(ties & (rank == r[..., None]), axis=-1)


def against_belief(psi: np.ndarray, belief: np.ndarray, own_axis: int) -> np.ndarray:
    """Expected utility of each own action against a belief over the opponent.

    ``psi`` has shape (n, |D|, |A|).  For ``own_axis=2`` (attacker) returns
    sum_d psi[:, d, a] belief[:, d]; for ``own_axis=1`` (defender) returns
    sum_a psi[:, d, a] belief[:, a].  Accumulation is in ascending index.
    """
    if own_axis == 2:
        acc = np.zeros((psi.shape[0], psi.shape[2]))
        for d in range(psi.shape[1]):
            acc = acc + psi[:, d, :] * belief[:, d : d + 1]
        return acc
    acc = np.zeros((psi.shape[0], psi.shape[1]))
    for a in range(psi.shape[2]):
        acc = acc + psi[:, :, a] * belief[:, a : a + 1]
    return acc


def attacker_choices(j: JudgmentModel, shape: tuple[int, int, int], belief: RandomBeliefSpec | None,
                     K: int, seed: int, key: tuple[int, int], threads=None,
                     tie_break: str = "lowest") -> np.ndarray:
    """A*_k = argmax_a sum_d Psi_A^k(d, a) pi_A^k(d) for k < K."""
    row = replace(j, random_belief=belief)

    def draw(rng, n):
        prob = sample_attacker_problems(row, shape, rng, n)
        psi = expected_table(prob.util, prob.prob)
        return pick(against_belief(psi, prob.belief, 2), rng, tie_break)

    return run_blocks(draw, K, seed, key, threads)


def defender_choices(j: JudgmentModel, shape: tuple[int, int, int], belief: RandomBeliefSpec,
                     K: int, seed: int, key: tuple[int, int], threads=None,
                     tie_break: str = "lowest") -> np.ndarray:
    """Defender's best responses under the mirror judgments (U_D, P_D, Pi_D)."""
    n_d, n_a, _ = shape

    def draw(rng, n):
        util, prob = j.sample_mirror_tables(rng, n)
        b = belief.sample(rng, n, n_a)
        psi = expected_table(util, prob)
        return pick(against_belief(psi, b, 1), rng, tie_break)

    return run_blocks(draw, K, seed, key, threads)


def sequential_choices(j: JudgmentModel, shape: tuple[int, int, int], K: int, seed: int,
                       key: tuple[int, int], threads=None, tie_break: str = "lowest") -> np.ndarray:
    """argmax_a Psi_A^k(d, a) for every d; result has shape (K, |D|)."""

    def draw(rng, n):
        util, prob = j.sample_attacker_tables(rng, n)
        return pick(expected_table(util, prob), rng, tie_break)

    return run_blocks(draw, K, seed, key, threads)


def frequencies(choices: np.ndarray, n_actions: int) -> np.ndarray:
    return np.bincount(choices, minlength=n_actions).astype(float)
