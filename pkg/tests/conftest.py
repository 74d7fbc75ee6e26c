"""Shared builders for random games and degenerate judgments."""

from __future__ import annotations

import json

import numpy as np
import pytest

from ara_engine.core_model.games import DiscreteGame, Structure
from ara_engine.judgments import JudgmentModel, RandomBeliefSpec, RandomProbabilitySpec, RandomUtilitySpec


def labels(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


def random_prob(rng, shape) -> np.ndarray:
    return rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])


def random_game(rng, nd=3, na=3, ns=2, structure=Structure.SIMULTANEOUS, attacker=True) -> DiscreteGame:
    shape = (nd, na, ns)
    return DiscreteGame(
        labels("d", nd), labels("a", na), labels("s", ns),
        random_prob(rng, shape), rng.normal(size=shape),
        random_prob(rng, shape) if attacker else None,
        rng.normal(size=shape) if attacker else None,
        structure,
    )


def fixed_judgments(game: DiscreteGame, belief=None) -> JudgmentModel:
    """Point-mass judgments at the game's own attacker tables."""
    return JudgmentModel(
        random_util=RandomUtilitySpec.fixed(game.util_a),
        random_prob=RandomProbabilitySpec.fixed(game.prob_a),
        random_belief=belief if belief is not None else RandomBeliefSpec.uniform(),
    )


def brute_argmax(values) -> int:
    """First index of the maximum by a plain loop."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def psi_loop(util, prob) -> np.ndarray:
    """psi(d, a) by explicit triple loop."""
    nd, na, ns = util.shape
    out = np.zeros((nd, na))
    for d in range(nd):
        for a in range(na):
            acc = 0.0
            for s in range(ns):
                acc += util[d, a, s] * prob[d, a, s]
            out[d, a] = acc
    return out


def write_json(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
