"""Simultaneous defend-attack games: attack simulation, ARA decision, level-k recursion."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core_model.games import DiscreteGame
from ..errors import ShapeConflictError, ValidationError
from ..judgments import JudgmentModel, RandomBeliefSpec
from ..rng import STREAM_ATTACKER, check_seed
from .engine import attacker_choices, defender_choices, frequencies
from .reports import ActionDistribution, DecisionReport, argmax_first, weighted_rows

MAX_DEPTH = 5
_MIRROR_NAMES = "defender mirror: utility, probability, belief"
_ATTACKER_NAMES = "attacker: utility, probability, belief"


def _check_k(K: int) -> int:
    if int(K) < 1:
        raise ValidationError("K must be >= 1")
    return int(K)


@dataclass(frozen=True, eq=False)
class LevelKConfig:
    """Depth-``k`` recursion.  ``levels[m-1]`` is recursion row ``m``.

    Odd rows model the attacker (attacker columns of the row), even rows
    model the defender as the attacker sees her (mirror columns).  The
    deepest row uses its own belief spec when it has one, else
    ``base_belief`` (uniform unless supplied).
    """

    k: int
    levels: tuple[JudgmentModel, ...] = ()
    base_belief: RandomBeliefSpec = field(default_factory=RandomBeliefSpec.uniform)
    K_per_level: int | tuple[int, ...] = 10_000
    max_depth: int = MAX_DEPTH

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.k < 0:
            raise ValidationError("level-k depth must be >= 0")
        if self.k > self.max_depth:
            raise ValidationError(f"level-k depth {self.k} exceeds the cap {self.max_depth}")
        if len(self.levels) < self.k:
            missing = len(self.levels) + 1
            raise ValidationError(
                f"level-k judgments missing recursion row {missing} ({_row_names(missing)})")
        if len(self.levels) > self.k:
            raise ValidationError(f"level-k depth {self.k} needs exactly {self.k} judgment rows, "
                                  f"got {len(self.levels)}")
        for m, row in enumerate(self.levels, start=1):
            ok = row.has_attacker if m % 2 == 1 else row.has_mirror
            if not ok:
                raise ValidationError(
                    f"level-k judgments missing recursion row {m} ({_row_names(m)})")
        if isinstance(self.K_per_level, (list, tuple)):
            if len(self.K_per_level) != self.k:
                raise ValidationError("K_per_level needs one entry per level")
            object.__setattr__(self, "K_per_level", tuple(_check_k(x) for x in self.K_per_level))
        else:
            _check_k(self.K_per_level)

    @classmethod
    def from_judgments(cls, j: JudgmentModel, k: int, **kw) -> "LevelKConfig":
        """Use the first ``k`` rows of ``j`` (``j`` itself plus ``j.deeper``)."""
        return cls(k, j.rows[:k], **kw)

    def samples_at(self, m: int) -> int:
        if isinstance(self.K_per_level, tuple):
            return self.K_per_level[m - 1]
        return int(self.K_per_level)


def _row_names(m: int) -> str:
    return _ATTACKER_NAMES if m % 2 == 1 else _MIRROR_NAMES


def _belief_distribution(spec: RandomBeliefSpec, labels: Sequence[str]) -> ActionDistribution:
    """Expected belief vector of a non-recursive belief spec."""
    n = len(labels)
    if spec.kind == "uniform":
        return ActionDistribution.uniform(labels)
    if spec.kind == "fixed":
        return ActionDistribution(tuple(labels), spec.probs, 1)
    if spec.kind == "dirichlet":
        if len(spec.alphas) != n:
            raise ShapeConflictError("judgment/game shape conflict: belief size")
        return ActionDistribution(tuple(labels), spec.alphas / spec.alphas.sum(), 1)
    raise ValidationError("recursive belief has no closed-form expectation")


def _row_distribution(game: DiscreteGame, cfg: LevelKConfig, m: int, seed: int, threads,
                      tie_break: str, trace: list) -> ActionDistribution:
    """Distribution over the actions of the agent modeled at recursion row ``m``."""
    row = cfg.levels[m - 1]
    attacker = m % 2 == 1
    own_belief = row.random_belief if attacker else row.mirror_belief
    if m == cfg.k:
        belief = own_belief if own_belief is not None and own_belief.kind != "recursive" else cfg.base_belief
    else:
        deeper = _row_distribution(game, cfg, m + 1, seed, threads, tie_break, trace)
        belief = RandomBeliefSpec.fixed(deeper.probs)
    K = cfg.samples_at(m)
    shape = game.shape
    if attacker:
        row.check_attacker(shape, shape)
        choices = attacker_choices(row, shape, belief, K, seed, (STREAM_ATTACKER, m), threads, tie_break)
        labels = game.attacker_actions
    else:
        if row.mirror_util.shape != shape or row.mirror_prob.shape != shape:
            raise ShapeConflictError(f"judgment/game shape conflict: mirror tables at row {m}")
        choices = defender_choices(row, shape, belief, K, seed, (STREAM_ATTACKER, m), threads, tie_break)
        labels = game.defender_actions
    dist = ActionDistribution.from_counts(labels, frequencies(choices, len(labels)), K)
    trace.append({"row": m, "agent": "A" if attacker else "D", "K": K, "distribution": dist.as_dict()})
    return dist


def estimate_attack_distribution(game: DiscreteGame, j: JudgmentModel, K: int, seed: int,
                                 threads: int | None = None, tie_break: str = "lowest",
                                 stream: int = STREAM_ATTACKER) -> ActionDistribution:
    """Empirical frequency of the attacker's sampled best responses.

    For each of ``K`` draws (u_A, p_A, pi_A) from ``j`` the attacker solves
    argmax_a sum_d [sum_s u_A p_A] pi_A(d); the returned distribution is the
    frequency of each action.  A recursive belief is first resolved by
    solving the deeper rows of ``j``.
    """
    K = _check_k(K)
    seed = check_seed(seed)
    shape = game.shape
    j.check_attacker(shape, shape)
    belief = j.random_belief
    if belief is not None and belief.kind == "recursive":
        cfg = LevelKConfig.from_judgments(j, j.depth, K_per_level=K)
        return _row_distribution(game, cfg, 1, seed, threads, tie_break, [])
    choices = attacker_choices(j, shape, belief, K, seed, (stream, 1), threads, tie_break)
    return ActionDistribution.from_counts(game.attacker_actions,
                                          frequencies(choices, len(game.attacker_actions)), K)


def best_response_to(game: DiscreteGame, pi: ActionDistribution | np.ndarray) -> tuple[int, np.ndarray]:
    """(d*, expected utilities) maximizing sum_a psi_D(d, a) pi(a)."""
    probs = pi.probs if isinstance(pi, ActionDistribution) else np.asarray(pi, dtype=float)
    if probs.shape != (len(game.attacker_actions),):
        raise ShapeConflictError("attack distribution does not match the attacker action set")
    eu = weighted_rows(game.psi("D"), probs)
    return argmax_first(eu), eu


def decide(game: DiscreteGame, pi: ActionDistribution, concept: str, seed=None, K=None,
           diagnostics=None) -> DecisionReport:
    d, eu = best_response_to(game, pi)
    return DecisionReport(
        concept=concept,
        chosen=game.defender_actions[d],
        expected_utility=float(eu[d]),
        expected_utilities=dict(zip(game.defender_actions, (float(x) for x in eu))),
        distribution=pi,
        seed=seed,
        K=K,
        diagnostics=diagnostics or {},
    )


def ara_simultaneous(game: DiscreteGame, j: JudgmentModel, K: int, seed: int,
                     threads: int | None = None, tie_break: str = "lowest") -> DecisionReport:
    """d* = argmax_d sum_a psi_D(d, a) pi_hat(a), with pi_hat simulated from ``j``."""
    pi = estimate_attack_distribution(game, j, K, seed, threads, tie_break)
    return decide(game, pi, "ara", seed, K, {"tie_break": tie_break})


def level_k_solve(game: DiscreteGame, cfg: LevelKConfig, seed: int, threads: int | None = None,
                  tie_break: str = "lowest") -> DecisionReport:
    """Defender's decision from a depth-``k`` chain of nested opponent models.

    Level 0 is the base belief over attacks.  Otherwise the deepest row
    solves its agent's problem against its base belief, each shallower row
    best-responds to the distribution produced below it, and row 1 yields
    the attack distribution the defender optimizes against.
    """
    seed = check_seed(seed)
    trace: list = []
    if cfg.k == 0:
        pi = _belief_distribution(cfg.base_belief, game.attacker_actions)
        K = None
    else:
        pi = _row_distribution(game, cfg, 1, seed, threads, tie_break, trace)
        K = cfg.samples_at(1)
    diagnostics = {
        "depth": cfg.k,
        "K_per_level": [cfg.samples_at(m) for m in range(1, cfg.k + 1)],
        "levels": sorted(trace, key=lambda t: t["row"]),
        "tie_break": tie_break,
    }
    return decide(game, pi, f"level-{cfg.k}", seed, K, diagnostics)
