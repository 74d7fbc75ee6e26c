"""One decision maker facing several adversaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InstanceTooLargeError, ShapeConflictError, ValidationError
from ..judgments import JudgmentModel
from ..rng import STREAM_NASH, check_seed
from .engine import attacker_choices, frequencies
from .reports import ActionDistribution, DecisionReport, argmax_first
from .simultaneous import _check_k

JOINT_CAP = 100_000
JOINT_SEP = "|"


@dataclass(frozen=True, eq=False)
class MultiAgentGame:
    """Agent 0 is supported; agents 1..n-1 are adversaries.

    ``utility[a0, a1, ..., a_{n-1}]`` is agent 0's expected utility of the
    action profile.
    """

    actions: tuple[tuple[str, ...], ...]
    utility: np.ndarray

    def __post_init__(self):
        actions = tuple(tuple(str(x) for x in acts) for acts in self.actions)
        if len(actions) < 2:
            raise ValidationError("need the supported agent and at least one opponent")
        for acts in actions:
            if not acts or len(set(acts)) != len(acts):
                raise ValidationError("each agent needs a non-empty, duplicate-free action list")
        u = np.array(self.utility, dtype=float)
        if u.shape != tuple(len(a) for a in actions):
            raise ShapeConflictError(f"utility shape {u.shape} does not match action counts")
        if not np.all(np.isfinite(u)):
            raise ValidationError("utility entries must be finite")
        u.setflags(write=False)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "utility", u)

    @property
    def n_agents(self) -> int:
        return len(self.actions)

    def others(self, i: int) -> list[int]:
        return [k for k in range(self.n_agents) if k != i]

    def context_size(self, i: int) -> int:
        """Size of the joint action space of everyone but agent ``i``."""
        return int(np.prod([len(self.actions[k]) for k in self.others(i)]))

    def joint_labels(self) -> tuple[str, ...]:
        """Labels of opponent profiles (agents 1..n-1) in C order."""
        grids = np.indices([len(a) for a in self.actions[1:]]).reshape(self.n_agents - 1, -1).T
        return tuple(JOINT_SEP.join(self.actions[k + 1][i] for k, i in enumerate(row)) for row in grids)


def _opponent_marginal(game: MultiAgentGame, i: int, j: JudgmentModel, K: int, seed: int,
                       threads, tie_break) -> np.ndarray:
    """Level-1 choices of opponent ``i`` against his belief over the others' joint action."""
    n_ctx, n_own = game.context_size(i), len(game.actions[i])
    n_s = j.type_space.util.shape[-1] if j.type_space is not None else j.random_util.shape[-1]
    shape = (n_ctx, n_own, n_s)
    j.check_attacker(shape, shape)
    # stream i - 1 makes the single-opponent case coincide with the two-agent estimator
    return attacker_choices(j, shape, j.random_belief, K, seed, (i - 1, 1), threads, tie_break)


def multi_agent_ara(game: MultiAgentGame, judgments: Sequence[JudgmentModel], K: int, seed: int,
                    independence: bool = True, threads: int | None = None, tie_break: str = "lowest",
                    cap: int = JOINT_CAP) -> DecisionReport:
    """Agent 0's best response to the simulated joint behavior of its opponents.

    Opponent ``i``'s judgments are over tables of shape (N_i, m_i, S), where
    N_i enumerates the joint actions of all other agents (agent 0 included)
    in C order.  With ``independence`` the joint distribution is the product
    of per-opponent marginals; otherwise the opponent profiles drawn
    together at each sample index are counted directly.
    """
    K = _check_k(K)
    seed = check_seed(seed)
    n_opp = game.n_agents - 1
    if len(judgments) != n_opp:
        raise ShapeConflictError(f"need one judgment model per opponent ({n_opp}), got {len(judgments)}")
    if n_opp >= STREAM_NASH:
        raise ValidationError(f"at most {STREAM_NASH - 1} opponents supported")
    sizes = [len(a) for a in game.actions[1:]]
    n_joint = int(np.prod(sizes))
    if not independence and n_joint > cap:
        raise InstanceTooLargeError(
            f"joint opponent action space has {n_joint} profiles, above the cap {cap}; "
            "use independence=true")
    choices = [_opponent_marginal(game, i, judgments[i - 1], K, seed, threads, tie_break)
               for i in range(1, game.n_agents)]
    marginals = [ActionDistribution.from_counts(game.actions[i], frequencies(c, sizes[i - 1]), K)
                 for i, c in zip(range(1, game.n_agents), choices)]

    if independence:
        joint = None
        if n_joint <= cap:
            joint = marginals[0].probs
            for m in marginals[1:]:
                joint = np.outer(joint, m.probs).ravel()
        u = game.utility
        if joint is not None:
            eu = _weighted(u.reshape(u.shape[0], -1), joint)
        else:
            eu = u
            for m in marginals:
                eu = np.tensordot(eu, m.probs, axes=([1], [0]))
    else:
        flat = np.ravel_multi_index(tuple(choices), sizes)
        joint = frequencies(flat, n_joint) / K
        eu = _weighted(game.utility.reshape(game.utility.shape[0], -1), joint)

    dist = None
    if joint is not None:
        dist = ActionDistribution(game.joint_labels(), joint, K)
    best = argmax_first(eu)
    return DecisionReport(
        concept="ara-multi-agent",
        chosen=game.actions[0][best],
        expected_utility=float(eu[best]),
        expected_utilities=dict(zip(game.actions[0], map(float, eu))),
        distribution=dist,
        seed=seed,
        K=K,
        diagnostics={
            "independence": independence,
            "joint_size": n_joint,
            "marginals": {f"agent{i}": m.as_dict() for i, m in enumerate(marginals, start=1)},
            "tie_break": tie_break,
        },
    )


def _weighted(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    acc = np.zeros(u.shape[0])
    for k in range(u.shape[1]):
        acc = acc + u[:, k] * w[k]
    return acc
