"""Sequential templates: defend-attack, attack-defend, private information,
defend-attack-defend."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..core_model.games import (
    DefendAttackDefendGame,
    DiscreteGame,
    PrivateInfoGame,
    expected_table,
)
from ..errors import ShapeConflictError
from ..judgments import JudgmentModel, RandomProbabilitySpec, RandomUtilitySpec
from ..rng import STREAM_ATTACKER, check_seed, run_blocks
from .engine import frequencies, pick, sequential_choices
from .reports import (
    ActionDistribution,
    ConditionalActionDistribution,
    DecisionReport,
    argmax_first,
)
from .reports import weighted_rows
from .simultaneous import _check_k, estimate_attack_distribution


def _conditional(choices: np.ndarray, d_labels, a_labels, K: int) -> ConditionalActionDistribution:
    rows = {}
    for i, d in enumerate(d_labels):
        rows[d] = ActionDistribution.from_counts(a_labels, frequencies(choices[:, i], len(a_labels)), K)
    return ConditionalActionDistribution(rows)


def _conditional_eu(psi_d: np.ndarray, p_hat: np.ndarray) -> np.ndarray:
    """sum_a psi_D(d, a) p(a | d), accumulated in ascending a."""
    acc = np.zeros(psi_d.shape[0])
    for a in range(psi_d.shape[1]):
        acc = acc + psi_d[:, a] * p_hat[:, a]
    return acc


def estimate_response_distribution(game: DiscreteGame, j: JudgmentModel, K: int, seed: int,
                                   threads: int | None = None,
                                   tie_break: str = "lowest") -> ConditionalActionDistribution:
    """p_hat(a | d): frequency of argmax_a Psi_A^k(d, a) over K draws of (U_A, P_A)."""
    K = _check_k(K)
    seed = check_seed(seed)
    j.check_attacker(game.shape, game.shape)
    choices = sequential_choices(j, game.shape, K, seed, (STREAM_ATTACKER, 1), threads, tie_break)
    return _conditional(choices, game.defender_actions, game.attacker_actions, K)


def ara_sequential(game: DiscreteGame, j: JudgmentModel, K: int, seed: int,
                   threads: int | None = None, tie_break: str = "lowest") -> DecisionReport:
    """Defend-attack: d* = argmax_d sum_a psi_D(d, a) p_hat(a | d)."""
    cond = estimate_response_distribution(game, j, K, seed, threads, tie_break)
    eu = _conditional_eu(game.psi("D"), cond.matrix())
    d = argmax_first(eu)
    return DecisionReport(
        concept="ara-sequential",
        chosen=game.defender_actions[d],
        expected_utility=float(eu[d]),
        expected_utilities=dict(zip(game.defender_actions, map(float, eu))),
        distribution=cond,
        seed=seed,
        K=K,
        diagnostics={"tie_break": tie_break},
    )


def _mirror_or_truth(j: JudgmentModel, util_d, prob_d) -> JudgmentModel:
    """Mirror columns of ``j``, defaulting to the defender's own tables."""
    if j.has_mirror:
        return j
    return replace(j, mirror_util=RandomUtilitySpec.fixed(util_d),
                   mirror_prob=RandomProbabilitySpec.fixed(prob_d))


def ara_attack_defend(game: DiscreteGame, j: JudgmentModel, K: int, seed: int,
                      threads: int | None = None, tie_break: str = "lowest") -> DecisionReport:
    """Attack first, defense after observing it.

    The contingency plan is d*(a) = argmax_d psi_D(d, a).  The attack
    distribution comes from attackers who, in each draw, anticipate the
    defender's response under the sampled mirror judgments (the defender's
    true tables when no mirror columns are given).
    """
    K = _check_k(K)
    seed = check_seed(seed)
    shape = game.shape
    j.check_attacker(shape, shape)
    jm = _mirror_or_truth(j, game.util_d, game.prob_d)
    if jm.mirror_util.shape != shape or jm.mirror_prob.shape != shape:
        raise ShapeConflictError("judgment/game shape conflict: mirror tables")
    psi_d = game.psi("D")
    plan = np.argmax(psi_d, axis=0)

    def draw(rng, n):
        util_a, prob_a = jm.sample_attacker_tables(rng, n)
        util_m, prob_m = jm.sample_mirror_tables(rng, n)
        psi_a = expected_table(util_a, prob_a)
        psi_m = expected_table(util_m, prob_m)
        response = pick(np.swapaxes(psi_m, 1, 2), rng, tie_break)  # (n, |A|)
        anticipated = np.take_along_axis(psi_a, response[:, None, :], axis=1)[:, 0, :]
        return pick(anticipated, rng, tie_break)

    choices = run_blocks(draw, K, seed, (STREAM_ATTACKER, 1), threads)
    pi = ActionDistribution.from_counts(game.attacker_actions,
                                        frequencies(choices, len(game.attacker_actions)), K)
    value = 0.0
    for a in range(shape[1]):
        value = value + psi_d[plan[a], a] * pi.probs[a]
    return DecisionReport(
        concept="ara-attack-defend",
        chosen={game.attacker_actions[a]: game.defender_actions[plan[a]] for a in range(shape[1])},
        expected_utility=float(value),
        expected_utilities={game.attacker_actions[a]: dict(zip(game.defender_actions, map(float, psi_d[:, a])))
                            for a in range(shape[1])},
        distribution=pi,
        seed=seed,
        K=K,
        diagnostics={"tie_break": tie_break, "mirror": "judgments" if j.has_mirror else "defender tables"},
    )


def ara_private_info(game: PrivateInfoGame, j: JudgmentModel, K: int, seed: int,
                     threads: int | None = None, tie_break: str = "lowest",
                     attacker_observes_defense: bool = False) -> DecisionReport:
    """Defender with a private signal ``v`` unseen by the attacker.

    Attacker draws never condition on ``v``; their judgments and beliefs are
    those of ``j`` on the signal-marginal game.  The defender then solves
    d*(v) = argmax_d sum_a psi_D(d, a | v) pi_hat(a) per signal.  With
    ``attacker_observes_defense`` the attacker reacts to d and p_hat(a | d)
    replaces pi_hat(a).
    """
    base = game.base
    if attacker_observes_defense:
        dist = estimate_response_distribution(base, j, K, seed, threads, tie_break)
        weights = dist.matrix()
    else:
        dist = estimate_attack_distribution(base, j, K, seed, threads, tie_break)
        weights = None
    policy, tables, value = {}, {}, 0.0
    for k, v in enumerate(game.signals):
        psi_v = expected_table(game.util_d_v[..., k], game.prob_d_v[..., k])
        eu = _conditional_eu(psi_v, weights) if weights is not None else weighted_rows(psi_v, dist.probs)
        d = argmax_first(eu)
        policy[v] = base.defender_actions[d]
        tables[v] = dict(zip(base.defender_actions, map(float, eu)))
        value = value + game.v_prior[k] * eu[d]
    return DecisionReport(
        concept="ara-private-info",
        chosen=policy,
        expected_utility=float(value),
        expected_utilities=tables,
        distribution=dist,
        seed=seed,
        K=K,
        diagnostics={"tie_break": tie_break, "attacker_observes_defense": attacker_observes_defense,
                     "v_prior": dict(zip(game.signals, map(float, game.v_prior)))},
    )


def ara_defend_attack_defend(game: DefendAttackDefendGame, j: JudgmentModel, K: int, seed: int,
                             threads: int | None = None, tie_break: str = "lowest") -> DecisionReport:
    """Defense d1, observed attack a, outcome s, mitigation d2.

    The mitigation policy is d2*(d1, a, s) = argmax_d2 u_D(d1, a, s, d2).
    In each draw the attacker assumes the defender mitigates optimally for
    the sampled mirror utility U_D (the defender's true utility when no
    mirror columns are given) and best-responds to every d1, giving
    p_hat(a | d1).  The first-stage defense maximizes
    sum_a sum_s u_D(d1, a, s, d2*) p_D(s | d1, a) p_hat(a | d1).
    """
    K = _check_k(K)
    seed = check_seed(seed)
    n1, na, ns, n2 = game.shape
    j.check_attacker((n1, na, ns, n2), (n1, na, ns))
    jm = j if j.mirror_util is not None else replace(j, mirror_util=RandomUtilitySpec.fixed(game.util_d))
    if jm.mirror_util.shape != (n1, na, ns, n2):
        raise ShapeConflictError("judgment/game shape conflict: mirror utility must cover d2")

    def draw(rng, n):
        util_a, prob_a = jm.sample_attacker_tables(rng, n)
        util_m = jm.mirror_util.sample(rng, n)
        d2 = pick(util_m, rng, tie_break)
        util_at = np.take_along_axis(util_a, d2[..., None], axis=-1)[..., 0]
        return pick(expected_table(util_at, prob_a), rng, tie_break)

    choices = run_blocks(draw, K, seed, (STREAM_ATTACKER, 1), threads)
    cond = _conditional(choices, game.d1_actions, game.attacker_actions, K)
    mitigation = game.mitigation_policy()
    u_star = np.take_along_axis(game.util_d, mitigation[..., None], axis=-1)[..., 0]
    psi_d = expected_table(u_star, game.prob_d)
    eu = _conditional_eu(psi_d, cond.matrix())
    d1 = argmax_first(eu)
    policy = {
        game.d1_actions[i]: {
            game.attacker_actions[a]: {game.outcomes[s]: game.d2_actions[mitigation[i, a, s]] for s in range(ns)}
            for a in range(na)
        }
        for i in range(n1)
    }
    return DecisionReport(
        concept="ara-defend-attack-defend",
        chosen={"d1": game.d1_actions[d1], "d2": policy},
        expected_utility=float(eu[d1]),
        expected_utilities=dict(zip(game.d1_actions, map(float, eu))),
        distribution=cond,
        seed=seed,
        K=K,
        diagnostics={"tie_break": tie_break, "mirror": "judgments" if j.mirror_util is not None else "defender tables"},
    )
