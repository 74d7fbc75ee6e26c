"""Solution concepts the defender may attribute to the attacker, and mixtures of them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..core_model.games import DiscreteGame, expected_table
from ..errors import ShapeConflictError, SolverError, ValidationError
from ..judgments import JudgmentModel
from ..rng import STREAM_NASH, check_seed, run_blocks
from .reports import ActionDistribution, DecisionReport
from .simultaneous import LevelKConfig, _check_k, decide, level_k_solve
from .sequential import _mirror_or_truth

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class NonStrategic:
    """Level-0 attacker: attacks follow a fixed prior over his actions."""

    prior: np.ndarray

    def __post_init__(self):
        p = self.prior.probs if isinstance(self.prior, ActionDistribution) else self.prior
        p = np.array(p, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError("non-strategic prior must be a probability vector")
        object.__setattr__(self, "prior", p)

    name = "non-strategic"


@dataclass(frozen=True, eq=False)
class LevelK:
    config: LevelKConfig

    @property
    def name(self) -> str:
        return f"level-{self.config.k}"


@dataclass(frozen=True, eq=False)
class NashSeeking:
    """Attacker plays a pure equilibrium of the game as he perceives it.

    Each draw samples his tables (attacker columns of ``judgments``) and his
    view of the defender (mirror columns, or her true tables if absent).
    """

    judgments: JudgmentModel
    K: int = 10_000

    name = "nash-seeking"


@dataclass(frozen=True, eq=False)
class FictitiousPlay:
    """Attacker repeats past play: Dirichlet prior ``alphas`` plus observed ``counts``."""

    counts: np.ndarray
    alphas: np.ndarray

    name = "fictitious-play"


@dataclass(frozen=True, eq=False)
class Mixture:
    """Concept uncertainty: the attacker uses component ``i`` with probability ``w_i``."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), c) for w, c in self.components)
        if not comps:
            raise ValidationError("mixture needs at least one component")
        w = np.array([w for w, _ in comps])
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError("mixture weights must be nonnegative and sum to 1")
        object.__setattr__(self, "components", comps)

    name = "mixture"


SolutionConcept = Union[NonStrategic, LevelK, NashSeeking, FictitiousPlay, Mixture]


def fictitious_play_predict(counts: Sequence[float], alphas: Sequence[float],
                            labels: Sequence[str] | None = None) -> ActionDistribution:
    """Posterior predictive pi(a_i) = (alpha_i + x_i) / sum_j (alpha_j + x_j).

    The returned sample count is sum_j (alpha_j + x_j) + 1, so the reported
    standard error equals the posterior standard deviation of each
    probability under the Dirichlet(alpha + x) posterior.
    """
    x = np.asarray(counts, dtype=float)
    a = np.asarray(alphas, dtype=float)
    if x.ndim != 1 or a.shape != x.shape:
        raise ShapeConflictError("history counts and prior alphas must have the same length")
    if np.any(x < 0) or np.any(x != np.floor(x)):
        raise ValidationError("history counts must be nonnegative integers")
    if np.any(~(a > 0)):
        raise ValidationError("prior alphas must be positive")
    post = a + x
    total = post.sum()
    labels = tuple(labels) if labels is not None else tuple(f"a{i}" for i in range(len(x)))
    return ActionDistribution(labels, post / total, total + 1.0)


def nash_seeking_distribution(game: DiscreteGame, concept: NashSeeking, seed: int, threads=None
                              ) -> tuple[ActionDistribution, int]:
    """Frequency of the attacker's action in the first pure equilibrium of each sampled game.

    Equilibria are ordered row-major over (d, a).  Draws without a pure
    equilibrium are skipped; their number is returned alongside.
    """
    K = _check_k(concept.K)
    shape = game.shape
    j = concept.judgments
    j.check_attacker(shape, shape)
    jm = _mirror_or_truth(j, game.util_d, game.prob_d)
    if jm.mirror_util.shape != shape or jm.mirror_prob.shape != shape:
        raise ShapeConflictError("judgment/game shape conflict: mirror tables")
    n_a = shape[1]

    def draw(rng, n):
        util_a, prob_a = jm.sample_attacker_tables(rng, n)
        util_d, prob_d = jm.sample_mirror_tables(rng, n)
        psi_a = expected_table(util_a, prob_a)
        psi_d = expected_table(util_d, prob_d)
        ne = (psi_d >= psi_d.max(axis=1, keepdims=True)) & (psi_a >= psi_a.max(axis=2, keepdims=True))
        flat = ne.reshape(n, -1)
        found = flat.any(axis=1)
        return np.where(found, np.argmax(flat, axis=1) % n_a, -1)

    choices = run_blocks(draw, K, seed, (STREAM_NASH, 1), threads)
    kept = choices[choices >= 0]
    skipped = K - kept.size
    if kept.size == 0:
        raise SolverError(f"nash-seeking: no sampled game had a pure equilibrium ({K} draws skipped)")
    counts = np.bincount(kept, minlength=n_a).astype(float)
    return ActionDistribution.from_counts(game.attacker_actions, counts, kept.size), skipped


def concept_distribution(game: DiscreteGame, concept, seed: int, threads=None,
                         tie_break: str = "lowest") -> tuple[ActionDistribution, dict]:
    """Attack distribution implied by ``concept``, plus diagnostics."""
    labels = game.attacker_actions
    if isinstance(concept, NonStrategic):
        if concept.prior.shape != (len(labels),):
            raise ShapeConflictError("non-strategic prior does not match the attacker action set")
        return ActionDistribution(labels, concept.prior, 1), {}
    if isinstance(concept, FictitiousPlay):
        if len(concept.counts) != len(labels):
            raise ShapeConflictError("fictitious-play history does not match the attacker action set")
        return fictitious_play_predict(concept.counts, concept.alphas, labels), {}
    if isinstance(concept, LevelK):
        report = level_k_solve(game, concept.config, seed, threads, tie_break)
        return report.distribution, dict(report.diagnostics)
    if isinstance(concept, NashSeeking):
        pi, skipped = nash_seeking_distribution(game, concept, seed, threads)
        return pi, {"skipped_samples": skipped, "skipped_rate": skipped / concept.K}
    if isinstance(concept, Mixture):
        pi, diag = _mix(game, concept, seed, threads, tie_break)
        return pi, diag
    raise ValidationError(f"unknown solution concept {concept!r}")


def _concept_k(concept) -> int | None:
    if isinstance(concept, LevelK):
        return concept.config.samples_at(1) if concept.config.k else None
    if isinstance(concept, NashSeeking):
        return concept.K
    return None


def _mix(game: DiscreteGame, mixture: Mixture, seed: int, threads, tie_break):
    mixed = np.zeros(len(game.attacker_actions))
    components = []
    skipped = 0
    counts = []
    for i, (w, c) in enumerate(mixture.components):
        try:
            pi, diag = concept_distribution(game, c, seed, threads, tie_break)
        except ValidationError as exc:
            raise ValidationError(f"mixture component {i} ({c.name}) failed: {exc}") from exc
        except Exception as exc:
            raise SolverError(f"mixture component {i} ({c.name}) failed: {exc}") from exc
        mixed = mixed + w * pi.probs
        skipped += int(diag.get("skipped_samples", 0))
        counts.append(pi.sample_count)
        components.append({"concept": c.name, "weight": w, "pi_hat": pi.as_dict(), "diagnostics": diag})
    n = min(counts)
    pi = ActionDistribution(game.attacker_actions, mixed, n)
    return pi, {"components": components, "skipped_samples": skipped}


def solve_concept(game: DiscreteGame, concept, seed: int, threads=None,
                  tie_break: str = "lowest") -> DecisionReport:
    """Defender's best response to the attack distribution implied by ``concept``."""
    seed = check_seed(seed)
    if isinstance(concept, LevelK):
        return level_k_solve(game, concept.config, seed, threads, tie_break)
    pi, diag = concept_distribution(game, concept, seed, threads, tie_break)
    return decide(game, pi, concept.name, seed, _concept_k(concept), diag)


def mixture_solve(game: DiscreteGame, mixture: Mixture, seed: int, threads=None,
                  tie_break: str = "lowest") -> DecisionReport:
    """Best response to pi_mix(a) = sum_i w_i pi_i(a).

    Every component is evaluated with the same seed, so a component's
    distribution is exactly what that concept yields on its own.
    """
    return solve_concept(game, mixture, seed, threads, tie_break)


__all__ = [
    "NonStrategic", "LevelK", "NashSeeking", "FictitiousPlay", "Mixture", "SolutionConcept",
    "fictitious_play_predict", "nash_seeking_distribution", "concept_distribution",
    "solve_concept", "mixture_solve",
]
