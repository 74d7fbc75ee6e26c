"""Dominance tools: non-dominated ARA defenses, support-separated attacks, iterative
elimination and stochastic dominance checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .ara_solvers.reports import ActionDistribution
from .ara_solvers.simultaneous import ara_simultaneous
from .core_model.games import Agent, DiscreteGame, expected_table
from .errors import PreconditionError, ValidationError
from .judgments import JudgmentModel
from .rng import STREAM_DOMINANCE, check_seed, run_blocks

MIN_SUPPORT_SAMPLES = 1000
ORDERS = ("defender-first", "attacker-first")
RULES = ("defender-dominated", "attacker-support-separated", "FOSD", "SOSD")


class Dominance(NamedTuple):
    dominated: bool
    witness: str | None


def _dominators(psi: np.ndarray, i: int, strict: bool) -> list[int]:
    """Rows of ``psi`` dominating row ``i`` (rows are own actions, columns opponent actions)."""
    row = psi[i]
    out = []
    for k in range(psi.shape[0]):
        if k == i:
            continue
        other = psi[k]
        if strict:
            if np.all(other > row):
                out.append(k)
        elif np.all(other >= row) and np.any(other > row):
            out.append(k)
    return out


def is_dominated(game: DiscreteGame, agent: Agent | str, action, strict: bool = False) -> Dominance:
    """Whether another action of ``agent`` does at least as well against every
    opponent action and strictly better against one (or strictly better
    against all, with ``strict``).  The witness is the lowest-index dominator.
    """
    agent = Agent(agent)
    psi = game.psi(agent)
    if agent is Agent.A:
        psi = psi.T
        i, labels = game.a_index(action), game.attacker_actions
    else:
        i, labels = game.d_index(action), game.defender_actions
    dom = _dominators(psi, i, strict)
    return Dominance(bool(dom), labels[dom[0]] if dom else None)


@dataclass(frozen=True, eq=False)
class NonDominationReport:
    passed: bool
    chosen: str
    witness: str | None
    pi_hat: ActionDistribution
    strictly_dominated: bool

    def to_dict(self) -> dict:
        return {"passed": self.passed, "chosen": self.chosen, "witness": self.witness,
                "strictly_dominated": self.strictly_dominated, "pi_hat": self.pi_hat.as_dict()}


def check_non_domination(game: DiscreteGame, j: JudgmentModel, K: int, seed: int,
                         threads: int | None = None) -> NonDominationReport:
    """Solve the simultaneous ARA problem and verify its defense is not dominated.

    The guarantee only holds when every attack has positive estimated
    probability; otherwise :class:`PreconditionError` is raised and no
    verdict is given.
    """
    report = ara_simultaneous(game, j, K, seed, threads)
    pi = report.distribution
    if np.any(pi.probs <= 0):
        zero = [a for a, p in zip(pi.labels, pi.probs) if p <= 0]
        raise PreconditionError(f"non-domination precondition unmet: zero estimated probability for {zero}")
    weak = is_dominated(game, Agent.D, report.chosen)
    strict = is_dominated(game, Agent.D, report.chosen, strict=True)
    return NonDominationReport(not weak.dominated, report.chosen, weak.witness, pi, strict.dominated)


@dataclass(frozen=True, eq=False)
class UtilitySampleMatrix:
    """Samples of one attack's random expected utility: ``samples[d, k]``."""

    action: str
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] < 1:
            raise ValidationError("utility samples must have shape (defenses, samples)")
        if not np.all(np.isfinite(s)):
            raise ValidationError("utility samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def sample_count(self) -> int:
        return self.samples.shape[1]


class Separation(NamedTuple):
    action: int
    witness: int


def exact_utility_supports(j: JudgmentModel, shape: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Closed support bounds of the attacker's random expected utility psi_A(d, a).

    Uses the closed-form judgment specs: cell supports combined with a fixed
    outcome table, or the extreme outcomes of a Dirichlet row.  For a type
    space, bounds run over the types with positive prior.
    """
    j.check_attacker(shape, shape)
    if j.type_space is not None:
        ts = j.type_space
        psi = ts.psi()[ts.prior > 0]
        return psi.min(axis=0), psi.max(axis=0)
    util, prob = j.random_util, j.random_prob
    if util.form == "affine":
        s_lo, s_hi = util.scale.support
        t_lo, t_hi = util.shift.support
        if prob.table is not None:
            x_lo = x_hi = expected_table(util.base, prob.table)
        else:
            x_lo, x_hi = util.base.min(axis=-1), util.base.max(axis=-1)
        corners = np.stack([s_lo * x_lo, s_lo * x_hi, s_hi * x_lo, s_hi * x_hi])
        return corners.min(axis=0) + t_lo, corners.max(axis=0) + t_hi
    lo, hi = util.support()
    if prob.table is not None:
        return expected_table(lo, prob.table), expected_table(hi, prob.table)
    return lo.min(axis=-1), hi.max(axis=-1)


def empirical_utility_supports(samples: Sequence[UtilitySampleMatrix] | np.ndarray,
                               min_samples: int = MIN_SUPPORT_SAMPLES) -> tuple[np.ndarray, np.ndarray]:
    """[min, max] of the samples per (d, a).  ``samples`` is (n, |D|, |A|) or one matrix per attack."""
    if isinstance(samples, np.ndarray):
        arr = samples
    else:
        counts = {m.sample_count for m in samples}
        if len(counts) != 1:
            raise ValidationError("utility sample matrices need equal sample counts")
        arr = np.stack([m.samples for m in samples], axis=-1).transpose(1, 0, 2)
    if arr.shape[0] < min_samples:
        raise ValidationError(f"empirical supports need at least {min_samples} samples, got {arr.shape[0]}")
    return arr.min(axis=0), arr.max(axis=0)


def eliminate_support_separated(samples=None, *, supports=None, margin: float = 0.0,
                                min_samples: int = MIN_SUPPORT_SAMPLES) -> list[Separation]:
    """Attacks that can never be a best response.

    Attack ``a`` goes when another attack ``a'`` satisfies
    max supp psi_A(d, a) + margin < min supp psi_A(d, a') for every defense d.
    Pass either ``samples`` (empirical supports) or ``supports=(lo, hi)``
    arrays of shape (|D|, |A|).  The witness is the lowest-index ``a'``.
    """
    if (samples is None) == (supports is None):
        raise ValidationError("give either samples or supports")
    lo, hi = supports if supports is not None else empirical_utility_supports(samples, min_samples)
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    n_a = lo.shape[1]
    if n_a < 2:
        return []
    out = []
    for a in range(n_a):
        for b in range(n_a):
            if b != a and np.all(hi[:, a] + margin < lo[:, b]):
                out.append(Separation(a, b))
                break
    return out


@dataclass(frozen=True)
class EliminationStep:
    round: int
    agent: str
    action: str
    rule: str
    witness: dict


@dataclass(frozen=True)
class EliminationLog:
    steps: tuple[EliminationStep, ...] = ()

    def __post_init__(self):
        rounds = [s.round for s in self.steps]
        if any(b <= a for a, b in zip(rounds, rounds[1:])):
            raise ValidationError("elimination rounds must strictly increase")
        seen = [(s.agent, s.action) for s in self.steps]
        if len(set(seen)) != len(seen):
            raise ValidationError("an action can be eliminated only once")

    def __len__(self) -> int:
        return len(self.steps)

    def removed(self, agent: str) -> list[str]:
        return [s.action for s in self.steps if s.agent == agent]

    def to_list(self) -> list[dict]:
        return [{"round": s.round, "agent": s.agent, "action": s.action, "rule": s.rule, "witness": s.witness}
                for s in self.steps]


@dataclass(frozen=True, eq=False)
class EliminationResult:
    game: DiscreteGame
    judgments: JudgmentModel
    log: EliminationLog
    kept_defenses: tuple[int, ...] = field(default=())
    kept_attacks: tuple[int, ...] = field(default=())

    def __iter__(self):
        return iter((self.game, self.judgments, self.log))


def _closed_form(j: JudgmentModel) -> bool:
    return j.type_space is not None or (j.random_util is not None and j.random_prob is not None)


def _sampled_psi(j: JudgmentModel, shape, K: int, seed: int, threads) -> np.ndarray:
    def draw(rng, n):
        util, prob = j.sample_attacker_tables(rng, n)
        return expected_table(util, prob)

    return run_blocks(draw, K, seed, (STREAM_DOMINANCE, 1), threads)


def iterative_eliminate(game: DiscreteGame, j: JudgmentModel, K: int = MIN_SUPPORT_SAMPLES, seed: int = 0,
                        order: str = "defender-first", strict: bool = False, exact: bool = True,
                        threads: int | None = None) -> EliminationResult:
    """Alternately remove dominated defenses and support-separated attacks.

    One action is removed per round.  Each phase runs until it finds nothing,
    then the other phase runs; the loop stops when neither removes anything.
    Attacker supports are exact when ``exact`` (closed-form specs), otherwise
    taken from ``K`` sampled utility tables.  The restricted judgments drop
    the removed rows and columns from every spec.
    """
    if order not in ORDERS:
        raise ValidationError(f"order must be one of {ORDERS}")
    seed = check_seed(seed)
    j.check_attacker(game.shape, game.shape)
    d_keep = list(range(len(game.defender_actions)))
    a_keep = list(range(len(game.attacker_actions)))
    steps: list[EliminationStep] = []
    full_psi_d = game.psi(Agent.D)
    if exact and _closed_form(j):
        full_lo, full_hi = exact_utility_supports(j, game.shape)
    else:
        sampled = _sampled_psi(j, game.shape, max(int(K), MIN_SUPPORT_SAMPLES), seed, threads)
        full_lo, full_hi = sampled.min(axis=0), sampled.max(axis=0)

    def defender_phase() -> bool:
        psi = full_psi_d[np.ix_(d_keep, a_keep)]
        for i in range(len(d_keep)):
            dom = _dominators(psi, i, strict)
            if dom:
                w = game.defender_actions[d_keep[dom[0]]]
                steps.append(EliminationStep(len(steps) + 1, "D", game.defender_actions[d_keep[i]],
                                             "defender-dominated", {"dominated_by": w, "strict": strict}))
                del d_keep[i]
                return True
        return False

    def attacker_phase() -> bool:
        ix = np.ix_(d_keep, a_keep)
        lo, hi = full_lo[ix], full_hi[ix]
        found = eliminate_support_separated(supports=(lo, hi))
        if not found:
            return False
        a, b = found[0]
        steps.append(EliminationStep(
            len(steps) + 1, "A", game.attacker_actions[a_keep[a]], "attacker-support-separated",
            {"separated_by": game.attacker_actions[a_keep[b]],
             "max_support": [float(x) for x in hi[:, a]], "min_support_witness": [float(x) for x in lo[:, b]]}))
        del a_keep[a]
        return True

    phases = (defender_phase, attacker_phase) if order == "defender-first" else (attacker_phase, defender_phase)
    while True:
        changed = False
        for phase in phases:
            while phase():
                changed = True
        if not changed:
            break
    return EliminationResult(game.restrict(d_keep, a_keep), j.restrict(d_keep, a_keep),
                             EliminationLog(tuple(steps)), tuple(d_keep), tuple(a_keep))


@dataclass(frozen=True)
class StochasticDominanceResult:
    """Whether the second sample set dominates the first, per defense and overall."""

    order: str
    per_defense: tuple[bool, ...]

    @property
    def dominates(self) -> bool:
        return all(self.per_defense)

    def to_dict(self) -> dict:
        return {"order": self.order, "per_defense": list(self.per_defense), "dominates": self.dominates}


def _integrated_cdf(sorted_x: np.ndarray, points: np.ndarray) -> np.ndarray:
    """int_{-inf}^t F_n(u) du = mean(max(t - X, 0)) at each ``t``."""
    n = sorted_x.size
    k = np.searchsorted(sorted_x, points, side="right")
    csum = np.concatenate([[0.0], np.cumsum(sorted_x)])
    return (k * points - csum[k]) / n


def _dominates_1d(x: np.ndarray, y: np.ndarray, order: str) -> bool:
    """Does sample ``y`` dominate sample ``x``?"""
    if order == "state":
        return bool(np.all(y >= x) and np.any(y > x))
    xs, ys = np.sort(x), np.sort(y)
    pts = np.union1d(xs, ys)
    if order == "1":
        fx = np.searchsorted(xs, pts, side="right") / xs.size
        fy = np.searchsorted(ys, pts, side="right") / ys.size
        return bool(np.all(fy <= fx) and np.any(fy < fx))
    gx, gy = _integrated_cdf(xs, pts), _integrated_cdf(ys, pts)
    tol = 1e-12 * max(1.0, float(np.abs(pts).max()))
    return bool(np.all(gy <= gx + tol) and np.any(gy < gx - tol))


def stochastic_dominance(samples_a, samples_b, order: str = "1") -> StochasticDominanceResult:
    """Does attack ``b`` dominate attack ``a``?

    Inputs are utility samples of shape (n,) or (n, |D|), one column per
    defense.  ``order`` is ``state`` (paired samples, per draw), ``1`` (first
    order: empirical CDF of b never above that of a) or ``2`` (second order:
    integrated empirical CDFs).  Strict inequality is required somewhere.
    """
    order = str(order)
    if order not in ("state", "1", "2"):
        raise ValidationError("order must be 'state', '1' or '2'")
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError("stochastic dominance needs matched sample counts")
    if a.ndim == 1:
        a, b = a[:, None], b[:, None]
    verdicts = tuple(_dominates_1d(a[:, d], b[:, d], order) for d in range(a.shape[1]))
    return StochasticDominanceResult(order, verdicts)
