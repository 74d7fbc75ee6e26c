"""Finite game representations and exact expected-utility evaluation.

Tables are indexed ``[d, a, s]`` (defender action, attacker action,
outcome).  Labels are strings; the label to index map is fixed when the game
is built.  All arrays are stored read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from ..errors import (
    JudgmentsAbsentError,
    UnknownActionError,
    ValidationError,
)

NORMALIZATION_TOL = 1e-9
ROUNDING_SLACK = 8 * np.finfo(float).eps


class Structure(str, Enum):
    SIMULTANEOUS = "simultaneous"
    SEQUENTIAL_DA = "sequential_da"
    SEQUENTIAL_AD = "sequential_ad"
    SEQUENTIAL_DA_PRIVATE_INFO = "sequential_da_private_info"
    DEFEND_ATTACK_DEFEND = "defend_attack_defend"


class Agent(str, Enum):
    D = "D"
    A = "A"


def _labels(name: str, labels: Sequence) -> tuple[str, ...]:
    labels = tuple(str(x) for x in labels)
    if not labels:
        raise ValidationError(f"{name}: label set is empty")
    if len(set(labels)) != len(labels):
        raise ValidationError(f"{name}: duplicate labels {labels}")
    return labels


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def normalize_rows(p, name: str = "probabilities", tol: float = NORMALIZATION_TOL) -> np.ndarray:
    """Renormalize the last axis of ``p``.

    Rows within ``tol`` of summing to one are rescaled; rows further off, or
    with entries below ``-tol``, are rejected.
    """
    p = np.array(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValidationError(f"{name}: non-finite probability")
    if np.any(p < -tol):
        raise ValidationError(f"{name}: negative probability {p.min()!r}")
    p = np.clip(p, 0.0, None)
    sums = p.sum(axis=-1)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        where = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValidationError(
            f"{name}: row {where} sums to {sums[where]!r}, outside 1 +/- {tol:g}"
        )
    # rows already normalized to rounding are kept as is, so renormalizing is idempotent
    sums = np.where(np.abs(sums - 1.0) <= ROUNDING_SLACK, 1.0, sums)
    return p / sums[..., None]


def _finite(arr, name: str) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: utilities must be finite")
    return arr


def expected_table(util: np.ndarray, prob: np.ndarray) -> np.ndarray:
    """Sum over the outcome axis of ``util * prob``.

    ``util`` has the outcome axis last; ``prob`` broadcasts against it.  The
    sum is accumulated in ascending outcome index so results agree bit for
    bit across platforms.
    """
    acc = np.zeros(np.broadcast_shapes(util.shape, prob.shape)[:-1])
    for s in range(util.shape[-1]):
        acc = acc + util[..., s] * prob[..., s]
    return acc


@dataclass(frozen=True, eq=False)
class DiscreteGame:
    """Two-agent game with finite actions and outcomes.

    ``prob_a`` and ``util_a`` are optional: ARA solvers only need a random
    model of the attacker, game-theoretic baselines need the tables.
    """

    defender_actions: tuple[str, ...]
    attacker_actions: tuple[str, ...]
    outcomes: tuple[str, ...]
    prob_d: np.ndarray
    util_d: np.ndarray
    prob_a: np.ndarray | None = None
    util_a: np.ndarray | None = None
    structure: Structure = Structure.SIMULTANEOUS
    _d_index: dict = field(init=False, repr=False, compare=False)
    _a_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("defender_actions", _labels("defender_actions", self.defender_actions))
        set_("attacker_actions", _labels("attacker_actions", self.attacker_actions))
        set_("outcomes", _labels("outcomes", self.outcomes))
        set_("structure", Structure(self.structure))
        shape = self.shape
        for name in ("prob_d", "util_d", "prob_a", "util_a"):
            table = getattr(self, name)
            if table is None:
                if name in ("prob_d", "util_d"):
                    raise JudgmentsAbsentError(f"{name} is required")
                continue
            table = np.asarray(table, dtype=float)
            if table.shape != shape:
                raise ValidationError(f"{name}: shape {table.shape} != {shape}")
            if name.startswith("prob"):
                table = normalize_rows(table, name)
            else:
                table = _finite(table, name)
            set_(name, _frozen(table))
        if (self.prob_a is None) != (self.util_a is None):
            raise ValidationError("prob_a and util_a must be given together")
        set_("_d_index", {x: i for i, x in enumerate(self.defender_actions)})
        set_("_a_index", {x: i for i, x in enumerate(self.attacker_actions)})

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.defender_actions), len(self.attacker_actions), len(self.outcomes))

    @property
    def has_attacker_tables(self) -> bool:
        return self.util_a is not None

    def d_index(self, d) -> int:
        return _lookup(self._d_index, d, len(self.defender_actions), "defender")

    def a_index(self, a) -> int:
        return _lookup(self._a_index, a, len(self.attacker_actions), "attacker")

    def tables(self, agent: Agent | str) -> tuple[np.ndarray, np.ndarray]:
        agent = Agent(agent)
        if agent is Agent.D:
            return self.util_d, self.prob_d
        if self.util_a is None:
            raise JudgmentsAbsentError("judgments absent: attacker utility/probability tables missing")
        return self.util_a, self.prob_a

    def psi(self, agent: Agent | str) -> np.ndarray:
        """Expected-utility matrix psi_i(d, a) of shape (|D|, |A|)."""
        util, prob = self.tables(agent)
        return expected_table(util, prob)

    def restrict(self, d_idx: Sequence[int], a_idx: Sequence[int]) -> "DiscreteGame":
        """Subgame on the given defender and attacker action indices."""
        d_idx, a_idx = list(d_idx), list(a_idx)
        ix = np.ix_(d_idx, a_idx)
        sub = lambda t: None if t is None else t[ix]  # noqa: E731
        return DiscreteGame(
            tuple(self.defender_actions[i] for i in d_idx),
            tuple(self.attacker_actions[i] for i in a_idx),
            self.outcomes,
            sub(self.prob_d),
            sub(self.util_d),
            sub(self.prob_a),
            sub(self.util_a),
            self.structure,
        )

    def with_structure(self, structure: Structure | str) -> "DiscreteGame":
        return replace(self, structure=Structure(structure))


def _lookup(index: dict, key, n: int, who: str) -> int:
    if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
        if 0 <= key < n:
            return int(key)
        raise UnknownActionError(f"unknown action: {who} index {key} out of range")
    try:
        return index[str(key)]
    except KeyError:
        raise UnknownActionError(f"unknown action: {who} action {key!r}") from None


def expected_utility(game: DiscreteGame, agent: Agent | str, d, a) -> float:
    """psi_i(d, a) = sum_s u_i(d, a, s) p_i(s | d, a), summed in outcome order."""
    util, prob = game.tables(agent)
    i, j = game.d_index(d), game.a_index(a)
    acc = 0.0
    for s in range(util.shape[-1]):
        acc = acc + float(util[i, j, s]) * float(prob[i, j, s])
    return acc


@dataclass(frozen=True, eq=False)
class TypeSpace:
    """Finite Harsanyi types for one agent with per-type table overrides.

    ``util`` and ``prob`` have shape ``(n_types, |D|, |A|, |S|)``.
    """

    labels: tuple[str, ...]
    prior: np.ndarray
    util: np.ndarray
    prob: np.ndarray
    agent: Agent = Agent.A

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("labels", _labels("types", self.labels))
        set_("agent", Agent(self.agent))
        n = len(self.labels)
        prior = np.asarray(self.prior, dtype=float)
        if prior.shape != (n,):
            raise ValidationError(f"type prior needs {n} entries")
        set_("prior", _frozen(normalize_rows(prior, "type prior")))
        util = _finite(self.util, "type utilities")
        prob = np.asarray(self.prob, dtype=float)
        if util.ndim != 4 or util.shape[0] != n or prob.shape != util.shape:
            raise ValidationError(
                f"type tables must have shape (n_types, |D|, |A|, |S|); got {util.shape}, {prob.shape}"
            )
        set_("util", _frozen(util))
        set_("prob", _frozen(normalize_rows(prob, "type probabilities")))

    @property
    def n_types(self) -> int:
        return len(self.labels)

    def psi(self) -> np.ndarray:
        """Per-type expected utilities, shape (n_types, |D|, |A|)."""
        return expected_table(self.util, self.prob)

    def type_game(self, game: DiscreteGame, t: int) -> DiscreteGame:
        """``game`` with this agent's tables replaced by those of type ``t``."""
        if self.agent is Agent.A:
            return replace(game, util_a=self.util[t], prob_a=self.prob[t])
        return replace(game, util_d=self.util[t], prob_d=self.prob[t])

    def restrict(self, d_idx: Sequence[int], a_idx: Sequence[int]) -> "TypeSpace":
        ix = (slice(None),) + np.ix_(list(d_idx), list(a_idx))
        return replace(self, util=self.util[ix], prob=self.prob[ix])


@dataclass(frozen=True, eq=False)
class PrivateInfoGame:
    """Sequential defend-attack game where the defender observes a signal ``v``.

    ``prob_d_v`` and ``util_d_v`` have shape ``(|D|, |A|, |S|, |V|)``.  The
    ``base`` game carries the labels, the attacker tables (the attacker does
    not observe ``v``) and the defender's tables marginalized over
    ``v_prior``.
    """

    base: DiscreteGame
    signals: tuple[str, ...]
    v_prior: np.ndarray
    prob_d_v: np.ndarray
    util_d_v: np.ndarray

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("signals", _labels("signals", self.signals))
        if self.base.structure is not Structure.SEQUENTIAL_DA_PRIVATE_INFO:
            set_("base", self.base.with_structure(Structure.SEQUENTIAL_DA_PRIVATE_INFO))
        shape = self.base.shape + (len(self.signals),)
        prior = np.asarray(self.v_prior, dtype=float)
        if prior.shape != (len(self.signals),):
            raise ValidationError("v_prior needs one probability per signal")
        set_("v_prior", _frozen(normalize_rows(prior, "v_prior")))
        p = np.asarray(self.prob_d_v, dtype=float)
        u = _finite(self.util_d_v, "util_d_v")
        if p.shape != shape or u.shape != shape:
            raise ValidationError(f"private-info tables must have shape {shape}")
        p = np.moveaxis(normalize_rows(np.moveaxis(p, 3, 2), "prob_d_v"), 2, 3)
        set_("prob_d_v", _frozen(p))
        set_("util_d_v", _frozen(u))

    @classmethod
    def from_tables(cls, defender_actions, attacker_actions, outcomes, signals, v_prior,
                    prob_d_v, util_d_v, prob_a=None, util_a=None) -> "PrivateInfoGame":
        """Build the game, deriving the signal-marginal defender tables for ``base``."""
        prior = normalize_rows(np.asarray(v_prior, dtype=float), "v_prior")
        p = np.asarray(prob_d_v, dtype=float)
        u = np.asarray(util_d_v, dtype=float)
        pbar = (p * prior).sum(axis=-1)
        weighted = (p * u * prior).sum(axis=-1)
        plain = (u * prior).sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            ubar = np.where(pbar > 0, weighted / np.where(pbar > 0, pbar, 1.0), plain)
        base = DiscreteGame(defender_actions, attacker_actions, outcomes, pbar, ubar,
                            prob_a, util_a, Structure.SEQUENTIAL_DA_PRIVATE_INFO)
        return cls(base, tuple(signals), prior, p, u)

    def slice(self, v) -> DiscreteGame:
        """Defender's game once signal ``v`` is observed."""
        k = _lookup({x: i for i, x in enumerate(self.signals)}, v, len(self.signals), "signal")
        return replace(self.base, prob_d=self.prob_d_v[..., k], util_d=self.util_d_v[..., k],
                       structure=Structure.SIMULTANEOUS)


@dataclass(frozen=True, eq=False)
class DefendAttackDefendGame:
    """Defense ``d1``, observed attack ``a``, outcome ``s``, then mitigation ``d2``.

    ``prob_*`` have shape ``(|D1|, |A|, |S|)``; ``util_*`` have shape
    ``(|D1|, |A|, |S|, |D2|)``.
    """

    d1_actions: tuple[str, ...]
    attacker_actions: tuple[str, ...]
    outcomes: tuple[str, ...]
    d2_actions: tuple[str, ...]
    prob_d: np.ndarray
    util_d: np.ndarray
    prob_a: np.ndarray | None = None
    util_a: np.ndarray | None = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        for name in ("d1_actions", "attacker_actions", "outcomes", "d2_actions"):
            set_(name, _labels(name, getattr(self, name)))
        pshape = (len(self.d1_actions), len(self.attacker_actions), len(self.outcomes))
        ushape = pshape + (len(self.d2_actions),)
        for name in ("prob_d", "util_d", "prob_a", "util_a"):
            table = getattr(self, name)
            if table is None:
                if name in ("prob_d", "util_d"):
                    raise JudgmentsAbsentError(f"{name} is required")
                continue
            table = np.asarray(table, dtype=float)
            want = pshape if name.startswith("prob") else ushape
            if table.shape != want:
                raise ValidationError(f"{name}: shape {table.shape} != {want}")
            table = normalize_rows(table, name) if name.startswith("prob") else _finite(table, name)
            set_(name, _frozen(table))
        if (self.prob_a is None) != (self.util_a is None):
            raise ValidationError("prob_a and util_a must be given together")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (len(self.d1_actions), len(self.attacker_actions), len(self.outcomes),
                len(self.d2_actions))

    def mitigation_policy(self) -> np.ndarray:
        """d2*(d1, a, s) = argmax_d2 u_D(d1, a, s, d2), lowest index on ties."""
        return np.argmax(self.util_d, axis=-1)
