"""Common-knowledge baselines: pure Nash equilibria, Stackelberg solutions, Bayes-Nash equilibria."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core_model.games import Agent, DiscreteGame, TypeSpace
from .errors import CKDataRequiredError, InstanceTooLargeError, ValidationError

BNE_CAP = 1_000_000
BNE_RTOL = 1e-12


def _psi_both(game: DiscreteGame) -> tuple[np.ndarray, np.ndarray]:
    if not game.has_attacker_tables:
        raise CKDataRequiredError("CK data required: attacker utility/probability tables missing")
    return game.psi(Agent.D), game.psi(Agent.A)


@dataclass(frozen=True)
class EquilibriumSet:
    """Pure equilibrium profiles as (defense, attack) label pairs, in row-major index order."""

    profiles: tuple[tuple[str, str], ...]
    indices: tuple[tuple[int, int], ...]

    @property
    def empty(self) -> bool:
        return not self.profiles

    def __len__(self) -> int:
        return len(self.profiles)

    def __iter__(self):
        return iter(self.profiles)

    def to_dict(self) -> dict:
        return {"equilibria": [list(p) for p in self.profiles], "empty": self.empty}


def pure_nash(game: DiscreteGame) -> EquilibriumSet:
    """All (d, a) with psi_D(d, a) >= psi_D(d', a) and psi_A(d, a) >= psi_A(d, a') for every d', a'."""
    psi_d, psi_a = _psi_both(game)
    best_d = psi_d.max(axis=0)
    best_a = psi_a.max(axis=1)
    idx = []
    for d in range(psi_d.shape[0]):
        for a in range(psi_d.shape[1]):
            if psi_d[d, a] >= best_d[a] and psi_a[d, a] >= best_a[d]:
                idx.append((d, a))
    return EquilibriumSet(
        tuple((game.defender_actions[d], game.attacker_actions[a]) for d, a in idx),
        tuple(idx),
    )


@dataclass(frozen=True)
class StackelbergSolution:
    """Defender leads: ``response`` maps each defense to the attacker's best reply."""

    d_star: str
    response: Mapping[str, str]
    value: float
    values: Mapping[str, float]

    @property
    def a_star(self) -> str:
        return self.response[self.d_star]

    def to_dict(self) -> dict:
        return {
            "concept": "stackelberg",
            "chosen": self.d_star,
            "attack_response": dict(self.response),
            "expected_utility": self.value,
            "expected_utilities": dict(self.values),
        }


def stackelberg_solve(game: DiscreteGame) -> StackelbergSolution:
    """Backward induction: a*(d) = argmax_a psi_A(d, a), d* = argmax_d psi_D(d, a*(d)).

    Ties go to the lowest index at both stages.
    """
    psi_d, psi_a = _psi_both(game)
    reply = np.argmax(psi_a, axis=1)
    vals = psi_d[np.arange(psi_d.shape[0]), reply]
    d = int(np.argmax(vals))
    return StackelbergSolution(
        d_star=game.defender_actions[d],
        response={game.defender_actions[i]: game.attacker_actions[reply[i]] for i in range(len(reply))},
        value=float(vals[d]),
        values=dict(zip(game.defender_actions, map(float, vals))),
    )


@dataclass(frozen=True)
class BneSequentialSolution:
    d_star: str
    value: float
    values: Mapping[str, float]
    responses: Mapping[str, Mapping[str, str]]

    def to_dict(self) -> dict:
        return {
            "concept": "bne",
            "chosen": self.d_star,
            "expected_utility": self.value,
            "expected_utilities": dict(self.values),
            "type_responses": {t: dict(r) for t, r in self.responses.items()},
        }


def bne_sequential(game: DiscreteGame, types: TypeSpace) -> BneSequentialSolution:
    """Defender leads against an attacker of unknown type.

    a*(d, t) = argmax_a psi_A^t(d, a) per type, and the defense maximizes
    sum_t psi_D(d, a*(d, t)) prior(t), accumulated in type order.
    """
    if types is None or types.n_types == 0:
        raise ValidationError("bne_sequential needs a non-empty type space")
    if types.util.shape[1:] != game.shape:
        raise ValidationError(f"type tables {types.util.shape[1:]} do not match game {game.shape}")
    psi_d = game.psi(Agent.D)
    psi_t = types.psi()
    rows = np.arange(psi_d.shape[0])
    replies = np.argmax(psi_t, axis=2)  # (n_types, |D|)
    acc = np.zeros(psi_d.shape[0])
    for t in range(types.n_types):
        acc = acc + psi_d[rows, replies[t]] * types.prior[t]
    d = int(np.argmax(acc))
    return BneSequentialSolution(
        d_star=game.defender_actions[d],
        value=float(acc[d]),
        values=dict(zip(game.defender_actions, map(float, acc))),
        responses={
            types.labels[t]: {game.defender_actions[i]: game.attacker_actions[replies[t, i]] for i in rows}
            for t in range(types.n_types)
        },
    )


@dataclass(frozen=True)
class BneStrategyProfile:
    """Pure strategy functions d(type_D), a(type_A) and the interim utilities they earn."""

    defender: Mapping[str, str]
    attacker: Mapping[str, str]
    defender_values: Mapping[str, float]
    attacker_values: Mapping[str, float]

    def to_dict(self) -> dict:
        return {
            "defender": dict(self.defender),
            "attacker": dict(self.attacker),
            "defender_values": dict(self.defender_values),
            "attacker_values": dict(self.attacker_values),
        }


def _single_type(game: DiscreteGame, agent: Agent) -> TypeSpace:
    util, prob = game.tables(agent)
    return TypeSpace(("t0",), np.ones(1), util[None], prob[None], agent)


def bne_simultaneous(game: DiscreteGame, attacker_types: TypeSpace | None = None,
                     defender_types: TypeSpace | None = None, prior: np.ndarray | None = None,
                     cap: int = BNE_CAP) -> list[BneStrategyProfile]:
    """All pure Bayes-Nash equilibria of the simultaneous game, by exhaustive search.

    Missing type spaces default to a single type holding the game's tables.
    ``prior`` is the joint prior over (defender type, attacker type); by
    default the product of the two type priors.  Deviations are checked type
    by type against the interim expected utility given the opponent's
    strategy function.  Types of zero prior probability impose no condition,
    so every action of theirs appears.  Profiles are sorted by the action
    indices of the defender's then the attacker's strategy.
    """
    ta = attacker_types if attacker_types is not None else _single_type(game, Agent.A)
    td = defender_types if defender_types is not None else _single_type(game, Agent.D)
    if ta.agent is not Agent.A or td.agent is not Agent.D:
        raise ValidationError("type spaces must belong to the attacker and defender respectively")
    for ts in (ta, td):
        if ts.util.shape[1:] != game.shape:
            raise ValidationError(f"type tables {ts.util.shape[1:]} do not match game {game.shape}")
    n_d, n_a, _ = game.shape
    size = n_d ** td.n_types * n_a ** ta.n_types
    if size > cap:
        raise InstanceTooLargeError(f"instance too large for exhaustive BNE: {size} strategy pairs > cap {cap}")
    joint = np.outer(td.prior, ta.prior) if prior is None else np.asarray(prior, dtype=float)
    if joint.shape != (td.n_types, ta.n_types) or np.any(joint < 0) or abs(joint.sum() - 1) > 1e-9:
        raise ValidationError("joint type prior must be a (defender types, attacker types) distribution")
    psi_d = td.psi()  # (T_D, |D|, |A|)
    psi_a = ta.psi()  # (T_A, |D|, |A|)
    tol_d = BNE_RTOL * max(1.0, float(np.abs(psi_d).max()))
    tol_a = BNE_RTOL * max(1.0, float(np.abs(psi_a).max()))

    def attacker_interim(dstrat, t):
        acc = np.zeros(n_a)
        for s in range(td.n_types):
            acc = acc + joint[s, t] * psi_a[t, dstrat[s], :]
        return acc

    def defender_interim(astrat, s):
        acc = np.zeros(n_d)
        for t in range(ta.n_types):
            acc = acc + joint[s, t] * psi_d[s, :, astrat[t]]
        return acc

    found = []
    for dstrat in itertools.product(range(n_d), repeat=td.n_types):
        a_values = [attacker_interim(dstrat, t) for t in range(ta.n_types)]
        options = [np.flatnonzero(v >= v.max() - tol_a) if joint[:, t].sum() > 0 else np.arange(n_a)
                   for t, v in enumerate(a_values)]
        for astrat in itertools.product(*options):
            d_values = [defender_interim(astrat, s) for s in range(td.n_types)]
            ok = all(joint[s].sum() == 0 or v[dstrat[s]] >= v.max() - tol_d for s, v in enumerate(d_values))
            if ok:
                found.append((dstrat, astrat, d_values, a_values))
    found.sort(key=lambda x: (x[0], x[1]))
    return [
        BneStrategyProfile(
            defender={td.labels[s]: game.defender_actions[d] for s, d in enumerate(ds)},
            attacker={ta.labels[t]: game.attacker_actions[a] for t, a in enumerate(as_)},
            defender_values={td.labels[s]: float(dv[s][ds[s]]) for s in range(td.n_types)},
            attacker_values={ta.labels[t]: float(av[t][as_[t]]) for t in range(ta.n_types)},
        )
        for ds, as_, dv, av in found
    ]
