"""The defender's random model of her opponent.

A :class:`JudgmentModel` is one row of the defender's cognitive-load table:
random utilities, outcome probabilities and beliefs she ascribes to the
attacker, plus optional "mirror" columns for what she thinks the attacker
ascribes to her.  Deeper recursion rows hang off ``deeper``.

Sampling is vectorized: ``sample(rng, n)`` returns ``n`` independent draws
stacked on the leading axis.  Draw order inside a block is fixed (utilities,
then probabilities, then beliefs), cells in C order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core_model.distributions import Distribution, PointMass, sample_dirichlet_rows
from .core_model.games import TypeSpace, normalize_rows
from .errors import ShapeConflictError, ValidationError


def _freeze(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _index(shape_len: int, d_idx, a_idx):
    """Index tuple selecting defender/attacker sub-ranges on the first two axes."""
    return np.ix_(list(d_idx), list(a_idx)) + (slice(None),) * (shape_len - 2)


@dataclass(frozen=True, eq=False)
class RandomUtilitySpec:
    """Random utility table.

    Either independent per-cell distributions (``cells``, an object array of
    :class:`Distribution`) or a base table under a random positive affine
    transform ``scale * base + shift`` with one (scale, shift) per draw.
    """

    cells: np.ndarray | None = None
    base: np.ndarray | None = None
    scale: Distribution | None = None
    shift: Distribution | None = None

    def __post_init__(self):
        if (self.cells is None) == (self.base is None):
            raise ValidationError("random utility: give either per-cell distributions or a base table")
        if self.cells is not None:
            cells = np.asarray(self.cells, dtype=object)
            for c in cells.flat:
                if not isinstance(c, Distribution) or c.family == "dirichlet":
                    raise ValidationError(f"random utility cell must be a scalar distribution, got {c!r}")
            object.__setattr__(self, "cells", cells)
        else:
            base = np.array(self.base, dtype=float)
            if not np.all(np.isfinite(base)):
                raise ValidationError("random utility base table must be finite")
            object.__setattr__(self, "base", _freeze(base))
            scale = self.scale if self.scale is not None else PointMass(1.0)
            shift = self.shift if self.shift is not None else PointMass(0.0)
            if scale.support[0] <= 0:
                raise ValidationError("affine utility scale must have support in (0, inf)")
            object.__setattr__(self, "scale", scale)
            object.__setattr__(self, "shift", shift)

    @classmethod
    def cellwise(cls, cells) -> "RandomUtilitySpec":
        return cls(cells=np.asarray(cells, dtype=object))

    @classmethod
    def affine(cls, base, scale: Distribution, shift: Distribution | None = None) -> "RandomUtilitySpec":
        return cls(base=base, scale=scale, shift=shift)

    @classmethod
    def fixed(cls, table) -> "RandomUtilitySpec":
        """Degenerate spec that always returns ``table``."""
        return cls(base=table)

    @property
    def form(self) -> str:
        return "cells" if self.cells is not None else "affine"

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.cells.shape if self.cells is not None else self.base.shape)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.cells is not None:
            out = np.empty((n,) + self.shape)
            flat = out.reshape(n, -1)
            for i, dist in enumerate(self.cells.flat):
                flat[:, i] = dist.sample(rng, n)
            return out
        scale = np.asarray(self.scale.sample(rng, n), dtype=float)
        shift = np.asarray(self.shift.sample(rng, n), dtype=float)
        extra = (1,) * len(self.shape)
        return scale.reshape((n,) + extra) * self.base + shift.reshape((n,) + extra)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact per-cell support bounds ``(lo, hi)``."""
        if self.cells is not None:
            lo = np.empty(self.shape)
            hi = np.empty(self.shape)
            for i, dist in enumerate(self.cells.flat):
                lo.flat[i], hi.flat[i] = dist.support
            return lo, hi
        s_lo, s_hi = self.scale.support
        t_lo, t_hi = self.shift.support
        cand = np.stack([s_lo * self.base, s_hi * self.base])
        return cand.min(axis=0) + t_lo, cand.max(axis=0) + t_hi

    def restrict(self, d_idx, a_idx) -> "RandomUtilitySpec":
        ix = _index(len(self.shape), d_idx, a_idx)
        if self.cells is not None:
            return RandomUtilitySpec(cells=self.cells[ix])
        return RandomUtilitySpec(base=self.base[ix], scale=self.scale, shift=self.shift)


@dataclass(frozen=True, eq=False)
class RandomProbabilitySpec:
    """Random outcome probabilities: a Dirichlet per row, or a fixed table."""

    alphas: np.ndarray | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if (self.alphas is None) == (self.table is None):
            raise ValidationError("random probability: give either Dirichlet alphas or a fixed table")
        if self.alphas is not None:
            a = np.array(self.alphas, dtype=float)
            if a.ndim < 1 or np.any(~(a > 0)) or not np.all(np.isfinite(a)):
                raise ValidationError("Dirichlet alphas must be positive and finite")
            object.__setattr__(self, "alphas", _freeze(a))
        else:
            object.__setattr__(self, "table", _freeze(normalize_rows(self.table, "random_prob table")))

    @classmethod
    def dirichlet(cls, alphas) -> "RandomProbabilitySpec":
        return cls(alphas=alphas)

    @classmethod
    def fixed(cls, table) -> "RandomProbabilitySpec":
        return cls(table=table)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple((self.alphas if self.alphas is not None else self.table).shape)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.table is not None:
            return np.broadcast_to(self.table, (n,) + self.shape)
        return sample_dirichlet_rows(rng, np.broadcast_to(self.alphas, (n,) + self.shape))

    def restrict(self, d_idx, a_idx) -> "RandomProbabilitySpec":
        ix = _index(len(self.shape), d_idx, a_idx)
        if self.alphas is not None:
            return RandomProbabilitySpec(alphas=self.alphas[ix])
        return RandomProbabilitySpec(table=self.table[ix])


@dataclass(frozen=True, eq=False)
class RandomBeliefSpec:
    """Random distribution over the opponent's actions.

    ``kind`` is one of ``uniform`` (the non-informative default), ``dirichlet``
    (``alphas``), ``fixed`` (``probs``) or ``recursive``, meaning the belief is
    produced by solving the next row of the recursion.
    """

    kind: str = "uniform"
    alphas: np.ndarray | None = None
    probs: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "dirichlet", "fixed", "recursive"):
            raise ValidationError(f"unknown belief kind {self.kind!r}")
        if self.kind == "dirichlet":
            a = np.array(self.alphas, dtype=float)
            if a.ndim != 1 or np.any(~(a > 0)):
                raise ValidationError("belief Dirichlet alphas must be a positive vector")
            object.__setattr__(self, "alphas", _freeze(a))
        if self.kind == "fixed":
            object.__setattr__(self, "probs", _freeze(normalize_rows(self.probs, "belief probs")))

    @classmethod
    def uniform(cls) -> "RandomBeliefSpec":
        return cls("uniform")

    @classmethod
    def dirichlet(cls, alphas) -> "RandomBeliefSpec":
        return cls("dirichlet", alphas=alphas)

    @classmethod
    def fixed(cls, probs) -> "RandomBeliefSpec":
        return cls("fixed", probs=probs)

    @classmethod
    def recursive(cls) -> "RandomBeliefSpec":
        return cls("recursive")

    @property
    def size(self) -> int | None:
        if self.kind == "dirichlet":
            return len(self.alphas)
        if self.kind == "fixed":
            return len(self.probs)
        return None

    def sample(self, rng: np.random.Generator, n: int, size: int) -> np.ndarray:
        if self.size is not None and self.size != size:
            raise ShapeConflictError(
                f"judgment/game shape conflict: belief has {self.size} entries, game has {size} actions"
            )
        if self.kind == "uniform":
            return np.full((n, size), 1.0 / size)
        if self.kind == "fixed":
            return np.broadcast_to(self.probs, (n, size))
        if self.kind == "dirichlet":
            return sample_dirichlet_rows(rng, np.broadcast_to(self.alphas, (n, size)))
        raise ValidationError("recursive belief must be resolved by the level-k solver before sampling")

    def restrict(self, idx: Sequence[int]) -> "RandomBeliefSpec":
        idx = list(idx)
        if self.kind == "dirichlet":
            return RandomBeliefSpec.dirichlet(self.alphas[idx])
        if self.kind == "fixed":
            p = self.probs[idx]
            if p.sum() <= 0:
                return RandomBeliefSpec.uniform()
            return RandomBeliefSpec.fixed(p / p.sum())
        return self


@dataclass(frozen=True, eq=False)
class JudgmentModel:
    """One row of random judgments, optionally followed by deeper rows.

    Attacker columns: ``random_util`` (U_A), ``random_prob`` (P_A),
    ``random_belief`` (Pi_A over defender actions).  Mirror columns:
    ``mirror_util`` (U_D), ``mirror_prob`` (P_D), ``mirror_belief`` (Pi_D
    over attacker actions), i.e. what the defender thinks the attacker
    thinks about her.  ``type_space``, when set, replaces the independent
    attacker utility/probability specs with a joint draw of a Harsanyi type.
    """

    random_util: RandomUtilitySpec | None = None
    random_prob: RandomProbabilitySpec | None = None
    random_belief: RandomBeliefSpec | None = None
    mirror_util: RandomUtilitySpec | None = None
    mirror_prob: RandomProbabilitySpec | None = None
    mirror_belief: RandomBeliefSpec | None = None
    type_space: TypeSpace | None = None
    deeper: tuple["JudgmentModel", ...] = ()

    @classmethod
    def from_type_space(cls, types: TypeSpace, random_belief: RandomBeliefSpec | None = None) -> "JudgmentModel":
        return cls(random_belief=random_belief, type_space=types)

    @property
    def depth(self) -> int:
        """Number of recursion rows declared (this row plus ``deeper``)."""
        return 1 + len(self.deeper)

    @property
    def rows(self) -> tuple["JudgmentModel", ...]:
        return (self,) + tuple(self.deeper)

    @property
    def has_attacker(self) -> bool:
        return self.type_space is not None or (self.random_util is not None and self.random_prob is not None)

    @property
    def has_mirror(self) -> bool:
        return self.mirror_util is not None and self.mirror_prob is not None

    def check_attacker(self, util_shape: tuple[int, ...], prob_shape: tuple[int, ...]) -> None:
        if not self.has_attacker:
            raise ShapeConflictError("judgment/game shape conflict: attacker utility/probability specs missing")
        if self.type_space is not None:
            got = self.type_space.util.shape[1:]
            if got != util_shape:
                raise ShapeConflictError(
                    f"judgment/game shape conflict: type tables {got} vs game {util_shape}")
            return
        if self.random_util.shape != util_shape:
            raise ShapeConflictError(
                f"judgment/game shape conflict: random utility {self.random_util.shape} vs game {util_shape}")
        if self.random_prob.shape != prob_shape:
            raise ShapeConflictError(
                f"judgment/game shape conflict: random probability {self.random_prob.shape} vs game {prob_shape}")

    def sample_attacker_tables(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n`` draws of (U_A, P_A), stacked on the leading axis."""
        if self.type_space is not None:
            ts = self.type_space
            cum = np.cumsum(ts.prior)
            cum[-1] = 1.0
            t = np.searchsorted(cum, rng.random(n), side="right")
            return ts.util[t], ts.prob[t]
        return self.random_util.sample(rng, n), self.random_prob.sample(rng, n)

    def sample_mirror_tables(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        return self.mirror_util.sample(rng, n), self.mirror_prob.sample(rng, n)

    def restrict(self, d_idx, a_idx) -> "JudgmentModel":
        """Judgments for the subgame on the given defender/attacker indices."""
        r = lambda spec: None if spec is None else spec.restrict(d_idx, a_idx)  # noqa: E731
        return replace(
            self,
            random_util=r(self.random_util),
            random_prob=r(self.random_prob),
            random_belief=None if self.random_belief is None else self.random_belief.restrict(d_idx),
            mirror_util=r(self.mirror_util),
            mirror_prob=r(self.mirror_prob),
            mirror_belief=None if self.mirror_belief is None else self.mirror_belief.restrict(a_idx),
            type_space=r(self.type_space),
            deeper=tuple(row.restrict(d_idx, a_idx) for row in self.deeper),
        )


@dataclass(frozen=True)
class AttackerProblem:
    """One sampled attacker problem (u_A^k, p_A^k, pi_A^k)."""

    util: np.ndarray
    prob: np.ndarray
    belief: np.ndarray


def sample_attacker_problems(j: JudgmentModel, game_shape: tuple[int, int, int],
                             rng: np.random.Generator, n: int) -> AttackerProblem:
    """``n`` coherent draws of the attacker's problem, stacked on axis 0.

    If the belief spec is missing, the non-informative uniform belief is used.
    """
    n_d, n_a, n_s = game_shape
    j.check_attacker((n_d, n_a, n_s), (n_d, n_a, n_s))
    util, prob = j.sample_attacker_tables(rng, n)
    belief_spec = j.random_belief or RandomBeliefSpec.uniform()
    belief = belief_spec.sample(rng, n, n_d)
    return AttackerProblem(np.asarray(util), np.asarray(prob), np.asarray(belief))


def sample_attacker_problem(j: JudgmentModel, game_shape: tuple[int, int, int],
                            rng: np.random.Generator) -> AttackerProblem:
    """A single draw {u_A^k, p_A^k, pi_A^k} from the judgment model."""
    batch = sample_attacker_problems(j, game_shape, rng, 1)
    return AttackerProblem(batch.util[0], batch.prob[0], batch.belief[0])


def attacker_problem_at(j: JudgmentModel, game_shape: tuple[int, int, int], seed: int, index: int,
                        stream: int = 0, level: int = 1) -> AttackerProblem:
    """Sample number ``index`` of the substream used by the attack-distribution estimator."""
    from .rng import BLOCK_SIZE, substream

    rng = substream(seed, stream, level, index // BLOCK_SIZE)
    batch = sample_attacker_problems(j, game_shape, rng, BLOCK_SIZE)
    k = index % BLOCK_SIZE
    return AttackerProblem(batch.util[k], batch.prob[k], batch.belief[k])
