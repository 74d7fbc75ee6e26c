"""Result containers shared by the ARA solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import ValidationError

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ActionDistribution:
    """Estimated distribution over a finite action set.

    ``sample_count`` is the Monte Carlo sample size K (for posterior
    predictive distributions it is the effective count, see
    :func:`fictitious_play_predict`).
    """

    labels: tuple[str, ...]
    probs: np.ndarray
    sample_count: float = 1

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        labels = tuple(str(x) for x in self.labels)
        if probs.shape != (len(labels),):
            raise ValidationError("ActionDistribution: one probability per label required")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > SUM_TOL:
            raise ValidationError(f"ActionDistribution: probabilities must be a distribution, sum={probs.sum()!r}")
        if not self.sample_count >= 1:
            raise ValidationError("ActionDistribution: sample count must be >= 1")
        probs.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_counts(cls, labels: Sequence[str], counts, total: int | None = None) -> "ActionDistribution":
        counts = np.asarray(counts, dtype=float)
        total = int(counts.sum()) if total is None else total
        return cls(tuple(labels), counts / total, total)

    @classmethod
    def point_mass(cls, labels: Sequence[str], index: int) -> "ActionDistribution":
        p = np.zeros(len(labels))
        p[index] = 1.0
        return cls(tuple(labels), p, 1)

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> "ActionDistribution":
        n = len(labels)
        return cls(tuple(labels), np.full(n, 1.0 / n), 1)

    @property
    def std_err(self) -> np.ndarray:
        """Per-action Monte Carlo standard error sqrt(p (1 - p) / K)."""
        return np.sqrt(self.probs * (1.0 - self.probs) / self.sample_count)

    def __getitem__(self, label) -> float:
        return float(self.probs[self.labels.index(str(label))])

    def as_dict(self) -> dict[str, float]:
        return {a: float(p) for a, p in zip(self.labels, self.probs)}

    def to_dict(self) -> dict[str, Any]:
        return {
            "pi_hat": self.as_dict(),
            "std_err": {a: float(s) for a, s in zip(self.labels, self.std_err)},
            "K": _num(self.sample_count),
        }


@dataclass(frozen=True, eq=False)
class ConditionalActionDistribution:
    """p_D(a | d): one :class:`ActionDistribution` per defender action."""

    rows: Mapping[str, ActionDistribution]

    def __getitem__(self, d) -> ActionDistribution:
        return self.rows[str(d)]

    def matrix(self) -> np.ndarray:
        return np.stack([row.probs for row in self.rows.values()])

    def to_dict(self) -> dict[str, Any]:
        return {
            "p_hat": {d: row.as_dict() for d, row in self.rows.items()},
            "std_err": {d: {a: float(s) for a, s in zip(row.labels, row.std_err)}
                        for d, row in self.rows.items()},
        }


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() else x


@dataclass(frozen=True, eq=False)
class DecisionReport:
    """Outcome of an ARA or baseline solve.

    ``chosen`` is an action label, or a policy mapping (observed attack,
    signal, ...) to a label.  ``expected_utilities`` holds the table the
    choice maximizes.
    """

    concept: str
    chosen: Any
    expected_utility: float
    expected_utilities: Mapping[str, Any]
    distribution: ActionDistribution | ConditionalActionDistribution | None = None
    seed: int | None = None
    K: int | None = None
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    @property
    def pi_hat(self) -> ActionDistribution | None:
        return self.distribution if isinstance(self.distribution, ActionDistribution) else None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "concept": self.concept,
            "chosen": self.chosen,
            "expected_utility": float(self.expected_utility),
            "expected_utilities": _plain(self.expected_utilities),
        }
        if self.distribution is not None:
            out.update(self.distribution.to_dict())
        out["K"] = self.K
        out["seed"] = self.seed
        out["skipped_samples"] = int(self.diagnostics.get("skipped_samples", 0))
        out["diagnostics"] = _plain(self.diagnostics)
        return out


def _plain(obj):
    """Convert numpy scalars/arrays and nested containers to JSON-ready values."""
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def argmax_first(values: np.ndarray) -> int:
    """Index of the maximum, lowest index on ties."""
    return int(np.argmax(values))


def weighted_rows(psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_a psi[d, a] * weights[a], accumulated in ascending action index."""
    acc = np.zeros(psi.shape[0])
    for a in range(psi.shape[1]):
        acc = acc + psi[:, a] * weights[a]
    return acc
