"""Finite games, distribution primitives and exact expected utilities."""

from .distributions import (
    Beta,
    Categorical,
    Dirichlet,
    Distribution,
    PointMass,
    Power,
    Triangular,
    Uniform,
    cdf,
    sample,
)
from .games import (
    Agent,
    DefendAttackDefendGame,
    DiscreteGame,
    PrivateInfoGame,
    Structure,
    TypeSpace,
    expected_table,
    expected_utility,
    normalize_rows,
)

__all__ = [
    "Agent", "Beta", "Categorical", "DefendAttackDefendGame", "Dirichlet", "DiscreteGame",
    "Distribution", "PointMass", "Power", "PrivateInfoGame", "Structure", "Triangular",
    "TypeSpace", "Uniform", "cdf", "expected_table", "expected_utility", "normalize_rows",
    "sample",
]
