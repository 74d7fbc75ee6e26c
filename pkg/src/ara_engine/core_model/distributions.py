"""Parametric one-dimensional distributions (plus the Dirichlet).

Each family is a frozen dataclass exposing ``cdf``, ``pdf``, ``sample`` and
``support``.  CDFs are closed form and clamp to 0/1 outside the support.
Sampling is deterministic given the generator state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import special

from ..errors import ValidationError

CATEGORICAL_TOL = 1e-12


class Distribution:
    """Common interface.  Subclasses are immutable."""

    family: str = ""

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    @property
    def is_point_mass(self) -> bool:
        lo, hi = self.support
        return lo == hi

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


def _as_float(x):
    arr = np.asarray(x, dtype=float)
    return arr


def _ret(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class PointMass(Distribution):
    value: float
    family = "point_mass"

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValidationError("PointMass value must be finite")

    @property
    def support(self):
        return (float(self.value), float(self.value))

    def cdf(self, x):
        return _ret(np.where(_as_float(x) >= self.value, 1.0, 0.0))

    def pdf(self, x):
        # Density is undefined for an atom; zero everywhere by convention.
        return _ret(np.zeros_like(_as_float(x)))

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def mean(self):
        return float(self.value)

    def to_dict(self):
        return {"family": self.family, "value": self.value}


@dataclass(frozen=True)
class Uniform(Distribution):
    lo: float
    hi: float
    family = "uniform"

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValidationError(f"Uniform requires lo < hi, got ({self.lo}, {self.hi})")

    @property
    def support(self):
        return (float(self.lo), float(self.hi))

    def cdf(self, x):
        return _ret(np.clip((_as_float(x) - self.lo) / (self.hi - self.lo), 0.0, 1.0))

    def pdf(self, x):
        x = _as_float(x)
        return _ret(np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0))

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def to_dict(self):
        return {"family": self.family, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Triangular(Distribution):
    lo: float
    mode: float
    hi: float
    family = "triangular"

    def __post_init__(self):
        if not (self.lo < self.hi and self.lo <= self.mode <= self.hi):
            raise ValidationError(
                f"Triangular requires lo <= mode <= hi and lo < hi, got "
                f"({self.lo}, {self.mode}, {self.hi})"
            )

    @property
    def support(self):
        return (float(self.lo), float(self.hi))

    def cdf(self, x):
        x = _as_float(x)
        a, c, b = self.lo, self.mode, self.hi
        out = np.zeros_like(x)
        left = (x > a) & (x <= c)
        right = (x > c) & (x < b)
        if c > a:
            out = np.where(left, (x - a) ** 2 / ((b - a) * (c - a)), out)
        if b > c:
            out = np.where(right, 1.0 - (b - x) ** 2 / ((b - a) * (b - c)), out)
        out = np.where(x >= b, 1.0, out)
        return _ret(out)

    def pdf(self, x):
        x = _as_float(x)
        a, c, b = self.lo, self.mode, self.hi
        out = np.zeros_like(x)
        if c > a:
            out = np.where((x >= a) & (x < c), 2 * (x - a) / ((b - a) * (c - a)), out)
        if b > c:
            out = np.where((x >= c) & (x <= b), 2 * (b - x) / ((b - a) * (b - c)), out)
        else:
            out = np.where(x == b, 2.0 / (b - a), out)
        return _ret(out)

    def sample(self, rng, size=None):
        # Inverse CDF keeps one uniform per draw, so streams stay aligned.
        u = rng.random(size)
        a, c, b = self.lo, self.mode, self.hi
        split = (c - a) / (b - a)
        lower = a + np.sqrt(u * (b - a) * (c - a))
        upper = b - np.sqrt((1.0 - u) * (b - a) * (b - c))
        out = np.where(u < split, lower, upper)
        return _ret(out)

    def mean(self):
        return (self.lo + self.mode + self.hi) / 3.0

    def to_dict(self):
        return {"family": self.family, "lo": self.lo, "mode": self.mode, "hi": self.hi}


@dataclass(frozen=True)
class Beta(Distribution):
    alpha: float
    beta: float
    family = "beta"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValidationError("Beta requires alpha, beta > 0")

    @property
    def support(self):
        return (0.0, 1.0)

    def cdf(self, x):
        x = np.clip(_as_float(x), 0.0, 1.0)
        return _ret(special.betainc(self.alpha, self.beta, x))

    def pdf(self, x):
        x = _as_float(x)
        inside = (x > 0) & (x < 1)
        xs = np.where(inside, x, 0.5)
        logp = (
            (self.alpha - 1) * np.log(xs)
            + (self.beta - 1) * np.log1p(-xs)
            - special.betaln(self.alpha, self.beta)
        )
        return _ret(np.where(inside, np.exp(logp), 0.0))

    def sample(self, rng, size=None):
        return rng.beta(self.alpha, self.beta, size)

    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class Power(Distribution):
    """Distribution on [0, 1] with CDF ``p**k``."""

    k: float
    family = "power"

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError("Power requires k > 0")

    @property
    def support(self):
        return (0.0, 1.0)

    def cdf(self, x):
        return _ret(np.clip(_as_float(x), 0.0, 1.0) ** self.k)

    def pdf(self, x):
        x = _as_float(x)
        inside = (x > 0) & (x <= 1)
        xs = np.where(inside, x, 1.0)
        return _ret(np.where(inside, self.k * xs ** (self.k - 1), 0.0))

    def sample(self, rng, size=None):
        return _ret(rng.random(size) ** (1.0 / self.k))

    def mean(self):
        return self.k / (self.k + 1.0)

    def to_dict(self):
        return {"family": self.family, "k": self.k}


@dataclass(frozen=True)
class Categorical(Distribution):
    """Finite distribution.  ``values`` may be numbers or labels."""

    values: tuple
    probs: tuple
    family = "categorical"
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = tuple(self.values)
        probs = np.asarray(self.probs, dtype=float)
        if len(values) == 0 or probs.shape != (len(values),):
            raise ValidationError("Categorical needs one probability per value")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > CATEGORICAL_TOL:
            raise ValidationError(
                f"Categorical probabilities must be nonnegative and sum to 1 (sum={probs.sum()!r})"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", tuple(float(p) for p in probs))
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        object.__setattr__(self, "_cum", cum)

    @property
    def numeric(self) -> bool:
        return all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
                   for v in self.values)

    @property
    def support(self):
        if not self.numeric:
            raise TypeError("support is only defined for numeric categorical values")
        v = np.asarray(self.values, dtype=float)
        return (float(v.min()), float(v.max()))

    def cdf(self, x):
        if not self.numeric:
            raise TypeError("cdf is only defined for numeric categorical values")
        x = _as_float(x)
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs)
        out = (p[None, :] * (v[None, :] <= x.reshape(-1, 1))).sum(axis=1)
        return _ret(np.clip(out.reshape(x.shape), 0.0, 1.0))

    def pmf(self, x):
        v = np.asarray(self.values, dtype=float)
        x = _as_float(x)
        out = (np.asarray(self.probs)[None, :] * (v[None, :] == x.reshape(-1, 1))).sum(axis=1)
        return _ret(out.reshape(x.shape))

    pdf = pmf

    def sample_index(self, rng, size=None):
        u = rng.random(size)
        return np.searchsorted(self._cum, u, side="right")

    def sample(self, rng, size=None):
        idx = self.sample_index(rng, size)
        if self.numeric:
            return _ret(np.asarray(self.values, dtype=float)[idx])
        arr = np.empty(len(self.values), dtype=object)
        arr[:] = self.values
        return arr[idx] if size is not None else arr[int(idx)]

    def mean(self):
        return float(np.dot(np.asarray(self.values, dtype=float), self.probs))

    def to_dict(self):
        return {"family": self.family, "values": list(self.values), "probs": list(self.probs)}


@dataclass(frozen=True)
class Dirichlet(Distribution):
    """Dirichlet on the simplex.  Multivariate: ``cdf`` is not defined,
    use ``marginal(i)`` for the Beta marginal of coordinate ``i``."""

    alphas: tuple
    family = "dirichlet"

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        if a.ndim != 1 or len(a) < 1 or np.any(~(a > 0)) or not np.all(np.isfinite(a)):
            raise ValidationError("Dirichlet alphas must be a non-empty vector of positive reals")
        object.__setattr__(self, "alphas", tuple(float(x) for x in a))

    @property
    def dim(self) -> int:
        return len(self.alphas)

    @property
    def support(self):
        return (0.0, 1.0)

    def marginal(self, i: int) -> Beta:
        a = np.asarray(self.alphas)
        return Beta(a[i], a.sum() - a[i])

    def cdf(self, x):
        raise TypeError("Dirichlet is multivariate; use marginal(i).cdf")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a = np.asarray(self.alphas)
        logb = special.gammaln(a).sum() - special.gammaln(a.sum())
        with np.errstate(divide="ignore"):
            return float(np.exp(((a - 1) * np.log(x)).sum() - logb))

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        out = sample_dirichlet_rows(rng, np.broadcast_to(np.asarray(self.alphas), (n, self.dim)))
        if size is None:
            return out[0]
        return out.reshape(tuple(np.atleast_1d(size)) + (self.dim,))

    def mean(self):
        a = np.asarray(self.alphas)
        return a / a.sum()

    def to_dict(self):
        return {"family": self.family, "alphas": list(self.alphas)}


def sample_dirichlet_rows(rng: np.random.Generator, alphas: np.ndarray) -> np.ndarray:
    """Dirichlet draws along the last axis for an array of concentration vectors.

    Gamma variates are normalized; rows whose gammas all underflow (possible
    for tiny alphas) put their mass on a single coordinate drawn in
    proportion to alpha, which is the limiting behaviour.
    """
    alphas = np.asarray(alphas, dtype=float)
    g = rng.standard_gamma(alphas)
    tot = g.sum(axis=-1, keepdims=True)
    bad = tot[..., 0] <= 0
    if np.any(bad):
        a_bad = alphas[bad]
        u = rng.random(a_bad.shape[:-1])
        cum = np.cumsum(a_bad, axis=-1)
        cum = cum / cum[..., -1:]
        pick = (u[..., None] >= cum).sum(axis=-1)
        onehot = np.zeros_like(a_bad)
        np.put_along_axis(onehot, pick[..., None], 1.0, axis=-1)
        g[bad] = onehot
        tot = g.sum(axis=-1, keepdims=True)
    return g / tot


def cdf(dist: Distribution, x):
    """Closed-form CDF, clamped to 0/1 outside the support."""
    return dist.cdf(x)


def sample(dist: Distribution, rng: np.random.Generator, size=None):
    """One draw (or ``size`` draws) from ``dist`` using ``rng``."""
    return dist.sample(rng, size)


_FAMILIES = {
    "point_mass": lambda d: PointMass(float(d["value"])),
    "uniform": lambda d: Uniform(float(d["lo"]), float(d["hi"])),
    "triangular": lambda d: Triangular(float(d["lo"]), float(d["mode"]), float(d["hi"])),
    "beta": lambda d: Beta(float(d["alpha"]), float(d["beta"])),
    "power": lambda d: Power(float(d["k"])),
    "categorical": lambda d: Categorical(tuple(d["values"]), tuple(d["probs"])),
    "dirichlet": lambda d: Dirichlet(tuple(d["alphas"])),
}


def from_dict(obj) -> Distribution:
    """Build a distribution from its JSON form.  A bare number is a point mass."""
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return PointMass(float(obj))
    if not isinstance(obj, dict) or "family" not in obj:
        raise ValidationError(f"distribution must be a number or an object with 'family': {obj!r}")
    family = str(obj["family"]).lower().replace("-", "_")
    if family not in _FAMILIES:
        raise ValidationError(f"unknown distribution family {obj['family']!r}")
    try:
        return _FAMILIES[family](obj)
    except KeyError as exc:
        raise ValidationError(f"{family} distribution missing parameter {exc.args[0]!r}") from None
