"""Two-bidder sealed-bid first-price auctions.

Bids, values and profits are in one abstract currency.  A bidder with value
``x0`` facing a win-probability curve F(x) earns (x0 - x) F(x) in
expectation when bidding ``x``; every optimizer here maximizes that by a
grid search followed by golden-section refinement around the best grid
point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .core_model.distributions import Categorical, Distribution, PointMass
from .errors import QuadratureError, ValidationError

QUAD_TOL = 1e-6
BID_TOL = 1e-4
MIN_GRID = 100
MIRROR_TOL = 5e-3
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class BidCdf:
    """Win-probability curve tabulated on an increasing bid grid, linear in between.

    Below the grid it is 0; above it, the last tabulated value.
    """

    grid: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        g = np.array(self.grid, dtype=float)
        p = np.array(self.probs, dtype=float)
        if g.ndim != 1 or g.shape != p.shape or g.size < 2:
            raise ValidationError("bid CDF needs matching 1-d grid and probabilities")
        if np.any(np.diff(g) <= 0):
            raise ValidationError("bid grid must be strictly increasing")
        if np.any(~np.isfinite(p)) or p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValidationError("bid CDF values must lie in [0, 1]")
        p = np.clip(p, 0.0, 1.0)
        if np.any(np.diff(p) < -1e-12):
            raise ValidationError("bid CDF must be nondecreasing")
        p = np.maximum.accumulate(p)
        g.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                      n: int = 2001) -> "BidCdf":
        grid = np.linspace(lo, hi, n)
        return cls(grid, np.clip(np.asarray(f(grid), dtype=float), 0.0, 1.0))

    @classmethod
    def from_distribution(cls, dist: Distribution, grid) -> "BidCdf":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(dist.cdf(grid), dtype=float))

    def __call__(self, x):
        return np.interp(x, self.grid, self.probs, left=0.0, right=float(self.probs[-1]))

    def sup_distance(self, other: Callable, grid=None) -> float:
        g = self.grid if grid is None else np.asarray(grid, dtype=float)
        return float(np.max(np.abs(self(g) - np.asarray(other(g), dtype=float))))

    def to_dict(self) -> dict:
        return {"bid": self.grid.tolist(), "cdf": self.probs.tolist()}


def bid_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if not lo < hi:
        raise ValidationError("bid grid needs lo < hi")
    if n < MIN_GRID:
        raise ValidationError(f"bid grid needs at least {MIN_GRID} points")
    return np.linspace(lo, hi, int(n))


@dataclass(frozen=True, eq=False)
class AuctionSpec:
    """My value, my model of the opponent, and (for level 2) my model of his model of me.

    ``mirror_value`` and ``mirror_fraction`` are the distributions I think
    he uses for my value and for the fraction of it I bid.
    """

    my_value: float
    opponent_value: Distribution
    fraction: Distribution | None = None
    grid: tuple[float, float, int] = (0.0, 200.0, 2001)
    mirror_value: Distribution | None = None
    mirror_fraction: Distribution | None = None
    value_points: int = 2001
    unit: str = "currency"

    def __post_init__(self):
        if not self.my_value >= 0:
            raise ValidationError("my value must be nonnegative")
        lo, hi, n = self.grid
        bid_grid(lo, hi, n)
        for name in ("fraction", "mirror_fraction"):
            dist = getattr(self, name)
            if dist is not None:
                s_lo, s_hi = dist.support
                if s_lo < 0 or s_hi > 1:
                    raise ValidationError(f"{name} must be supported on [0, 1]")

    @property
    def bids(self) -> np.ndarray:
        return bid_grid(*self.grid)


def _h_points(h: Distribution) -> list[float]:
    pts = []
    for attr in ("mode",):
        if hasattr(h, attr):
            pts.append(float(getattr(h, attr)))
    return pts


def nonstrategic_bid_cdf(value_dist: Distribution, fraction_dist: Distribution, grid) -> BidCdf:
    """Distribution of the bid P * V of a bidder offering a random fraction P of a random value V.

    F(x) = P[PV <= x] = int h(v) G(x / v) dv, with closed forms when either
    factor is a point mass or categorical and adaptive quadrature otherwise.
    Raises :class:`QuadratureError` when the estimated quadrature error
    exceeds 1e-6.
    """
    grid = np.asarray(grid, dtype=float)
    v_lo, v_hi = value_dist.support
    if v_lo < 0:
        raise ValidationError("values must be nonnegative")
    p_lo, p_hi = fraction_dist.support
    if p_lo < 0 or p_hi > 1:
        raise ValidationError("bid fraction must be supported on [0, 1]")

    def scaled_cdf(dist, x, c):
        # P[c * X <= x] for c >= 0
        if c == 0:
            return np.where(x >= 0, 1.0, 0.0)
        return np.asarray(dist.cdf(x / c), dtype=float)

    if isinstance(fraction_dist, PointMass):
        return BidCdf(grid, scaled_cdf(value_dist, grid, fraction_dist.value))
    if isinstance(value_dist, PointMass):
        return BidCdf(grid, scaled_cdf(fraction_dist, grid, value_dist.value))
    if isinstance(fraction_dist, Categorical) and fraction_dist.numeric:
        acc = np.zeros_like(grid)
        for p, w in zip(fraction_dist.values, fraction_dist.probs):
            acc = acc + w * scaled_cdf(value_dist, grid, float(p))
        return BidCdf(grid, acc)
    if isinstance(value_dist, Categorical) and value_dist.numeric:
        acc = np.zeros_like(grid)
        for v, w in zip(value_dist.values, value_dist.probs):
            acc = acc + w * scaled_cdf(fraction_dist, grid, float(v))
        return BidCdf(grid, acc)

    extra = _h_points(value_dist)
    out = np.empty_like(grid)
    for i, x in enumerate(grid):
        if x <= 0:
            out[i] = 0.0 if x < 0 else float(value_dist.cdf(0.0))
            continue

        def integrand(v):
            if v <= 0:
                return float(value_dist.pdf(v))
            return float(value_dist.pdf(v)) * float(fraction_dist.cdf(x / v))

        pts = [p for p in [x, x / p_hi if p_hi > 0 else x] + extra if v_lo < p < v_hi]
        val, err = integrate.quad(integrand, v_lo, v_hi, points=pts or None, epsabs=1e-10, epsrel=1e-10,
                                  limit=200)
        if err > QUAD_TOL:
            raise QuadratureError(f"quadrature failure at bid {x}: residual {err:.3g}")
        out[i] = min(max(val, 0.0), 1.0)
    return BidCdf(grid, np.maximum.accumulate(out))


def _profit(F, x, v):
    return (v - x) * F(x)


def _golden_max(f: Callable, a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized golden-section search for the maximizer of ``f`` on each [a_i, b_i]."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while np.max(b - a) > tol:
        left = fc >= fd  # maximizer in [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - _INVPHI * (b - a), d)
        new_d = np.where(left, c, a + _INVPHI * (b - a))
        fc_new = np.where(left, np.nan, fd)
        fd_new = np.where(left, fc, np.nan)
        c, d = new_c, new_d
        need_c, need_d = np.isnan(fc_new), np.isnan(fd_new)
        if need_c.any():
            fc_new[need_c] = f(c)[need_c]
        if need_d.any():
            fd_new[need_d] = f(d)[need_d]
        fc, fd = fc_new, fd_new
    return (a + b) / 2.0


def best_response_map(F: BidCdf | Callable, values, grid=None, tol: float = BID_TOL,
                      chunk: int = 256) -> np.ndarray:
    """Optimal bid for each value in ``values`` against win probability ``F``.

    A value with no profitable grid bid maps to the lowest grid bid.
    """
    if grid is None:
        if not isinstance(F, BidCdf):
            raise ValidationError("a callable win-probability curve needs an explicit bid grid")
        grid = F.grid
    grid = np.asarray(grid, dtype=float)
    values = np.atleast_1d(np.asarray(values, dtype=float))
    f_grid = np.asarray(F(grid), dtype=float)
    out = np.empty_like(values)
    n = grid.size
    for start in range(0, values.size, chunk):
        v = values[start:start + chunk]
        profits = (v[:, None] - grid[None, :]) * f_grid[None, :]
        i = np.argmax(profits, axis=1)
        best = profits[np.arange(v.size), i]
        lo = grid[np.maximum(i - 1, 0)]
        hi = np.minimum(grid[np.minimum(i + 1, n - 1)], np.maximum(v, lo))
        hi = np.maximum(hi, lo)
        x = _golden_max(lambda z: _profit(F, z, v), lo, hi, tol)
        refined = _profit(F, x, v)
        bid = np.where(refined > best, x, grid[i])
        out[start:start + chunk] = np.where(best > 0, bid, grid[0])
    return out


@dataclass(frozen=True)
class BidResult:
    bid: float
    profit: float
    profitable: bool
    message: str = ""

    def to_dict(self) -> dict:
        return {"bid": self.bid, "expected_profit": self.profit, "profitable": self.profitable,
                "message": self.message}


def optimal_bid(x0: float, F: BidCdf | Callable, grid=None, tol: float = BID_TOL) -> BidResult:
    """argmax_x (x0 - x) F(x): grid search, then golden section inside the best cell.

    When no grid bid has positive expected profit the result is flagged
    ``no profitable bid`` and the bid is the lowest grid point.
    """
    if grid is None:
        if not isinstance(F, BidCdf):
            raise ValidationError("a callable win-probability curve needs an explicit bid grid")
        grid = F.grid
    grid = np.asarray(grid, dtype=float)
    if x0 < grid[0]:
        raise ValidationError("value lies below the bid grid")
    bid = float(best_response_map(F, [x0], grid, tol)[0])
    profit = float(_profit(F, bid, x0))
    if profit <= 0:
        return BidResult(float(grid[0]), float(_profit(F, grid[0], x0)), False, "no profitable bid")
    return BidResult(bid, profit, True)


def level1_best_response(F: BidCdf | Callable, value: float, grid=None, tol: float = BID_TOL) -> float:
    """Bid of a bidder with ``value`` who believes the opponent's bid has CDF ``F``."""
    return optimal_bid(value, F, grid, tol).bid


def _value_grid(dist: Distribution, n: int) -> np.ndarray:
    lo, hi = dist.support
    if isinstance(dist, PointMass) or lo == hi:
        return np.array([lo])
    if isinstance(dist, Categorical) and dist.numeric:
        return np.array(sorted(float(v) for v in dist.values))
    return np.linspace(lo, hi, n)


def pushforward_cdf(value_dist: Distribution, values: np.ndarray, bids: np.ndarray, grid) -> BidCdf:
    """CDF on ``grid`` of beta(V), V ~ ``value_dist``, for a bid map tabulated as ``bids`` at ``values``.

    The map is made nondecreasing and inverted by linear interpolation:
    P[beta(V) <= b] = H(sup {v : beta(v) <= b}).
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    beta = np.maximum.accumulate(np.asarray(bids, dtype=float))
    if isinstance(value_dist, Categorical) and value_dist.numeric:
        order = np.argsort(np.asarray(value_dist.values, dtype=float))
        w = np.asarray(value_dist.probs)[order]
        acc = np.zeros_like(grid)
        for k in range(values.size):
            acc = acc + w[k] * (grid >= beta[k])
        return BidCdf(grid, np.minimum(acc, 1.0))
    k = np.searchsorted(beta, grid, side="right")
    v_inv = np.empty_like(grid)
    below = k == 0
    above = k == values.size
    mid = ~below & ~above
    km = k[mid]
    span = beta[km] - beta[km - 1]
    frac = np.where(span > 0, (grid[mid] - beta[km - 1]) / np.where(span > 0, span, 1.0), 1.0)
    v_inv[mid] = values[km - 1] + frac * (values[km] - values[km - 1])
    v_inv[above] = values[-1]
    v_inv[below] = values[0]
    probs = np.asarray(value_dist.cdf(v_inv), dtype=float)
    probs = np.where(below, 0.0, probs)
    probs = np.where(above, 1.0, probs)
    return BidCdf(grid, probs)


@dataclass(frozen=True, eq=False)
class AuctionReport:
    """Level-2 analysis: his belief about my bid, his bid map, his bid distribution, my bid."""

    my_value: float
    belief_about_me: BidCdf
    values: np.ndarray
    bid_map: np.ndarray
    opponent_bids: BidCdf
    result: BidResult
    unit: str = "currency"
    diagnostics: dict = field(default_factory=dict)

    @property
    def chosen(self) -> float:
        return self.result.bid

    def to_dict(self) -> dict:
        return {
            "analysis": "level2",
            "unit": self.unit,
            "my_value": self.my_value,
            "chosen": self.result.bid,
            "expected_profit": self.result.profit,
            "profitable": self.result.profitable,
            "message": self.result.message,
            "diagnostics": dict(self.diagnostics),
        }


def level2_analysis(spec: AuctionSpec, opponent_belief: Callable | BidCdf | None = None,
                    tol: float = BID_TOL) -> AuctionReport:
    """I bid against an opponent who best-responds to a non-strategic model of me.

    (i) His belief about my bid comes from ``mirror_value`` and
    ``mirror_fraction`` via :func:`nonstrategic_bid_cdf`, unless
    ``opponent_belief`` supplies that curve directly.  (ii) His best bid is
    computed for every value on a grid over the support of
    ``opponent_value``.  (iii) Pushing ``opponent_value`` through that map
    gives his bid distribution.  (iv) My optimal bid against it.
    """
    bids = spec.bids
    if opponent_belief is not None:
        belief = opponent_belief if isinstance(opponent_belief, BidCdf) else BidCdf(
            bids, np.clip(np.asarray(opponent_belief(bids), dtype=float), 0.0, 1.0))
        source = "supplied"
    else:
        if spec.mirror_value is None or spec.mirror_fraction is None:
            raise ValidationError("level-2 analysis needs the mirrored value and fraction distributions")
        belief = nonstrategic_bid_cdf(spec.mirror_value, spec.mirror_fraction, bids)
        source = "nonstrategic"
    values = _value_grid(spec.opponent_value, spec.value_points)
    bid_map = best_response_map(belief, values, bids, tol)
    his_bids = pushforward_cdf(spec.opponent_value, values, bid_map, bids)
    result = optimal_bid(spec.my_value, his_bids, bids, tol)
    ratio = np.divide(bid_map, values, out=np.zeros_like(bid_map), where=values > 0)
    return AuctionReport(
        my_value=float(spec.my_value),
        belief_about_me=belief,
        values=values,
        bid_map=bid_map,
        opponent_bids=his_bids,
        result=result,
        unit=spec.unit,
        diagnostics={
            "belief_source": source,
            "bid_fraction_min": float(ratio.min()),
            "bid_fraction_max": float(ratio.max()),
            "opponent_bid_support": [float(bid_map.min()), float(bid_map.max())],
        },
    )


@dataclass(frozen=True, eq=False)
class MirrorResult:
    F_D: BidCdf
    F_A: BidCdf
    converged: bool
    iterations: int
    residuals: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"analysis": "mirror", "converged": self.converged, "iterations": self.iterations,
                "residuals": list(self.residuals)}


def mirror_equilibrium(my_value_dist: Distribution, opp_value_dist: Distribution, grid=(0.0, 1.0, 1001),
                       value_points: int = 1001, tol: float = MIRROR_TOL, max_iter: int = 100,
                       bid_tol: float = BID_TOL) -> MirrorResult:
    """Discretized best-response iteration for the two bid distributions.

    Both sides start from truthful bidding.  Each iteration first replaces
    my bid distribution by the pushforward of my values through my best
    response to his current bids, then does the same for him against my
    updated bids.  Stops when neither CDF moves by ``tol`` in sup norm.
    Failure to converge is reported, not raised.

    The iteration is only meaningful down to the discretization noise floor
    of about one value-grid cell of probability.  Below it, low-value
    bidders pooling on a small atom of bids can trigger an unraveling in
    which the atom roughly doubles at every half-step, so ``tol`` should
    stay well above ``1 / value_points``.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    bids = bid_grid(*grid)
    v_d = _value_grid(my_value_dist, value_points)
    v_a = _value_grid(opp_value_dist, value_points)
    F_D = pushforward_cdf(my_value_dist, v_d, v_d, bids)
    F_A = pushforward_cdf(opp_value_dist, v_a, v_a, bids)
    residuals = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new_D = pushforward_cdf(my_value_dist, v_d, best_response_map(F_A, v_d, bids, bid_tol), bids)
        new_A = pushforward_cdf(opp_value_dist, v_a, best_response_map(new_D, v_a, bids, bid_tol), bids)
        r = max(float(np.max(np.abs(new_D.probs - F_D.probs))), float(np.max(np.abs(new_A.probs - F_A.probs))))
        residuals.append(r)
        F_D, F_A = new_D, new_A
        if r < tol:
            converged = True
            break
    return MirrorResult(F_D, F_A, converged, it, tuple(residuals))
