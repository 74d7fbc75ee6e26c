import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ara_engine.auction import (
    AuctionSpec,
    BidCdf,
    best_response_map,
    bid_grid,
    level1_best_response,
    level2_analysis,
    mirror_equilibrium,
    nonstrategic_bid_cdf,
    optimal_bid,
    pushforward_cdf,
)
from ara_engine.core_model.distributions import Beta, PointMass, Power, Triangular, Uniform
from ara_engine.errors import ValidationError


def tri_cdf(lo, mode, hi):
    """Triangular CDF from scipy, independent of the package's own Triangular."""
    return stats.triang((mode - lo) / (hi - lo), loc=lo, scale=hi - lo).cdf


def power_belief(k=9, top=200.0):
    return lambda a: np.clip(np.asarray(a, dtype=float) / top, 0.0, 1.0) ** k


def house_spec(**kw):
    base = dict(my_value=175.0, opponent_value=Triangular(140, 170, 200), grid=(0.0, 200.0, 2001),
                mirror_value=Uniform(100, 200), mirror_fraction=Power(9))
    base.update(kw)
    return AuctionSpec(**base)


class TestNonstrategicBidCdf:
    def test_ninety_percent_of_triangular(self):
        grid = np.linspace(100, 200, 10_000)
        F = nonstrategic_bid_cdf(Triangular(140, 170, 200), PointMass(0.9), grid)
        assert F.sup_distance(tri_cdf(126, 153, 180)) <= 1e-6

    def test_full_fraction_is_identity(self):
        grid = np.linspace(100, 220, 2000)
        F = nonstrategic_bid_cdf(Triangular(140, 170, 200), PointMass(1.0), grid)
        np.testing.assert_array_equal(F.probs, Triangular(140, 170, 200).cdf(grid))

    def test_power_uniform_monte_carlo(self):
        grid = np.linspace(0, 200, 801)
        F = nonstrategic_bid_cdf(Uniform(100, 200), Power(9), grid)
        rng = np.random.default_rng(2024)
        n = 1_000_000
        x = np.sort(rng.random(n) ** (1 / 9) * rng.uniform(100, 200, n))
        mc = np.searchsorted(x, grid, side="right") / n
        assert np.max(np.abs(F.probs - mc)) <= 0.003

    @pytest.mark.parametrize("value,fraction", [(Uniform(10, 20), Beta(2, 5)), (Triangular(0, 3, 4), Power(2)),
                                                (Uniform(1, 2), Uniform(0.2, 0.9))])
    def test_dkw_band(self, value, fraction):
        n = 100_000
        rng = np.random.default_rng(7)
        x = np.sort(fraction.sample(rng, n) * value.sample(rng, n))
        grid = np.linspace(0, value.support[1], 400)
        F = nonstrategic_bid_cdf(value, fraction, grid)
        eps = np.sqrt(np.log(2 / 1e-4) / (2 * n))
        assert np.max(np.abs(F.probs - np.searchsorted(x, grid, side="right") / n)) <= eps


class TestOptimalBid:
    def test_uniform_quadratic(self):
        r = optimal_bid(1.0, BidCdf.from_function(lambda x: x, 0.0, 1.0, 1001))
        assert abs(r.bid - 0.5) < 1e-4 and abs(r.profit - 0.25) < 1e-8 and r.profitable

    def test_step_cdf(self):
        grid = np.linspace(0, 1, 1001)
        F = BidCdf(grid, (grid >= 0.3).astype(float))
        r = optimal_bid(0.8, F)
        assert 0.3 - 1e-3 <= r.bid <= 0.3 + 1e-3
        assert abs(r.profit - 0.5) < 2e-3

    def test_no_profitable_bid(self):
        grid = np.linspace(0, 1, 1001)
        F = BidCdf(grid, (grid >= 0.9).astype(float))
        r = optimal_bid(0.5, F)
        assert not r.profitable and r.bid == 0.0 and r.message == "no profitable bid"

    def test_triangular_against_brute_force(self):
        F = tri_cdf(126, 153, 180)
        xs = np.linspace(0, 175, 100_000)
        oracle = xs[np.argmax((175 - xs) * F(xs))]
        r = optimal_bid(175.0, F, bid_grid(0, 200, 2001))
        assert abs(r.bid - oracle) <= 0.1
        print(f"x* = {r.bid:.4f}, brute force {oracle:.4f}, reported 161.67, deviation {r.bid - 161.67:+.4f}")

    @settings(max_examples=40, deadline=None)
    @given(a=st.floats(0.5, 5), b=st.floats(0.5, 5), x0=st.floats(0.05, 1.5))
    def test_never_bids_above_value(self, a, b, x0):
        F = BidCdf.from_function(stats.beta(a, b).cdf, 0.0, 1.0, 501)
        r = optimal_bid(x0, F)
        if r.profitable:
            assert r.bid <= x0


class TestLevel1:
    def test_ninety_percent(self):
        grid = bid_grid(0, 200, 2001)
        for a0 in range(140, 201):
            a = level1_best_response(power_belief(), float(a0), grid)
            assert abs(a / (0.9 * a0) - 1) <= 1e-3

    def test_boundary_value(self):
        assert abs(level1_best_response(power_belief(), 200.0, bid_grid(0, 200, 2001)) - 180.0) < 1e-3

    @pytest.mark.parametrize("k", range(1, 13))
    def test_power_ratio(self, k):
        a = level1_best_response(power_belief(k), 200.0, bid_grid(0, 200, 2001))
        assert abs(a / 200.0 - k / (k + 1)) <= 1e-3

    @pytest.mark.parametrize("x0", [0.5, 0.8, 1.0])
    def test_first_order_residual(self, x0):
        dist = stats.beta(2, 3)
        a = level1_best_response(dist.cdf, x0, np.linspace(0, 1, 1001))
        h = 1e-6
        g = lambda x: (x0 - x) * dist.cdf(x)
        assert abs((g(a + h) - g(a - h)) / (2 * h)) < 1e-4 * x0


class TestLevel2:
    def test_power_belief_gives_triangular_bids(self):
        rep = level2_analysis(house_spec(), power_belief())
        assert rep.diagnostics["belief_source"] == "supplied"
        assert rep.opponent_bids.sup_distance(tri_cdf(126, 153, 180)) <= 0.01

    def test_nonstrategic_route_uses_mirrored_specs(self):
        spec = house_spec()
        rep = level2_analysis(spec)
        ref = nonstrategic_bid_cdf(spec.mirror_value, spec.mirror_fraction, spec.bids)
        np.testing.assert_array_equal(rep.belief_about_me.probs, ref.probs)
        dist = rep.opponent_bids.sup_distance(tri_cdf(126, 153, 180))
        print(f"mirrored-spec route: his bid fractions {rep.diagnostics['bid_fraction_min']:.3f}"
              f"..{rep.diagnostics['bid_fraction_max']:.3f}, sup distance to Tri(126,153,180) {dist:.4f}")

    def test_point_mass_value(self):
        spec = house_spec(opponent_value=PointMass(170.0))
        rep = level2_analysis(spec, power_belief())
        b = level1_best_response(rep.belief_about_me, 170.0, spec.bids)
        assert rep.bid_map.shape == (1,) and rep.bid_map[0] == b
        grid = rep.opponent_bids.grid
        np.testing.assert_array_equal(rep.opponent_bids.probs, (grid >= b).astype(float))

    def test_pushforward_monte_carlo(self):
        spec = house_spec()
        rep = level2_analysis(spec)
        rng = np.random.default_rng(99)
        v = stats.triang(0.5, loc=140, scale=60).rvs(1_000_000, random_state=rng)
        bids = np.sort(np.interp(v, rep.values, rep.bid_map))
        grid = spec.bids
        mc = np.searchsorted(bids, grid, side="right") / bids.size
        assert np.max(np.abs(rep.opponent_bids(grid) - mc)) <= 0.005

    def test_optimal_bid_against_opponent_bids(self):
        rep = level2_analysis(house_spec(), power_belief())
        xs = np.linspace(0, 175, 100_000)
        oracle = xs[np.argmax((175 - xs) * rep.opponent_bids(xs))]
        assert abs(rep.chosen - oracle) <= 0.1
        assert rep.to_dict()["chosen"] == rep.chosen

    def test_needs_mirror_specs(self):
        with pytest.raises(ValidationError):
            level2_analysis(house_spec(mirror_value=None))


class TestPushforward:
    def test_identity_map(self):
        values = np.linspace(0, 1, 501)
        grid = np.linspace(0, 1, 301)
        F = pushforward_cdf(Uniform(0, 1), values, values, grid)
        np.testing.assert_allclose(F.probs, grid, atol=1e-12)

    def test_flat_map_is_atom(self):
        values = np.linspace(0, 1, 101)
        grid = np.linspace(0, 1, 101)
        F = pushforward_cdf(Uniform(0, 1), values, np.full(101, 0.4), grid)
        assert np.all(F.probs[grid < 0.4] == 0) and np.all(F.probs[grid >= 0.4] == 1)


class TestMirror:
    def test_symmetric_uniform(self):
        r = mirror_equilibrium(Uniform(0, 1), Uniform(0, 1))
        assert r.converged
        half = lambda x: np.clip(2 * np.asarray(x), 0, 1)
        assert r.F_D.sup_distance(half) <= 0.02 and r.F_A.sup_distance(half) <= 0.02

    @pytest.mark.parametrize("a,b", [(0.6, 0.8), (0.5, 0.5)])
    def test_point_masses(self, a, b):
        r = mirror_equilibrium(PointMass(a), PointMass(b))
        assert r.converged and r.iterations == 2 and r.residuals[1] == 0.0

    def test_asymmetric_diagnostics(self):
        r = mirror_equilibrium(Uniform(0, 1), Uniform(0, 2), grid=(0.0, 2.0, 1001), max_iter=3)
        d = r.to_dict()
        assert d["iterations"] == len(d["residuals"]) == 3
        assert d["converged"] is False
        assert all(np.isfinite(d["residuals"]))

    def test_bad_tol(self):
        with pytest.raises(ValidationError):
            mirror_equilibrium(Uniform(0, 1), Uniform(0, 1), tol=0.0)


class TestBidCdfInvariants:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=40))
    def test_monotone_range(self, raw):
        p = np.sort(np.array(raw))
        F = BidCdf(np.arange(p.size, dtype=float), p)
        x = np.linspace(-1, p.size, 200)
        y = F(x)
        assert np.all(np.diff(y) >= 0) and y.min() >= 0 and y.max() <= 1

    def test_rejects_decreasing(self):
        with pytest.raises(ValidationError):
            BidCdf(np.array([0.0, 1.0]), np.array([0.5, 0.2]))

    def test_best_response_map_monotone(self):
        F = BidCdf.from_function(tri_cdf(126, 153, 180), 0, 200, 2001)
        bids = best_response_map(F, np.linspace(130, 200, 50))
        assert np.all(np.diff(bids) >= -1e-3)

    def test_small_grid_rejected(self):
        with pytest.raises(ValidationError, match="at least"):
            bid_grid(0, 1, 10)
