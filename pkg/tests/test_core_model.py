import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from ara_engine.core_model.distributions import (
    Beta,
    Categorical,
    Dirichlet,
    PointMass,
    Power,
    Triangular,
    Uniform,
    from_dict,
)
from ara_engine.core_model.games import (
    Agent,
    DiscreteGame,
    PrivateInfoGame,
    Structure,
    TypeSpace,
    expected_utility,
)
from ara_engine.errors import UnknownActionError, ValidationError

from conftest import labels, psi_loop, random_game, random_prob


class TestDistributions:
    def test_triangular_cdf_at_mode(self):
        assert Triangular(126, 153, 180).cdf(153) == pytest.approx(0.5, abs=1e-15)

    def test_power_cdf(self):
        assert Power(9).cdf(0.5) == pytest.approx(0.5 ** 9, rel=1e-14)

    def test_beta_cdf_matches_quadrature(self):
        pdf = lambda x: 6.0 * x * (1.0 - x)  # noqa: E731  Beta(2,2) density
        expected, _ = integrate.quad(pdf, 0.0, 0.3, epsabs=1e-13)
        assert Beta(2, 2).cdf(0.3) == pytest.approx(expected, abs=1e-8)

    def test_point_mass_samples(self, rng):
        s = PointMass(0.9).sample(rng, 100)
        assert np.all(s == 0.9)

    def test_uniform_mean(self, rng):
        s = Uniform(100, 200).sample(rng, 100_000)
        assert abs(s.mean() - 150.0) < 1.0

    def test_categorical_frequencies(self, rng):
        n = 100_000
        s = Categorical(("a1", "a2"), (0.25, 0.75)).sample(rng, n)
        for v, p in (("a1", 0.25), ("a2", 0.75)):
            freq = np.mean(s == v)
            assert abs(freq - p) < 3 * np.sqrt(p * (1 - p) / n)

    @pytest.mark.parametrize("dist", [
        Uniform(-1, 3), Triangular(126, 153, 180), Triangular(0, 0, 1), Beta(2, 5), Beta(0.5, 0.5), Power(9),
        Power(1.5),
    ], ids=repr)
    def test_ks_against_cdf(self, dist, rng):
        x = dist.sample(rng, 10_000)
        res = stats.kstest(x, lambda t: dist.cdf(t))
        assert res.statistic < 0.02

    def test_categorical_ks(self, rng):
        dist = Categorical((1.0, 2.0, 5.0), (0.2, 0.3, 0.5))
        x = dist.sample(rng, 10_000)
        grid = np.array([0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 6.0])
        emp = np.array([(x <= g).mean() for g in grid])
        assert np.max(np.abs(emp - dist.cdf(grid))) < 0.02

    def test_dirichlet_has_no_cdf(self):
        with pytest.raises(TypeError):
            Dirichlet((1, 1)).cdf(0.5)

    def test_dirichlet_marginal_mean(self, rng):
        d = Dirichlet((1.0, 2.0, 3.0))
        x = d.sample(rng, 20_000)
        np.testing.assert_allclose(x.sum(axis=-1), 1.0, atol=1e-12)
        np.testing.assert_allclose(x.mean(axis=0), [1 / 6, 2 / 6, 3 / 6], atol=0.01)

    @pytest.mark.parametrize("obj", [
        {"family": "uniform", "lo": 2, "hi": 1},
        {"family": "triangular", "lo": 0, "mode": 2, "hi": 1},
        {"family": "beta", "alpha": 0, "beta": 1},
        {"family": "categorical", "values": [1, 2], "probs": [0.5, 0.6]},
        {"family": "nope"},
        {"kind": "uniform"},
    ])
    def test_invalid_parameters(self, obj):
        with pytest.raises(ValidationError):
            from_dict(obj)

    def test_round_trip(self):
        for d in (Uniform(0, 2), Triangular(1, 2, 4), Beta(2, 3), Power(3), PointMass(4.0)):
            assert from_dict(d.to_dict()) == d
        assert from_dict(2.5) == PointMass(2.5)


class TestExpectedUtility:
    def _game(self, util, prob):
        util = np.asarray(util, dtype=float)
        nd, na, ns = util.shape
        return DiscreteGame(labels("d", nd), labels("a", na), labels("s", ns), prob, util)

    def test_single_outcome(self):
        g = self._game([[[5.0]]], [[[1.0]]])
        assert expected_utility(g, "D", "d0", "a0") == 5.0

    def test_two_outcomes(self):
        g = self._game([[[0.0, 10.0]]], [[[0.5, 0.5]]])
        assert expected_utility(g, Agent.D, 0, 0) == 5.0

    def test_random_tables_match_summation(self, rng):
        g = random_game(rng, 4, 5, 3)
        ref = psi_loop(g.util_d, g.prob_d)
        np.testing.assert_allclose(g.psi("D"), ref, rtol=0, atol=1e-12)
        for d in range(4):
            for a in range(5):
                assert abs(expected_utility(g, "D", d, a) - ref[d, a]) < 1e-12

    def test_unknown_action(self, rng):
        g = random_game(rng)
        with pytest.raises(UnknownActionError, match="unknown action"):
            expected_utility(g, "D", "zz", "a0")
        with pytest.raises(UnknownActionError):
            g.a_index(7)

    def test_rows_must_normalize(self):
        with pytest.raises(ValidationError, match="sums to"):
            self._game([[[0.0, 1.0]]], [[[0.5, 0.6]]])

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.01, 100), b=st.floats(-50, 50))
    def test_scaling_and_affine_argmax(self, seed, c, b):
        rng = np.random.default_rng(seed)
        g = random_game(rng, 3, 4, 3)
        psi = g.psi("D")
        scaled = DiscreteGame(g.defender_actions, g.attacker_actions, g.outcomes, g.prob_d, c * g.util_d)
        np.testing.assert_allclose(scaled.psi("D"), c * psi, rtol=1e-12, atol=1e-12)
        shifted = DiscreteGame(g.defender_actions, g.attacker_actions, g.outcomes, g.prob_d, c * g.util_d + b)
        assert np.argmax(shifted.psi("D")) == np.argmax(psi)

    def test_scaling_by_power_of_two_is_exact(self, rng):
        g = random_game(rng, 3, 3, 4)
        doubled = DiscreteGame(g.defender_actions, g.attacker_actions, g.outcomes, g.prob_d, 2.0 * g.util_d)
        np.testing.assert_array_equal(doubled.psi("D"), 2.0 * g.psi("D"))


class TestNormalizationPaths:
    def test_restrict_keeps_rows(self, rng):
        g = random_game(rng, 4, 4, 3).restrict([0, 2], [1, 3])
        np.testing.assert_allclose(g.prob_d.sum(axis=-1), 1.0, atol=1e-12)
        assert g.defender_actions == ("d0", "d2")

    def test_type_override(self, rng):
        g = random_game(rng, 2, 2, 3)
        ts = TypeSpace(("t0", "t1"), [0.5, 0.5], rng.normal(size=(2, 2, 2, 3)), random_prob(rng, (2, 2, 2, 3)))
        for t in range(2):
            tg = ts.type_game(g, t)
            np.testing.assert_allclose(tg.prob_a.sum(axis=-1), 1.0, atol=1e-12)
            np.testing.assert_array_equal(tg.util_a, ts.util[t])

    def test_private_info_slice(self, rng):
        shape = (2, 2, 3)
        prob = np.stack([random_prob(rng, shape) for _ in range(2)], axis=-1)
        util = rng.normal(size=shape + (2,))
        g = PrivateInfoGame.from_tables(labels("d", 2), labels("a", 2), labels("s", 3), ("v0", "v1"),
                                        [0.3, 0.7], prob, util)
        for v in range(2):
            sl = g.slice(v)
            np.testing.assert_allclose(sl.prob_d.sum(axis=-1), 1.0, atol=1e-12)
            np.testing.assert_array_equal(sl.util_d, util[..., v])

    def test_structure_values(self):
        assert {s.value for s in Structure} == {
            "simultaneous", "sequential_da", "sequential_ad", "sequential_da_private_info", "defend_attack_defend"}
