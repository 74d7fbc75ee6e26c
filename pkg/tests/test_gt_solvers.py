import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ara_engine.core_model.games import Agent, DiscreteGame, Structure, TypeSpace
from ara_engine.errors import CKDataRequiredError, InstanceTooLargeError
from ara_engine.gt_solvers import bne_sequential, bne_simultaneous, pure_nash, stackelberg_solve

from conftest import labels, psi_loop, random_game, random_prob


def _one_outcome(ud, ua, structure=Structure.SIMULTANEOUS):
    ud = np.asarray(ud, dtype=float)[..., None]
    ua = np.asarray(ua, dtype=float)[..., None]
    nd, na, _ = ud.shape
    ones = np.ones_like(ud)
    return DiscreteGame(labels("d", nd), labels("a", na), ("s",), ones, ud, ones, ua, structure)


def nash_oracle(psi_d, psi_a):
    out = []
    nd, na = psi_d.shape
    for d in range(nd):
        for a in range(na):
            if all(psi_d[d, a] >= psi_d[e, a] for e in range(nd)) and \
                    all(psi_a[d, a] >= psi_a[d, b] for b in range(na)):
                out.append((d, a))
    return out


class TestPureNash:
    def test_prisoners_dilemma(self):
        # rows/cols: cooperate, defect
        g = _one_outcome([[-1, -3], [0, -2]], [[-1, 0], [-3, -2]])
        eq = pure_nash(g)
        assert eq.indices == ((1, 1),)

    def test_matching_pennies(self):
        g = _one_outcome([[1, -1], [-1, 1]], [[-1, 1], [1, -1]])
        assert pure_nash(g).empty

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_random_4x4_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        g = random_game(rng, 4, 4, 1)
        # integer payoffs make ties likely
        g = _one_outcome(rng.integers(0, 3, (4, 4)), rng.integers(0, 3, (4, 4)))
        got = pure_nash(g)
        assert list(got.indices) == nash_oracle(psi_loop(g.util_d, g.prob_d), psi_loop(g.util_a, g.prob_a))

    def test_needs_attacker_tables(self, rng):
        with pytest.raises(CKDataRequiredError, match="CK data required"):
            pure_nash(random_game(rng, attacker=False))


class TestStackelberg:
    def test_constructed_tie(self):
        # d1 makes every attack equally bad for A and good for D
        g = _one_outcome([[0, 1], [3, 3]], [[1, 2], [0, 0]])
        sol = stackelberg_solve(g)
        assert sol.d_star == "d1"
        assert sol.response["d1"] == "a0"

    def test_indifferent_attacker(self, rng):
        g = _one_outcome(rng.normal(size=(3, 4)), np.full((3, 4), 2.0))
        sol = stackelberg_solve(g)
        assert set(sol.response.values()) == {"a0"}

    def test_2x2_enumeration(self):
        ud = np.array([[2.0, 4.0], [1.0, 3.0]])
        ua = np.array([[1.0, 0.0], [0.0, 2.0]])
        g = _one_outcome(ud, ua)
        # enumerate every (d, reply) pair consistent with the attacker's best reply
        best = None
        for d in range(2):
            a = max(range(2), key=lambda b: (ua[d, b], -b))
            if best is None or ud[d, a] > best[0]:
                best = (ud[d, a], d, a)
        sol = stackelberg_solve(g)
        assert (sol.d_star, sol.a_star, sol.value) == (f"d{best[1]}", f"a{best[2]}", best[0])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.1, 10), b=st.floats(-10, 10))
    def test_affine_invariance(self, seed, c, b):
        rng = np.random.default_rng(seed)
        g = random_game(rng, 4, 3, 2)
        h = DiscreteGame(g.defender_actions, g.attacker_actions, g.outcomes, g.prob_d, c * g.util_d + b,
                         g.prob_a, g.util_a)
        assert stackelberg_solve(h).d_star == stackelberg_solve(g).d_star


def _types(rng, g, n, prior=None, agent=Agent.A):
    shape = (n,) + g.shape
    prior = np.full(n, 1.0 / n) if prior is None else prior
    return TypeSpace(labels("t", n), prior, rng.normal(size=shape), random_prob(rng, shape), agent)


def bne_sequential_oracle(g, ts):
    psi_d = psi_loop(g.util_d, g.prob_d)
    vals = []
    for d in range(g.shape[0]):
        v = 0.0
        for t in range(ts.n_types):
            psi_t = psi_loop(ts.util[t], ts.prob[t])
            a = int(np.argmax(psi_t[d]))
            v += ts.prior[t] * psi_d[d, a]
        vals.append(v)
    return int(np.argmax(vals)), vals


class TestBneSequential:
    def test_single_type_is_stackelberg(self, rng):
        for _ in range(20):
            g = random_game(rng, 3, 3, 2, Structure.SEQUENTIAL_DA)
            ts = TypeSpace(("t0",), [1.0], g.util_a[None], g.prob_a[None])
            assert bne_sequential(g, ts).d_star == stackelberg_solve(g).d_star

    def test_point_mass_prior(self, rng):
        g = random_game(rng, 3, 3, 2)
        ts = _types(rng, g, 2, np.array([1.0, 0.0]))
        single = TypeSpace(("t0",), [1.0], ts.util[:1], ts.prob[:1])
        assert bne_sequential(g, ts).d_star == bne_sequential(g, single).d_star

    def test_three_types_oracle(self, rng):
        for _ in range(30):
            g = random_game(rng, 3, 3, 2)
            ts = _types(rng, g, 3, rng.dirichlet([1, 1, 1]))
            d, vals = bne_sequential_oracle(g, ts)
            sol = bne_sequential(g, ts)
            assert sol.d_star == f"d{d}"
            np.testing.assert_allclose([sol.values[f"d{i}"] for i in range(3)], vals, atol=1e-12)

    def test_identical_copies(self, rng):
        g = random_game(rng, 4, 3, 2)
        copies = TypeSpace(labels("t", 3), [1 / 3] * 3, np.repeat(g.util_a[None], 3, 0),
                           np.repeat(g.prob_a[None], 3, 0))
        single = TypeSpace(("t0",), [1.0], g.util_a[None], g.prob_a[None])
        assert bne_sequential(g, copies).d_star == bne_sequential(g, single).d_star


def bne_check(g, td, ta, prof):
    """Independent inequality check of one strategy profile (common product prior)."""
    joint = np.outer(td.prior, ta.prior)
    ds = [g.d_index(prof.defender[l]) for l in td.labels]
    as_ = [g.a_index(prof.attacker[l]) for l in ta.labels]
    for s in range(td.n_types):
        psi = psi_loop(td.util[s], td.prob[s])
        vals = [sum(joint[s, t] * psi[d, as_[t]] for t in range(ta.n_types)) for d in range(g.shape[0])]
        if vals[ds[s]] < max(vals) - 1e-12:
            return False
    for t in range(ta.n_types):
        psi = psi_loop(ta.util[t], ta.prob[t])
        vals = [sum(joint[s, t] * psi[ds[s], a] for s in range(td.n_types)) for a in range(g.shape[1])]
        if vals[as_[t]] < max(vals) - 1e-12:
            return False
    return True


class TestBneSimultaneous:
    def test_single_types_reduce_to_nash(self, rng):
        for _ in range(30):
            g = _one_outcome(rng.integers(0, 3, (3, 3)), rng.integers(0, 3, (3, 3)))
            profiles = bne_simultaneous(g)
            pairs = [(g.d_index(p.defender["t0"]), g.a_index(p.attacker["t0"])) for p in profiles]
            assert pairs == list(pure_nash(g).indices)

    def test_dominant_actions_unique(self):
        g = _one_outcome(np.zeros((2, 2)), np.zeros((2, 2)))
        # type t0 prefers a0 whatever d, type t1 prefers a1; defender prefers d1 against both
        ua = np.zeros((2, 2, 2, 1))
        ua[0, :, 0, 0] = 1.0
        ua[1, :, 1, 0] = 1.0
        ta = TypeSpace(("t0", "t1"), [0.5, 0.5], ua, np.ones_like(ua))
        ud = np.zeros((1, 2, 2, 1))
        ud[0, 1, :, 0] = 1.0
        td = TypeSpace(("u0",), [1.0], ud, np.ones_like(ud), Agent.D)
        profiles = bne_simultaneous(g, ta, td)
        assert len(profiles) == 1
        assert profiles[0].attacker == {"t0": "a0", "t1": "a1"}
        assert profiles[0].defender == {"u0": "d1"}

    def test_random_two_type_games_pass_recheck(self, rng):
        for _ in range(40):
            g = random_game(rng, 2, 2, 2)
            ta = _types(rng, g, 2, rng.dirichlet([1, 1]))
            td = _types(rng, g, 2, rng.dirichlet([1, 1]), Agent.D)
            profiles = bne_simultaneous(g, ta, td)
            found = {(tuple(p.defender.values()), tuple(p.attacker.values())) for p in profiles}
            # brute force over all strategy pairs
            for dd in itertools.product(g.defender_actions, repeat=2):
                for aa in itertools.product(g.attacker_actions, repeat=2):
                    from ara_engine.gt_solvers import BneStrategyProfile
                    prof = BneStrategyProfile(dict(zip(td.labels, dd)), dict(zip(ta.labels, aa)), {}, {})
                    assert bne_check(g, td, ta, prof) == ((dd, aa) in found)

    def test_cap(self, rng):
        g = random_game(rng, 4, 4, 1)
        ta = _types(rng, g, 4)
        with pytest.raises(InstanceTooLargeError, match="too large"):
            bne_simultaneous(g, ta, cap=100)
