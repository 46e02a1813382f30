"""Built-in game generators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teameq.core import ConstantPolicy, EvalConfig, ProductPolicy, evaluate, expected_team_reward
from teameq.games import (
    SadConfig,
    SkirmishConfig,
    anti_coordination,
    example1,
    grid_skirmish,
    random_team_game,
    sad,
)
from teameq.oracles import best_response_joint, best_response_shared, solve_matrix_maxmin


class TestExample1:
    def test_payoff_cells(self):
        g = example1()
        assert g.payoff[0, 0, 0, 0] == 1.0
        assert g.payoff[1, 1, 0, 0] == 2.0
        assert g.payoff[1, 1, 1, 1] == 1.0  # 1 + 3 - 3

    def test_maxmin_values(self):
        g = example1()
        sol = solve_matrix_maxmin(g.matrix(), tol=1e-9)
        assert sol.value == pytest.approx(1.25, abs=1e-9)
        # pure maxmin (no mixing) is only 1
        assert g.matrix().min(axis=1).max() == 1.0


class TestSad:
    def test_symmetric_seeks_zero(self):
        g = sad(SadConfig(2, 3))
        zeros = ProductPolicy.pure((0, 0), (6, 6))
        assert expected_team_reward(g, zeros, zeros) == 0.0

    def test_attack_vs_seek(self):
        # N=1, A=2, B=1: T1 attacks, T2 seeks 2 -> R1 = 1 - 2/2 = 0
        g = sad(SadConfig(1, 2, 1.0))
        attack = ProductPolicy.pure((3,), (5,))
        seek2 = ProductPolicy.pure((2,), (5,))
        assert expected_team_reward(g, attack, seek2) == 0.0

    def test_identical_joint_actions_zero(self):
        g = sad(SadConfig(2, 2))
        for joint in [(0, 1), (3, 3), (4, 2)]:
            p = ProductPolicy.pure(joint, (5, 5))
            assert expected_team_reward(g, p, p) == 0.0

    @given(
        n=st.integers(1, 2),
        amax=st.integers(0, 3),
        data=st.data(),
    )
    @settings(max_examples=40, deadline=None)
    def test_antisymmetry(self, n, amax, data):
        g = sad(SadConfig(n, amax))
        n_actions = amax + 3
        a = tuple(data.draw(st.integers(0, n_actions - 1)) for _ in range(n))
        b = tuple(data.draw(st.integers(0, n_actions - 1)) for _ in range(n))
        pa, pb = ProductPolicy.pure(a, (n_actions,) * n), ProductPolicy.pure(b, (n_actions,) * n)
        lhs = expected_team_reward(g, pa, pb)
        rhs = expected_team_reward(g, pb, pa)
        assert lhs == pytest.approx(-rhs, abs=1e-12)

    def test_enumeration_bound(self):
        with pytest.raises(ValueError):
            sad(SadConfig(2, 3), enumeration_bound=10)


class TestAntiCoordination:
    def test_cells(self):
        g = anti_coordination()
        assert expected_team_reward(g, ProductPolicy.pure((0, 1), (2, 2)), ProductPolicy.pure((0, 0), (2, 2))) == 1.0
        assert expected_team_reward(g, ProductPolicy.pure((0, 0), (2, 2)), ProductPolicy.pure((0, 0), (2, 2))) == 0.0
        assert expected_team_reward(g, ProductPolicy.pure((1, 0), (2, 2)), ProductPolicy.pure((0, 1), (2, 2))) == 0.0

    def test_class_separation_vs_homogeneous_opponent(self):
        # joint coordination reaches 1; independent shared play caps at 0.5
        g = anti_coordination()
        zeros = ProductPolicy.pure((0, 0), (2, 2))
        _, joint_value = best_response_joint(g, zeros, 1)
        assert joint_value == pytest.approx(1.0, abs=1e-12)
        _, shared_value = best_response_shared(g, zeros, 1)
        assert shared_value == pytest.approx(0.5, abs=1e-9)


class TestGridSkirmish:
    def test_stand_apart_and_stay(self):
        g = grid_skirmish(SkirmishConfig(3, 3, 2, horizon=5))
        stay = ProductPolicy([ConstantPolicy(6, 4)] * 2)
        assert expected_team_reward(g, stay, stay) == 0.0

    def test_adjacent_attack(self):
        g = grid_skirmish(SkirmishConfig(2, 1, 1, horizon=1, damage=1.0))
        attack = ProductPolicy([ConstantPolicy(6, 5)])
        stay = ProductPolicy([ConstantPolicy(6, 4)])
        assert expected_team_reward(g, attack, stay) == 1.0

    def test_mirrored_policies_cancel(self):
        g = grid_skirmish(SkirmishConfig(3, 3, 2, horizon=4))
        for action in (4, 5):
            p = ProductPolicy([ConstantPolicy(6, action)] * 2)
            assert expected_team_reward(g, p, p) == 0.0

    def test_deterministic_transitions(self):
        from teameq.core import rollout

        g = grid_skirmish(SkirmishConfig(3, 3, 2, horizon=4))
        p1 = ProductPolicy([ConstantPolicy(6, 3), ConstantPolicy(6, 1)])
        p2 = ProductPolicy([ConstantPolicy(6, 0), ConstantPolicy(6, 2)])
        r1 = rollout(g, p1, p2, np.random.default_rng(7))
        r2 = rollout(g, p1, p2, np.random.default_rng(7))
        assert r1 == r2

    def test_collisions_block_swaps(self):
        # two agents moving through each other stay in place
        g = grid_skirmish(SkirmishConfig(2, 1, 1, horizon=1))
        state = (0, (0, 1))
        ((nxt, prob),) = g.transition(state, ((3,), (2,)))  # right vs left
        assert nxt == (1, (0, 1)) and prob == 1.0

    def test_grid_too_small(self):
        with pytest.raises(ValueError):
            SkirmishConfig(1, 1, 2, horizon=1)


class TestRandomTeamGame:
    def test_seed_reproducibility(self):
        g1 = random_team_game((2, 2), ((2, 2), (2, 2)), seed=5)
        g2 = random_team_game((2, 2), ((2, 2), (2, 2)), seed=5)
        assert np.array_equal(g1.payoff, g2.payoff)

    def test_degenerate_range(self):
        g = random_team_game((2, 2), ((2, 2), (2, 2)), payoff_range=(0.0, 0.0), seed=1)
        assert np.all(g.payoff == 0.0)

    def test_shape(self):
        g = random_team_game((2, 2), ((2, 2), (2, 2)), seed=2)
        assert g.payoff.size == 16
