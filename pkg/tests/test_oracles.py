"""Maxmin solver and best-response oracle tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import lp_maxmin
from teameq.core import (
    ConstantPolicy,
    EvalConfig,
    HashPolicy,
    IndividualPolicy,
    ProductPolicy,
    SharedPolicy,
    expected_team_reward,
    team_value,
)
from teameq.games import (
    SkirmishConfig,
    anti_coordination,
    example1,
    grid_skirmish,
    random_stochastic_game,
    random_team_game,
)
from teameq.oracles import (
    CommChannel,
    MaxminConvergenceError,
    advantage_decompose,
    best_response_individual,
    best_response_joint,
    best_response_shared,
    sebr,
    shared_maxmin_grid,
    solve_matrix_maxmin,
)


def pure(actions, counts=(2, 2)):
    return ProductPolicy.pure(actions, counts)


class TestSolveMatrixMaxmin:
    def test_example1_matrix(self):
        g = example1()
        sol = solve_matrix_maxmin(g.matrix(), tol=1e-9)
        lp_val, _ = lp_maxmin(g.matrix())
        assert sol.value == pytest.approx(lp_val, abs=1e-9)
        assert np.allclose(sol.row_mix, [0.75, 0.0, 0.0, 0.25], atol=1e-9)
        assert sol.gap <= 1e-9

    def test_single_cell(self):
        sol = solve_matrix_maxmin([[3.5]], tol=1e-12)
        assert sol.value == 3.5 and sol.gap == 0.0

    def test_matching_pennies(self):
        sol = solve_matrix_maxmin([[1.0, -1.0], [-1.0, 1.0]], tol=1e-9)
        assert sol.value == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(sol.row_mix, [0.5, 0.5], atol=1e-9)
        assert np.allclose(sol.col_mix, [0.5, 0.5], atol=1e-9)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            solve_matrix_maxmin([[np.nan, 0.0]])

    def test_duality_certificate_small(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            mat = rng.uniform(-2, 2, size=(rng.integers(1, 6), rng.integers(1, 6)))
            sol = solve_matrix_maxmin(mat, tol=1e-8)
            value = sol.row_mix @ mat @ sol.col_mix
            assert (mat @ sol.col_mix).max() - value <= 1e-8
            assert value - (sol.row_mix @ mat).min() <= 1e-8

    def test_duality_certificate_selfplay_path(self):
        # both sides above the support-enumeration cutoff
        rng = np.random.default_rng(1)
        for seed in range(5):
            mat = np.random.default_rng(seed).uniform(-1, 1, size=(9, 9))
            sol = solve_matrix_maxmin(mat, tol=1e-7)
            lp_val, _ = lp_maxmin(mat)
            assert sol.gap <= 1e-7
            assert sol.value == pytest.approx(lp_val, abs=1e-6)

    def test_iteration_cap_reports_best(self):
        mat = np.random.default_rng(2).uniform(-1, 1, size=(10, 10))
        with pytest.raises(MaxminConvergenceError) as exc:
            solve_matrix_maxmin(mat, tol=1e-13, max_iterations=30)
        assert exc.value.best is not None
        assert exc.value.best.gap >= 0.0

    def test_deterministic(self):
        mat = np.random.default_rng(3).uniform(-1, 1, size=(8, 8))
        a = solve_matrix_maxmin(mat, tol=1e-7)
        b = solve_matrix_maxmin(mat, tol=1e-7)
        assert np.array_equal(a.row_mix, b.row_mix) and a.value == b.value


class TestBestResponseJoint:
    def test_example1_vs_zeros(self):
        g = example1()
        br, value = best_response_joint(g, pure((0, 0)), 1)
        assert br.atoms == ((1, 1),) and value == 2.0

    def test_example1_vs_01(self):
        g = example1()
        br, value = best_response_joint(g, pure((0, 1)), 1)
        assert br.atoms == ((0, 0),) and value == 2.0

    def test_lexicographic_tie_break(self):
        g = anti_coordination()
        br, value = best_response_joint(g, pure((0, 0)), 1)
        assert br.atoms == ((0, 1),) and value == 1.0  # ties with (1, 0)


class TestBestResponseIndividual:
    def test_stuck_at_zeros(self):
        # unilateral moves from (0,0) lose: -1 and 0 against value 1
        g = example1()
        result = best_response_individual(g, pure((0, 0)), 1, pure((0, 0)))
        assert result.pure_joint_action([0, 0]) == (0, 0)
        assert expected_team_reward(g, result, pure((0, 0))) == 1.0

    def test_stays_at_bonus(self):
        g = example1()
        result = best_response_individual(g, pure((0, 0)), 1, pure((1, 1)))
        assert result.pure_joint_action([0, 0]) == (1, 1)

    def test_zero_sweeps_noop(self):
        g = example1()
        start = pure((0, 1))
        result = best_response_individual(g, pure((0, 0)), 1, start, sweeps=0)
        assert result.pure_joint_action([0, 0]) == (0, 1)

    def test_value_never_decreases(self):
        for seed in range(20):
            g = random_team_game((2, 2), ((3, 3), (3, 3)), seed=seed)
            opp = pure((seed % 3, (seed + 1) % 3), (3, 3))
            start = pure((0, 0), (3, 3))
            v0 = expected_team_reward(g, start, opp)
            result = best_response_individual(g, opp, 1, start)
            assert expected_team_reward(g, result, opp) >= v0 - 1e-12


class TestBestResponseShared:
    def test_example1_vs_01(self):
        # E[reward] = 2 - 3q, maximized at q = 0
        g = example1()
        policy, value = best_response_shared(g, pure((0, 1)), 1)
        assert value == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(policy.policy.dist(0), [1.0, 0.0])

    def test_example1_vs_zeros(self):
        # E[reward] = 1 - 3q + 4q^2, maximized at q = 1
        g = example1()
        policy, value = best_response_shared(g, pure((0, 0)), 1)
        assert value == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(policy.policy.dist(0), [0.0, 1.0])

    def test_anti_coordination_interior(self):
        # 2q(1-q) maximized at q = 0.5 with value 0.5
        g = anti_coordination()
        policy, value = best_response_shared(g, pure((0, 0)), 1)
        assert value == pytest.approx(0.5, abs=1e-9)
        assert np.allclose(policy.policy.dist(0), [0.5, 0.5], atol=1e-9)

    def test_mixed_only_improves(self):
        rng = np.random.default_rng(4)
        for seed in range(20):
            g = random_team_game((2, 2), ((3, 3), (3, 3)), seed=seed)
            opp = pure((rng.integers(3), rng.integers(3)), (3, 3))
            _, value = best_response_shared(g, opp, 1)
            pure_best = max(
                expected_team_reward(g, pure((a, a), (3, 3)), opp) for a in range(3)
            )
            assert value >= pure_best - 1e-12

    def test_heterogeneous_rejected(self):
        from teameq.core import DimensionError, NormalFormTeamGame

        g = NormalFormTeamGame((2, 1), ((2, 3), (2,)), np.zeros((2, 3, 2)))
        with pytest.raises(DimensionError):
            best_response_shared(g, ProductPolicy.pure((0,), (2,)), 1)


class TestSharedMaxminGrid:
    def test_example1_shared_worst_case(self):
        # max_q min over opponent pure joints of min(1-3q+4q^2, 2-3q, 3-3q, 4-3q)
        g = example1()
        q, value = shared_maxmin_grid(g, 1, points=10001)
        assert q == pytest.approx(0.0, abs=1e-4)
        assert value == pytest.approx(1.0, abs=1e-4)


class TestAdvantageDecompose:
    def test_greedy_action_zero_terms(self):
        g = example1()
        p1, p2 = pure((1, 0)), pure((0, 1))
        terms = advantage_decompose(g, p1, p2, 1, (1, 0))
        assert np.allclose(terms, 0.0, atol=1e-15)

    def test_example1_uniform_profile(self):
        # joint advantage of (1,1): E[R1 | (1,1)] - E[R1] with the mean
        # enumerated over the four outcomes against team-2 (0,0)
        g = example1()
        uniform = ProductPolicy([IndividualPolicy.uniform(2)] * 2)
        zeros = pure((0, 0))
        outcomes = [expected_team_reward(g, pure(a), zeros) for a in [(0, 0), (0, 1), (1, 0), (1, 1)]]
        expected = outcomes[3] - np.mean(outcomes)
        terms = advantage_decompose(g, uniform, zeros, 1, (1, 1))
        assert terms.sum() == pytest.approx(expected, abs=1e-12)

    def test_sum_identity_random_normal_form(self):
        rng = np.random.default_rng(5)
        for seed in range(50):
            g = random_team_game((2, 2), ((2, 2), (2, 2)), seed=seed)
            p1 = ProductPolicy([IndividualPolicy(2, {0: rng.dirichlet((1, 1))}) for _ in range(2)])
            p2 = ProductPolicy([IndividualPolicy(2, {0: rng.dirichlet((1, 1))}) for _ in range(2)])
            action = (int(rng.integers(2)), int(rng.integers(2)))
            order = (0, 1) if rng.uniform() < 0.5 else (1, 0)
            terms = advantage_decompose(g, p1, p2, 1, action, order=order)
            # independent joint advantage: Q(a) - V by direct enumeration
            q_a = expected_team_reward(g, pure(action), p2)
            v = expected_team_reward(g, p1, p2)
            assert abs(terms.sum() - (q_a - v)) <= 1e-12

    def test_sum_identity_stochastic(self):
        for seed in range(5):
            g = random_stochastic_game(n_states=3, horizon=3, seed=seed)
            rng = np.random.default_rng(seed)
            p1 = ProductPolicy(
                [IndividualPolicy(2, {s: rng.dirichlet((1, 1)) for s in range(3)}) for _ in range(2)]
            )
            p2 = ProductPolicy(
                [IndividualPolicy(2, {s: rng.dirichlet((1, 1)) for s in range(3)}) for _ in range(2)]
            )
            terms = advantage_decompose(g, p1, p2, 1, (1, 0), obs=0)
            from teameq.oracles import _stochastic_q_tensor

            tensor = _stochastic_q_tensor(g, 1, p1.members, p2, 0, EvalConfig())
            dists = [m.dist(0) for m in p1.members]
            joint_adv = tensor[1, 0] - float(dists[0] @ tensor @ dists[1])
            assert abs(terms.sum() - joint_adv) <= 1e-12

    def test_team2_direction(self):
        g = example1()
        terms = advantage_decompose(g, pure((0, 0)), pure((0, 0)), 2, (1, 0))
        # for team 2, reward is negated: col (1,0) pays R1=3 -> R2=-3, adv -2
        assert terms.sum() == pytest.approx(-2.0, abs=1e-12)


class TestSebr:
    def test_anti_coordination_reaches_heterogeneous(self):
        g = anti_coordination()
        policy = sebr(g, pure((0, 0)), 1, start=pure((0, 0)), restarts=0)
        joint = policy.pure_joint_action([0, 0])
        assert joint in ((0, 1), (1, 0))
        assert expected_team_reward(g, policy, pure((0, 0))) == 1.0

    def test_example1_local_optimum(self):
        g = example1()
        policy = sebr(g, pure((0, 0)), 1, start=pure((0, 0)), restarts=0)
        assert policy.pure_joint_action([0, 0]) == (0, 0)

    def test_example1_restarts_escape(self):
        g = example1()
        policy = sebr(g, pure((0, 0)), 1, start=pure((0, 0)), restarts=4)
        assert policy.pure_joint_action([0, 0]) == (1, 1)

    def test_per_update_monotonicity_normal_form(self):
        for seed in range(30):
            g = random_team_game((2, 2), ((2, 2), (2, 2)), seed=seed)
            opp = ProductPolicy([HashPolicy(2, seed), HashPolicy(2, seed + 1)])
            trace = []
            sebr(g, opp, 1, restarts=2, seed=seed, trace=trace)
            for _, _, _, before, after in trace:
                assert after >= before - 1e-9

    def test_per_update_monotonicity_skirmish(self):
        g = grid_skirmish(SkirmishConfig(3, 3, 2, horizon=3))
        opp = ProductPolicy([HashPolicy(6, 11), HashPolicy(6, 12)])
        trace = []
        sebr(g, opp, 1, restarts=1, seed=0, trace=trace, cfg=EvalConfig(exact_bound=10**7), max_sweeps=5)
        assert trace, "no updates traced"
        for _, _, _, before, after in trace:
            assert after >= before - 1e-9

    def test_channel_order_and_clearing(self):
        g = example1()
        channel = CommChannel()
        sebr(g, pure((0, 0)), 1, order=(1, 0), start=pure((0, 0)), restarts=0, channel=channel)
        # the channel holds exactly the last sweep, in sequential order
        assert [e.member for e in channel.entries] == [1, 0]
        assert all(isinstance(e.team_reward, float) for e in channel.entries)

    def test_channel_advantages_sum_matches_identity(self):
        g = anti_coordination()
        channel = CommChannel()
        sebr(g, pure((0, 0)), 1, start=pure((0, 0)), restarts=0, channel=channel)
        for entry in channel.entries:
            assert len(entry.advantages) == 2

    def test_deterministic(self):
        g = random_team_game((2, 2), ((3, 3), (3, 3)), seed=9)
        opp = pure((1, 2), (3, 3))
        a = sebr(g, opp, 1, restarts=4, seed=3)
        b = sebr(g, opp, 1, restarts=4, seed=3)
        assert a.pure_joint_action([0, 0]) == b.pure_joint_action([0, 0])

    def test_audit_serialization(self):
        import json

        from teameq.oracles import channel_to_dicts, trace_to_dicts

        g = example1()
        channel, trace = CommChannel(), []
        sebr(g, pure((0, 0)), 1, start=pure((0, 0)), restarts=0, channel=channel, trace=trace)
        assert json.dumps(channel_to_dicts(channel))
        assert json.dumps(trace_to_dicts(trace))

    def test_mixture_opponent(self):
        g = example1()
        mix = [(pure((0, 0)), 0.5), (pure((0, 1)), 0.5)]
        policy = sebr(g, mix, 1, restarts=4, seed=0)
        value = team_value(g, 1, policy, mix)
        # exhaustive check over pure products
        best = max(
            team_value(g, 1, pure(j), mix) for j in g.joint_actions(1)
        )
        assert value == pytest.approx(best, abs=1e-12)


class TestDominanceOrdering:
    def test_joint_dominates_restricted_oracles(self):
        for seed in range(15):
            g = random_team_game((2, 2), ((2, 2), (2, 2)), seed=100 + seed)
            opp = ProductPolicy([HashPolicy(2, seed + 5), HashPolicy(2, seed + 6)])
            _, v_joint = best_response_joint(g, opp, 1)
            _, v_shared = best_response_shared(g, opp, 1)
            indiv = best_response_individual(g, opp, 1, pure((0, 0)))
            v_indiv = expected_team_reward(g, indiv, opp)
            seq = sebr(g, opp, 1, restarts=2, seed=seed)
            v_seq = expected_team_reward(g, seq, opp)
            assert v_joint >= v_seq - 1e-9
            assert v_joint >= v_shared - 1e-9
            assert v_joint >= v_indiv - 1e-9
