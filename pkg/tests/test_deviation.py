"""Deviation policy spaces, sample budgets and equilibrium verification."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import lp_maxmin
from teameq.core import (
    DimensionError,
    IndividualPolicy,
    JointMixPolicy,
    ProductPolicy,
    SharedPolicy,
    expected_team_reward,
)
from teameq.deviation import (
    DeviationSpec,
    Joint,
    NoCorrelation,
    PivotFollowers,
    SampleFactor,
    Sequential,
    build_deviation_spec,
    cooperative_ability,
    sample_budget,
    verify_equilibrium,
)
from teameq.games import anti_coordination, example1, random_team_game


def pure(actions, counts=(2, 2)):
    return ProductPolicy.pure(actions, counts)


class TestSampleBudget:
    def test_teammate_growth(self):
        # 10 -> 100 teammates with f_team = 100 grows 1e10 by 9e3
        sf = SampleFactor(f_team=100, f_policy=0, n_init=10**10)
        assert sample_budget(sf, 90, 0) == 10**10 + 9 * 10**3

    def test_zero_growth(self):
        sf = SampleFactor(f_team=7, f_policy=3, n_init=42)
        assert sample_budget(sf, 0, 0) == 42

    def test_linear_formula(self):
        sf = SampleFactor(f_team=0, f_policy=2, n_init=5)
        assert sample_budget(sf, 0, 3) == 11

    @given(
        n_init=st.integers(0, 10**6),
        f_team=st.integers(0, 1000),
        f_policy=st.integers(0, 1000),
        a=st.integers(0, 500),
        b=st.integers(0, 500),
        c=st.integers(0, 500),
    )
    @settings(max_examples=60, deadline=None)
    def test_exact_linearity(self, n_init, f_team, f_policy, a, b, c):
        sf = SampleFactor(f_team=f_team, f_policy=f_policy, n_init=n_init)
        assert sample_budget(sf, a + b, c) - sample_budget(sf, a, c) == b * f_team

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            SampleFactor(f_team=-1)
        with pytest.raises(ValueError):
            sample_budget(SampleFactor(), -1, 0)


class TestBuildDeviationSpec:
    def test_no_correlation_counts(self):
        g = example1()
        spec = build_deviation_spec(g, 1, pure((0, 0)), NoCorrelation())
        assert len(spec.individual) == 4  # 2 + 2 pure deviations
        assert spec.correlated == ()

    def test_joint_counts(self):
        g = example1()
        spec = build_deviation_spec(g, 1, pure((0, 0)), Joint())
        assert len(spec.correlated) == 4
        assert spec.individual == ()

    def test_pivot_followers_shared_form(self):
        g = example1()
        spec = build_deviation_spec(g, 1, pure((0, 0)), PivotFollowers(pivot=0))
        assert spec.individual == ()
        assert all(isinstance(p, SharedPolicy) for p in spec.correlated)
        assert len(spec.correlated) == 2

    def test_invalid_pivot(self):
        g = example1()
        with pytest.raises(ValueError):
            build_deviation_spec(g, 1, pure((0, 0)), PivotFollowers(pivot=5))

    def test_sequential_budget_and_reproducibility(self):
        g = example1()
        corr = Sequential(sample_factor=SampleFactor(n_init=3), seed=17)
        spec1 = build_deviation_spec(g, 1, pure((0, 0)), corr)
        spec2 = build_deviation_spec(g, 1, pure((0, 0)), corr)
        assert len(spec1.individual) + len(spec1.correlated) == 3

        def fingerprint(spec):
            indiv = [(m, p.pure_action(0)) for m, p in spec.individual]
            corr_sig = [tuple(m.pure_action(0) for m in p.members) for p in spec.correlated]
            return indiv, corr_sig

        assert fingerprint(spec1) == fingerprint(spec2)

    def test_sequential_fills_with_joints(self):
        g = example1()
        corr = Sequential(sample_factor=SampleFactor(n_init=5), seed=2)
        spec = build_deviation_spec(g, 1, pure((0, 0)), corr)
        assert len(spec.individual) == 4 and len(spec.correlated) == 1
        # the only joint action not representable as a unilateral move is (1,1)
        assert tuple(m.pure_action(0) for m in spec.correlated[0].members) == (1, 1)

    def test_budget_invariant_enforced(self):
        with pytest.raises(ValueError):
            DeviationSpec(
                team=1,
                correlation=Sequential(sample_factor=SampleFactor(n_init=1)),
                candidate=pure((0, 0)),
                individual=((0, IndividualPolicy.deterministic(2, 0)),) * 2,
                correlated=(),
                budget=1,
            )

    def test_no_correlation_forbids_correlated(self):
        with pytest.raises(ValueError):
            DeviationSpec(
                team=1,
                correlation=NoCorrelation(),
                candidate=pure((0, 0)),
                individual=(),
                correlated=(pure((1, 1)),),
            )

    def test_joint_requires_normal_form(self):
        from teameq.games import SkirmishConfig, grid_skirmish

        g = grid_skirmish(SkirmishConfig(2, 1, 1, horizon=1))
        from teameq.core import ConstantPolicy

        cand = ProductPolicy([ConstantPolicy(6, 4)])
        with pytest.raises(DimensionError):
            build_deviation_spec(g, 1, cand, Joint())


class TestCooperativeAbility:
    def test_no_correlation_is_zero(self):
        g = example1()
        spec = build_deviation_spec(g, 1, pure((0, 0)), NoCorrelation())
        assert cooperative_ability(g, spec) == 0

    def test_pivot_followers(self):
        g = example1()
        spec = build_deviation_spec(g, 1, pure((0, 0)), PivotFollowers(0))
        assert cooperative_ability(g, spec) == 2  # (0,0) and (1,1)

    def test_joint(self):
        g = example1()
        spec = build_deviation_spec(g, 1, pure((0, 0)), Joint())
        assert cooperative_ability(g, spec) == 4


class TestVerifyEquilibrium:
    def test_nash_passes_no_correlation(self):
        g = example1()
        profile = (pure((0, 0)), pure((0, 0)))
        specs = [build_deviation_spec(g, t, profile[t - 1], NoCorrelation()) for t in (1, 2)]
        report = verify_equilibrium(g, profile, specs, epsilon=1e-9)
        assert report.passed
        assert all(c.max_gain == pytest.approx(0.0, abs=1e-9) for c in report.checks)

    def test_joint_check_fails_with_witness(self):
        g = example1()
        profile = (pure((0, 0)), pure((0, 0)))
        specs = [build_deviation_spec(g, t, profile[t - 1], Joint()) for t in (1, 2)]
        report = verify_equilibrium(g, profile, specs, epsilon=1e-9)
        assert not report.passed
        team1 = report.checks[0]
        assert team1.max_gain == pytest.approx(1.0, abs=1e-9)
        assert team1.witness == {"kind": "correlated", "joint_action": [1, 1]}

    def test_ctme_mix_passes_joint(self):
        # the CTME profile comes from the independent LP oracle
        g = example1()
        lp_val, row_mix = lp_maxmin(g.matrix())
        _, col_mix = lp_maxmin(-g.matrix().T)
        joints1, joints2 = g.joint_actions(1), g.joint_actions(2)
        mix1 = JointMixPolicy(
            [joints1[i] for i in np.flatnonzero(row_mix > 1e-9)],
            row_mix[row_mix > 1e-9] / row_mix[row_mix > 1e-9].sum(),
        )
        mix2 = JointMixPolicy(
            [joints2[i] for i in np.flatnonzero(col_mix > 1e-9)],
            col_mix[col_mix > 1e-9] / col_mix[col_mix > 1e-9].sum(),
        )
        profile = (mix1, mix2)
        specs = [build_deviation_spec(g, t, profile[t - 1], Joint()) for t in (1, 2)]
        report = verify_equilibrium(g, profile, specs, epsilon=1e-6)
        assert report.passed

    def test_monotone_verification_strength(self):
        # joint deviation sets contain every unilateral deviation of a pure
        # product candidate, so the joint gain dominates
        for seed in range(15):
            g = random_team_game((2, 2), ((2, 2), (2, 2)), seed=seed)
            cand = pure((seed % 2, (seed >> 1) % 2))
            opp = pure((0, 1))
            profile = (cand, opp)
            g_nc = verify_equilibrium(
                g,
                profile,
                [
                    build_deviation_spec(g, 1, cand, NoCorrelation()),
                    build_deviation_spec(g, 2, opp, NoCorrelation()),
                ],
            ).checks[0].max_gain
            g_joint = verify_equilibrium(
                g,
                profile,
                [
                    build_deviation_spec(g, 1, cand, Joint()),
                    build_deviation_spec(g, 2, opp, Joint()),
                ],
            ).checks[0].max_gain
            assert g_joint >= g_nc - 1e-12

    def test_joint_pass_implies_all_classes_pass(self):
        # subset property on a profile that passes the joint check
        g = anti_coordination()
        cand, opp = pure((0, 1)), pure((0, 1))
        profile = (cand, opp)
        classes = [NoCorrelation(), PivotFollowers(0), Sequential(sample_factor=SampleFactor(n_init=8), seed=1), Joint()]
        gains = {}
        for corr in classes:
            specs = [build_deviation_spec(g, t, profile[t - 1], corr) for t in (1, 2)]
            gains[corr.name] = verify_equilibrium(g, profile, specs).checks[0].max_gain
        assert gains["joint"] <= 1e-9
        assert all(v <= gains["joint"] + 1e-9 for v in gains.values())

    def test_individual_deviation_needs_distributed_candidate(self):
        g = example1()
        mix = JointMixPolicy([(0, 0), (1, 1)], [0.5, 0.5])
        with pytest.raises(DimensionError):
            build_deviation_spec(g, 1, mix, NoCorrelation())
