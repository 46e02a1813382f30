"""Deviation policy spaces per correlation class and equilibrium checks.

A deviation spec collects, for one team and one equilibrium candidate, the
individual deviation set I (one member changes, teammates stay at the
candidate) and the correlated deviation set C (coordinated team changes).
With joint-correlation specs the verification is the full correlated-team
maxmin check; with no-correlation specs it is the Nash check; sequential
specs carry a sample-factor budget on |I| + |C|.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DimensionError,
    EvalConfig,
    Game,
    IndividualPolicy,
    JointMixPolicy,
    ProductPolicy,
    SharedPolicy,
    check_team_policy,
    team_value,
)
from .oracles import _reachable_member_obs


@dataclass(frozen=True)
class SampleFactor:
    """Linear growth budget for evaluated deviation policies: f_team per
    added teammate, f_policy per added individual policy, on top of an
    initial count."""

    f_team: float = 0.0
    f_policy: float = 0.0
    n_init: int = 0

    def __post_init__(self):
        if self.f_team < 0 or self.f_policy < 0:
            raise ValueError("growth rates must be nonnegative")
        if self.n_init < 0:
            raise ValueError("n_init must be nonnegative")


def sample_budget(sf: SampleFactor, delta_team: int, delta_policy: int) -> int:
    """N = n_init + delta_team * f_team + delta_policy * f_policy, floored."""
    if delta_team < 0 or delta_policy < 0:
        raise ValueError("deltas must be nonnegative")
    return int(math.floor(sf.n_init + delta_team * sf.f_team + delta_policy * sf.f_policy))


# Correlation classes ------------------------------------------------------


@dataclass(frozen=True)
class NoCorrelation:
    name = "no_correlation"


@dataclass(frozen=True)
class PivotFollowers:
    pivot: int = 0
    name = "pivot_followers"


@dataclass(frozen=True)
class Sequential:
    order: tuple[int, ...] | None = None
    sample_factor: SampleFactor = field(default_factory=lambda: SampleFactor(n_init=16))
    seed: int = 0
    name = "sequential"


@dataclass(frozen=True)
class Joint:
    name = "joint"


CorrelationClass = NoCorrelation | PivotFollowers | Sequential | Joint


@dataclass(frozen=True)
class DeviationSpec:
    """Deviation policy space of one team against a fixed candidate.

    ``individual`` holds (member, replacement policy) pairs with teammates
    fixed at the candidate; ``correlated`` holds whole team policies.
    """

    team: int
    correlation: CorrelationClass
    candidate: object
    individual: tuple[tuple[int, object], ...]
    correlated: tuple[object, ...]
    budget: int | None = None

    def __post_init__(self):
        if isinstance(self.correlation, NoCorrelation) and self.correlated:
            raise ValueError("no-correlation specs have an empty correlated set")
        if isinstance(self.correlation, PivotFollowers):
            if self.individual:
                raise ValueError("pivot-followers specs have an empty individual set")
            if not all(isinstance(p, SharedPolicy) for p in self.correlated):
                raise ValueError("pivot-followers deviations must be shared policies")
        if isinstance(self.correlation, Sequential) and self.budget is not None:
            if len(self.individual) + len(self.correlated) > self.budget:
                raise ValueError("sequential spec exceeds its sample budget")

    @property
    def class_name(self) -> str:
        return self.correlation.name


def _pure_member_policies(game: Game, team: int, member: int, cfg: EvalConfig):
    """All pure policies of one member (bounded enumeration for stochastic)."""
    n_actions = game.action_counts[team - 1][member]
    if game.is_normal_form:
        return [IndividualPolicy.deterministic(n_actions, a) for a in range(n_actions)]
    obs_set = _reachable_member_obs(game, team, cfg)
    count = n_actions ** len(obs_set)
    if count > 4096:
        raise ValueError(
            f"{count} pure member policies exceed the enumeration bound"
        )
    out = []
    for assignment in itertools.product(range(n_actions), repeat=len(obs_set)):
        table = {o: np.eye(n_actions)[a] for o, a in zip(obs_set, assignment)}
        out.append(IndividualPolicy(n_actions, table))
    return out


def _pure_joint_policies(game: Game, team: int, cfg: EvalConfig, bound: int):
    """All pure team joint policies as deterministic products (normal form:
    one per pure joint action, lexicographic order)."""
    counts = game.action_counts[team - 1]
    if game.is_normal_form:
        total = int(np.prod(counts))
        if total > bound:
            raise ValueError(f"{total} pure joint policies exceed the bound {bound}")
        return [
            (joint, ProductPolicy.pure(joint, counts))
            for joint in itertools.product(*(range(c) for c in counts))
        ]
    per_member = [
        _pure_member_policies(game, team, m, cfg) for m in range(len(counts))
    ]
    total = math.prod(len(p) for p in per_member)
    if total > bound:
        raise ValueError(f"{total} pure joint policies exceed the bound {bound}")
    out = []
    for combo in itertools.product(*per_member):
        out.append((None, ProductPolicy(combo)))
    return out


def _candidate_members(game: Game, team: int, candidate):
    if isinstance(candidate, ProductPolicy):
        return list(candidate.members)
    if isinstance(candidate, SharedPolicy):
        return list(candidate.members)
    raise DimensionError(
        "individual deviations need a distributed (product or shared) candidate"
    )


def build_deviation_spec(
    game: Game,
    team: int,
    candidate,
    correlation: CorrelationClass,
    delta_team: int = 0,
    delta_policy: int = 0,
    cfg: EvalConfig | None = None,
    enumeration_bound: int = 10**6,
) -> DeviationSpec:
    """Construct the deviation space of ``team`` for one correlation class.

    - NoCorrelation: I = every pure unilateral deviation, C empty.
    - PivotFollowers: C = one shared policy per pure pivot policy, I empty.
    - Joint: C = every pure team joint policy (normal form).
    - Sequential: a seeded budgeted subset of the union, individual
      deviations enumerated first, then pure joint policies sampled
      uniformly without replacement.
    """
    cfg = cfg or EvalConfig()
    check_team_policy(game, team, candidate)
    n_members = game.team_sizes[team - 1]
    counts = game.action_counts[team - 1]

    def individual_deviations():
        out = []
        for member in range(n_members):
            for pol in _pure_member_policies(game, team, member, cfg):
                out.append((member, pol))
        return out

    if isinstance(correlation, NoCorrelation):
        _candidate_members(game, team, candidate)  # must be distributed
        return DeviationSpec(team, correlation, candidate, tuple(individual_deviations()), ())

    if isinstance(correlation, PivotFollowers):
        if not 0 <= correlation.pivot < n_members:
            raise ValueError(f"pivot {correlation.pivot} is not a team member")
        if len(set(counts)) != 1:
            raise DimensionError("pivot-followers requires homogeneous action spaces")
        shared = [
            SharedPolicy(pol, n_members)
            for pol in _pure_member_policies(game, team, correlation.pivot, cfg)
        ]
        return DeviationSpec(team, correlation, candidate, (), tuple(shared))

    if isinstance(correlation, Joint):
        if not game.is_normal_form:
            raise DimensionError("joint deviation spaces are enumerable for normal form only")
        joints = _pure_joint_policies(game, team, cfg, enumeration_bound)
        return DeviationSpec(team, correlation, candidate, (), tuple(p for _, p in joints))

    if isinstance(correlation, Sequential):
        budget = sample_budget(correlation.sample_factor, delta_team, delta_policy)
        indiv = individual_deviations()[:budget]
        remaining = budget - len(indiv)
        correlated: list = []
        if remaining > 0:
            joints = _pure_joint_policies(game, team, cfg, enumeration_bound)
            exclude = set()
            if game.is_normal_form:
                cand_joint = None
                if isinstance(candidate, (ProductPolicy, SharedPolicy)):
                    members = _candidate_members(game, team, candidate)
                    acts = [m.pure_action(0) for m in members]
                    if all(a is not None for a in acts):
                        cand_joint = tuple(acts)
                if cand_joint is not None:
                    exclude.add(cand_joint)
                    for member, pol in indiv:
                        a = pol.pure_action(0)
                        dev = list(cand_joint)
                        dev[member] = a
                        exclude.add(tuple(dev))
            pool = [
                (ja, pol) for ja, pol in joints if ja is None or ja not in exclude
            ]
            rng = np.random.default_rng(correlation.seed)
            take = min(remaining, len(pool))
            if take > 0:
                idx = rng.choice(len(pool), size=take, replace=False)
                correlated = [pool[i][1] for i in idx]
        return DeviationSpec(
            team, correlation, candidate, tuple(indiv), tuple(correlated), budget=budget
        )

    raise TypeError(f"unknown correlation class {correlation!r}")


def _pure_joint_signature(game: Game, team: int, policy):
    """Hashable identity of a pure team joint policy, or None if mixed."""
    if isinstance(policy, JointMixPolicy):
        if len(policy.atoms) == 1:
            return ("nf", policy.atoms[0])
        return None
    if isinstance(policy, (ProductPolicy, SharedPolicy)):
        members = policy.members
        if game.is_normal_form:
            acts = [m.pure_action(0) for m in members]
            if any(a is None for a in acts):
                return None
            return ("nf", tuple(acts))
        sigs = []
        for m in members:
            if not isinstance(m, IndividualPolicy):
                return None
            entries = []
            for obs in sorted(m.observations(), key=repr):
                a = m.pure_action(obs)
                if a is None:
                    return None
                entries.append((obs, a))
            sigs.append(tuple(entries))
        return ("st", tuple(sigs))
    return None


def cooperative_ability(game: Game, spec: DeviationSpec) -> int:
    """Count of distinct pure team joint policies reachable through the
    correlated deviation set; 0 when there is no correlation."""
    sigs = set()
    for policy in spec.correlated:
        sig = _pure_joint_signature(game, spec.team, policy)
        if sig is not None:
            sigs.add(sig)
    return len(sigs)


# Verification -------------------------------------------------------------


@dataclass(frozen=True)
class TeamCheck:
    team: int
    class_name: str
    budget: int | None
    max_gain: float
    witness: dict
    passed: bool

    def to_dict(self) -> dict:
        return {
            "team": self.team,
            "class": self.class_name,
            "budget": self.budget,
            "max_gain": float(self.max_gain),
            "witness": self.witness,
            "verdict": "PASS" if self.passed else "FAIL",
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[TeamCheck, ...]
    epsilon: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "epsilon": float(self.epsilon),
            "verdict": "PASS" if self.passed else "FAIL",
            "teams": [c.to_dict() for c in self.checks],
        }


def _witness_for(game, spec, kind, payload) -> dict:
    if kind == "individual":
        member, pol = payload
        action = pol.pure_action(0) if game.is_normal_form else None
        return {"kind": "individual", "member": member, "action": action}
    sig = _pure_joint_signature(game, spec.team, payload)
    joint = list(sig[1]) if sig is not None and sig[0] == "nf" else None
    return {"kind": "correlated", "joint_action": joint}


def verify_equilibrium(
    game: Game,
    profile: tuple,
    specs,
    epsilon: float | None = None,
    cfg: EvalConfig | None = None,
) -> VerificationReport:
    """Check a candidate profile against per-team deviation spaces.

    For each team the report carries the maximum deviation gain over
    I union C and the witness reaching it (deviations enumerated in a fixed
    order, individual first, so witness ties break deterministically).
    The verdict is PASS iff neither team gains more than epsilon.  With
    joint specs this is the correlated-team maxmin check; with
    no-correlation specs it is the Nash check.
    """
    cfg = cfg or EvalConfig()
    p1, p2 = profile
    check_team_policy(game, 1, p1)
    check_team_policy(game, 2, p2)
    spec_map = {s.team: s for s in (specs if isinstance(specs, (list, tuple)) else specs.values())}
    if epsilon is None:
        epsilon = 1e-6
    checks = []
    for team in sorted(spec_map):
        spec = spec_map[team]
        own = p1 if team == 1 else p2
        opponent = p2 if team == 1 else p1
        base = team_value(game, team, own, opponent, cfg)
        best_gain = -math.inf
        best_witness: dict = {}
        deviations = []
        if spec.individual:
            members = _candidate_members(game, team, own)
            for member, pol in spec.individual:
                dev_members = list(members)
                dev_members[member] = pol
                deviations.append(("individual", (member, pol), ProductPolicy(dev_members)))
        for pol in spec.correlated:
            deviations.append(("correlated", pol, pol))
        if not deviations:
            best_gain = 0.0
            best_witness = {"kind": "none"}
        for kind, payload, dev_policy in deviations:
            gain = team_value(game, team, dev_policy, opponent, cfg) - base
            if gain > best_gain:
                best_gain = gain
                best_witness = _witness_for(game, spec, kind, payload)
        checks.append(
            TeamCheck(
                team=team,
                class_name=spec.class_name,
                budget=spec.budget,
                max_gain=float(best_gain),
                witness=best_witness,
                passed=best_gain <= epsilon,
            )
        )
    return VerificationReport(
        checks=tuple(checks), epsilon=float(epsilon), passed=all(c.passed for c in checks)
    )
