"""Game representations and payoff evaluation for two-team zero-sum games.

Two kinds of games are supported: normal-form games given by a payoff
tensor over both teams' pure joint actions, and tabular stochastic games
with a finite joint-observation space, discounting and a finite evaluation
horizon.  Only team 1's reward is ever stored; team 2's reward is its
negation.

Games and policies are immutable after construction and safe to share
across threads.  Evaluation is a pure function of (game, policies, config).
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

Obs = Hashable

#: The single observation every player sees in a normal-form game.
NF_OBS = 0

#: Distributions must sum to one within this tolerance.
DIST_TOL = 1e-12

#: Exact expectation over policy mixtures is allowed up to this support size.
MIXTURE_SUPPORT_LIMIT = 64


class DimensionError(ValueError):
    """Policies and game shapes do not line up."""


class EvaluationError(ValueError):
    """Evaluation requested with an unusable configuration or budget."""


def _check_dist(dist: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(dist, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{what}: expected a 1-d probability vector")
    if arr.min(initial=0.0) < -DIST_TOL:
        raise ValueError(f"{what}: negative probability {arr.min()}")
    if abs(arr.sum() - 1.0) > DIST_TOL:
        raise ValueError(f"{what}: probabilities sum to {arr.sum()!r}, not 1")
    arr = np.clip(arr, 0.0, None)
    arr = arr / arr.sum()
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Individual (per-player) policies


class IndividualPolicy:
    """Tabular per-player policy: observation -> distribution over actions."""

    __slots__ = ("n_actions", "_table", "_fallback")

    def __init__(
        self,
        n_actions: int,
        table: Mapping[Obs, Sequence[float]],
        fallback: "IndividualPolicy | None" = None,
    ):
        self.n_actions = int(n_actions)
        tab = {}
        for obs, dist in table.items():
            arr = _check_dist(dist, f"policy entry for obs {obs!r}")
            if arr.shape != (self.n_actions,):
                raise DimensionError(
                    f"policy entry for obs {obs!r} has {arr.shape[0]} actions, "
                    f"expected {self.n_actions}"
                )
            tab[obs] = arr
        self._table = tab
        self._fallback = fallback

    @classmethod
    def deterministic(cls, n_actions: int, action: int, obs_keys: Iterable[Obs] = (NF_OBS,)):
        if not 0 <= action < n_actions:
            raise ValueError(f"action {action} outside [0, {n_actions})")
        row = np.zeros(n_actions)
        row[action] = 1.0
        return cls(n_actions, {o: row for o in obs_keys})

    @classmethod
    def uniform(cls, n_actions: int, obs_keys: Iterable[Obs] = (NF_OBS,)):
        row = np.full(n_actions, 1.0 / n_actions)
        return cls(n_actions, {o: row for o in obs_keys})

    def dist(self, obs: Obs) -> np.ndarray:
        entry = self._table.get(obs)
        if entry is not None:
            return entry
        if self._fallback is not None:
            return self._fallback.dist(obs)
        raise KeyError(f"no policy entry for observation {obs!r}")

    def observations(self) -> tuple:
        return tuple(self._table)

    def pure_action(self, obs: Obs) -> int | None:
        """The deterministic action at ``obs``, or None if mixed."""
        d = self.dist(obs)
        top = int(np.argmax(d))
        return top if d[top] >= 1.0 - DIST_TOL else None

    def __repr__(self):
        return f"IndividualPolicy(n_actions={self.n_actions}, entries={len(self._table)})"


class ConstantPolicy:
    """Deterministic policy playing one action at every observation.

    Lazy counterpart of a deterministic :class:`IndividualPolicy`: usable on
    games whose observation space is expensive to enumerate.
    """

    __slots__ = ("n_actions", "action")

    def __init__(self, n_actions: int, action: int):
        if not 0 <= action < n_actions:
            raise ValueError(f"action {action} outside [0, {n_actions})")
        self.n_actions = int(n_actions)
        self.action = int(action)

    def dist(self, obs: Obs) -> np.ndarray:
        row = np.zeros(self.n_actions)
        row[self.action] = 1.0
        return row

    def pure_action(self, obs: Obs) -> int:
        return self.action

    def __repr__(self):
        return f"ConstantPolicy({self.action}/{self.n_actions})"


class HashPolicy:
    """Deterministic pseudo-random policy: a seeded stable hash of the
    observation picks the action.  Used for reproducible random restarts
    without enumerating the observation space."""

    __slots__ = ("n_actions", "seed")

    def __init__(self, n_actions: int, seed: int):
        self.n_actions = int(n_actions)
        self.seed = int(seed)

    def _action(self, obs: Obs) -> int:
        digest = hashlib.blake2b(
            repr(obs).encode(),
            digest_size=8,
            key=self.seed.to_bytes(8, "little", signed=True),
        ).digest()
        return int.from_bytes(digest, "little") % self.n_actions

    def dist(self, obs: Obs) -> np.ndarray:
        row = np.zeros(self.n_actions)
        row[self._action(obs)] = 1.0
        return row

    def pure_action(self, obs: Obs) -> int:
        return self._action(obs)

    def __repr__(self):
        return f"HashPolicy(n_actions={self.n_actions}, seed={self.seed})"


#: Anything with ``n_actions`` and ``dist(obs)`` works as a member policy.
MemberPolicy = IndividualPolicy


# ---------------------------------------------------------------------------
# Team policies


class ProductPolicy:
    """Team policy: members act independently, one policy per member."""

    __slots__ = ("members",)

    def __init__(self, members: Sequence):
        self.members = tuple(members)
        if not self.members:
            raise ValueError("a team needs at least one member policy")

    @classmethod
    def pure(cls, actions: Sequence[int], n_actions: Sequence[int]):
        """Deterministic product policy playing ``actions`` (normal-form)."""
        return cls(
            [IndividualPolicy.deterministic(n, a) for a, n in zip(actions, n_actions, strict=True)]
        )

    @property
    def n_members(self) -> int:
        return len(self.members)

    def pure_joint_action(self, obs_list: Sequence[Obs]) -> tuple | None:
        acts = tuple(m.pure_action(o) for m, o in zip(self.members, obs_list, strict=True))
        return None if any(a is None for a in acts) else acts

    def __repr__(self):
        return f"ProductPolicy({list(self.members)!r})"


class SharedPolicy:
    """All members draw independently from one shared policy.

    This is the parameter-sharing analogue: the shared distribution is
    sampled once per member, not once per team, so a mixed shared policy
    still induces an independent product over members.
    """

    __slots__ = ("policy", "n_members")

    def __init__(self, policy, n_members: int):
        if n_members < 1:
            raise ValueError("n_members must be >= 1")
        self.policy = policy
        self.n_members = int(n_members)

    @property
    def members(self) -> tuple:
        return (self.policy,) * self.n_members

    def __repr__(self):
        return f"SharedPolicy({self.policy!r} x{self.n_members})"


class JointMixPolicy:
    """Probability distribution over pure team joint actions (normal-form).

    Atoms are joint-action tuples; weights form a simplex.  A degenerate
    JointMix (a single atom) is a pure team joint policy.
    """

    __slots__ = ("atoms", "weights")

    def __init__(self, atoms: Sequence[tuple], weights: Sequence[float]):
        self.atoms = tuple(tuple(int(a) for a in atom) for atom in atoms)
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("joint-mix atoms must be distinct")
        if not self.atoms:
            raise ValueError("joint mix needs at least one atom")
        lengths = {len(a) for a in self.atoms}
        if len(lengths) != 1:
            raise DimensionError("joint-mix atoms have inconsistent member counts")
        self.weights = _check_dist(weights, "joint-mix weights")
        if len(self.weights) != len(self.atoms):
            raise DimensionError("one weight per atom required")

    @classmethod
    def pure(cls, joint_action: Sequence[int]):
        return cls([tuple(joint_action)], [1.0])

    @property
    def n_members(self) -> int:
        return len(self.atoms[0])

    def __repr__(self):
        pairs = ", ".join(f"{a}: {w:.4g}" for a, w in zip(self.atoms, self.weights))
        return f"JointMixPolicy({{{pairs}}})"


TeamPolicy = ProductPolicy | SharedPolicy | JointMixPolicy

#: A mixture over team policies: sequence of (policy, weight) pairs.
PolicyMixture = Sequence[tuple]


def as_mixture(policy) -> list[tuple]:
    """Normalise a team policy or (policy, weight) sequence to a mixture."""
    if isinstance(policy, (ProductPolicy, SharedPolicy, JointMixPolicy)):
        return [(policy, 1.0)]
    pairs = [(p, float(w)) for p, w in policy]
    total = sum(w for _, w in pairs)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"mixture weights sum to {total}, not 1")
    return [(p, w) for p, w in pairs if w > 0.0]


# ---------------------------------------------------------------------------
# Games


@dataclass(frozen=True)
class NormalFormTeamGame:
    """Two-team zero-sum normal-form game.

    ``payoff`` holds team 1's reward for every pure joint-action profile,
    with one tensor axis per player (team-1 members first).  Team 2's reward
    is the negation and is never stored.
    """

    team_sizes: tuple[int, int]
    action_counts: tuple[tuple[int, ...], tuple[int, ...]]
    payoff: np.ndarray
    name: str = ""

    def __post_init__(self):
        sizes = (int(self.team_sizes[0]), int(self.team_sizes[1]))
        counts = (
            tuple(int(c) for c in self.action_counts[0]),
            tuple(int(c) for c in self.action_counts[1]),
        )
        if sizes[0] < 1 or sizes[1] < 1:
            raise ValueError("team sizes must be positive")
        if len(counts[0]) != sizes[0] or len(counts[1]) != sizes[1]:
            raise DimensionError("one action count per player required")
        if any(c < 1 for c in counts[0] + counts[1]):
            raise ValueError("action counts must be positive")
        payoff = np.asarray(self.payoff, dtype=float)
        if payoff.shape != counts[0] + counts[1]:
            raise DimensionError(
                f"payoff shape {payoff.shape} != action counts {counts[0] + counts[1]}"
            )
        if not np.isfinite(payoff).all():
            raise ValueError("payoff entries must be finite")
        payoff = payoff.copy()
        payoff.setflags(write=False)
        object.__setattr__(self, "team_sizes", sizes)
        object.__setattr__(self, "action_counts", counts)
        object.__setattr__(self, "payoff", payoff)

    @property
    def is_normal_form(self) -> bool:
        return True

    def joint_count(self, team: int) -> int:
        return int(np.prod(self.action_counts[team - 1]))

    def joint_actions(self, team: int) -> list[tuple[int, ...]]:
        """All pure joint actions of a team, in lexicographic order."""
        return list(itertools.product(*(range(c) for c in self.action_counts[team - 1])))

    def joint_index(self, team: int, joint_action: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(joint_action), self.action_counts[team - 1]))

    def matrix(self) -> np.ndarray:
        """Team-1 payoff as a (team-1 joints) x (team-2 joints) matrix."""
        return self.payoff.reshape(self.joint_count(1), self.joint_count(2))

    def homogeneous(self, team: int) -> bool:
        return len(set(self.action_counts[team - 1])) == 1


@dataclass(frozen=True)
class StochasticTeamGame:
    """Tabular two-team zero-sum stochastic game with finite horizon.

    ``transition`` and ``reward`` are callables so that large state spaces
    (e.g. gridworlds) can be represented lazily; exact evaluation touches
    only reachable entries and validates them on the fly.  Joint actions are
    pairs ``(team1_actions, team2_actions)`` of int tuples.  ``member_obs``
    maps (team, member, joint_obs) to the member's private observation and
    defaults to full observability.
    """

    team_sizes: tuple[int, int]
    action_counts: tuple[tuple[int, ...], tuple[int, ...]]
    initial: tuple[tuple[Obs, float], ...]
    transition: Callable[[Obs, tuple], tuple[tuple[Obs, float], ...]]
    reward: Callable[[Obs, tuple], float]
    discount: float
    horizon: int
    reward_bound: float
    member_obs: Callable[[int, int, Obs], Obs] = field(default=lambda team, member, obs: obs)
    name: str = ""

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.reward_bound < 0:
            raise ValueError("reward bound must be nonnegative")
        total = sum(p for _, p in self.initial)
        if abs(total - 1.0) > DIST_TOL:
            raise ValueError(f"initial distribution sums to {total}, not 1")

    @property
    def is_normal_form(self) -> bool:
        return False

    def successors(self, obs: Obs, joint_action: tuple) -> tuple[tuple[Obs, float], ...]:
        rows = tuple(self.transition(obs, joint_action))
        total = sum(p for _, p in rows)
        if abs(total - 1.0) > DIST_TOL:
            raise ValueError(
                f"transition row for {obs!r}, {joint_action!r} sums to {total}, not 1"
            )
        return rows

    def step_reward(self, obs: Obs, joint_action: tuple) -> float:
        r = float(self.reward(obs, joint_action))
        if abs(r) > self.reward_bound + 1e-9:
            raise ValueError(
                f"reward {r} exceeds the declared bound {self.reward_bound}"
            )
        return r

    def member_observations(self, team: int, obs: Obs) -> tuple:
        n = self.team_sizes[team - 1]
        return tuple(self.member_obs(team, i, obs) for i in range(n))


Game = NormalFormTeamGame | StochasticTeamGame


def check_team_policy(game: Game, team: int, policy) -> None:
    """Raise DimensionError when ``policy`` cannot play for ``team``."""
    counts = game.action_counts[team - 1]
    if isinstance(policy, ProductPolicy):
        if policy.n_members != len(counts):
            raise DimensionError(
                f"team {team} has {len(counts)} members, policy has {policy.n_members}"
            )
        for member, c in zip(policy.members, counts):
            if member.n_actions != c:
                raise DimensionError("member action count mismatch")
    elif isinstance(policy, SharedPolicy):
        if len(set(counts)) != 1:
            raise DimensionError("shared policy requires homogeneous action spaces")
        if policy.n_members != len(counts) or policy.policy.n_actions != counts[0]:
            raise DimensionError("shared policy shape mismatch")
    elif isinstance(policy, JointMixPolicy):
        if not game.is_normal_form:
            raise DimensionError("joint-mix policies apply to normal-form games only")
        if policy.n_members != len(counts):
            raise DimensionError("joint-mix member count mismatch")
        for atom in policy.atoms:
            for a, c in zip(atom, counts):
                if not 0 <= a < c:
                    raise DimensionError(f"joint action {atom} outside action ranges")
    else:
        raise DimensionError(f"not a team policy: {policy!r}")


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True)
class EvalConfig:
    """How to evaluate expected team reward.

    mode:
      - "exact": exact finite-horizon value (always used for normal form).
      - "mc": Monte-Carlo rollouts; requires a seed.
    ``exact_bound`` limits the per-step work of exact stochastic evaluation
    (touched state x joint-action-support pairs).
    """

    mode: str = "exact"
    mc_samples: int = 1000
    seed: int | None = None
    exact_bound: int = 10**6

    def __post_init__(self):
        if self.mode not in ("exact", "mc"):
            raise ValueError(f"unknown evaluation mode {self.mode!r}")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")


@dataclass(frozen=True)
class EvalResult:
    value: float
    stderr: float
    n: int
    mode: str


def team_action_dist(game: NormalFormTeamGame, team: int, policy) -> np.ndarray:
    """Distribution over a team's pure joint actions (flattened, row-major)."""
    check_team_policy(game, team, policy)
    counts = game.action_counts[team - 1]
    if isinstance(policy, JointMixPolicy):
        out = np.zeros(game.joint_count(team))
        for atom, w in zip(policy.atoms, policy.weights):
            out[game.joint_index(team, atom)] += w
        return out
    members = policy.members
    out = np.ones(1)
    for member in members:
        out = np.multiply.outer(out, member.dist(NF_OBS)).ravel()
    return out


def _nf_value(game: NormalFormTeamGame, p1, p2) -> float:
    d1 = team_action_dist(game, 1, p1)
    d2 = team_action_dist(game, 2, p2)
    return float(d1 @ game.matrix() @ d2)


def _joint_support(game: StochasticTeamGame, obs: Obs, p1, p2):
    """Support of the joint action distribution at ``obs``: (action, prob)."""
    per_player = []
    for team, policy in ((1, p1), (2, p2)):
        obs_list = game.member_observations(team, obs)
        for member, mo in zip(policy.members, obs_list, strict=True):
            d = member.dist(mo)
            per_player.append([(a, d[a]) for a in np.nonzero(d)[0]])
    n1 = game.team_sizes[0]
    out = []
    for combo in itertools.product(*per_player):
        prob = math.prod(p for _, p in combo)
        acts = tuple(int(a) for a, _ in combo)
        out.append(((acts[:n1], acts[n1:]), prob))
    return out


def _stochastic_exact(game: StochasticTeamGame, p1, p2, cfg: EvalConfig) -> float:
    dist: dict[Obs, float] = {}
    for obs, p in game.initial:
        dist[obs] = dist.get(obs, 0.0) + p
    total = 0.0
    gamma_t = 1.0
    for _ in range(game.horizon):
        step_ops = 0
        nxt: dict[Obs, float] = {}
        for obs, p_obs in dist.items():
            support = _joint_support(game, obs, p1, p2)
            step_ops += len(support)
            if step_ops > cfg.exact_bound:
                raise EvaluationError(
                    "exact evaluation budget exceeded "
                    f"({step_ops} state-action pairs in one step > {cfg.exact_bound}); "
                    "raise EvalConfig.exact_bound or use Monte-Carlo"
                )
            for joint, p_act in support:
                w = p_obs * p_act
                if w == 0.0:
                    continue
                total += gamma_t * w * game.step_reward(obs, joint)
                for nobs, pt in game.successors(obs, joint):
                    if pt > 0.0:
                        nxt[nobs] = nxt.get(nobs, 0.0) + w * pt
        dist = nxt
        gamma_t *= game.discount
    return total


def _freeze_episode_policy(policy, rng: np.random.Generator):
    """Resolve episode-level mixtures: JointMix atoms are drawn per episode."""
    if isinstance(policy, JointMixPolicy):
        idx = rng.choice(len(policy.atoms), p=policy.weights)
        return ProductPolicy(
            [ConstantPolicy(n, a) for n, a in zip(_atom_counts(policy), policy.atoms[idx])]
        )
    return policy


def _atom_counts(policy: JointMixPolicy):
    # action counts recovered lazily: upper bound by max atom value + 1
    maxes = [0] * policy.n_members
    for atom in policy.atoms:
        for i, a in enumerate(atom):
            maxes[i] = max(maxes[i], a + 1)
    return maxes


def rollout(game: StochasticTeamGame, p1, p2, rng: np.random.Generator) -> float:
    """One seeded episode; returns the discounted team-1 return."""
    f1 = _freeze_episode_policy(p1, rng)
    f2 = _freeze_episode_policy(p2, rng)
    obs_list, probs = zip(*game.initial)
    obs = obs_list[int(rng.choice(len(obs_list), p=np.asarray(probs)))]
    total, gamma_t = 0.0, 1.0
    for _ in range(game.horizon):
        a1 = sample_joint_action(f1, game.member_observations(1, obs), rng)
        a2 = sample_joint_action(f2, game.member_observations(2, obs), rng)
        joint = (a1, a2)
        total += gamma_t * game.step_reward(obs, joint)
        succ = game.successors(obs, joint)
        nxt, ps = zip(*succ)
        obs = nxt[int(rng.choice(len(nxt), p=np.asarray(ps)))]
        gamma_t *= game.discount
    return total


def evaluate(game: Game, p1, p2, cfg: EvalConfig | None = None) -> EvalResult:
    """Expected team-1 reward of a policy profile.

    Normal-form profiles are evaluated exactly (multilinear expectation).
    Stochastic profiles use exact finite-horizon dynamic programming within
    the configured budget, or seeded Monte-Carlo with a reported standard
    error.
    """
    cfg = cfg or EvalConfig()
    check_team_policy(game, 1, p1)
    check_team_policy(game, 2, p2)
    if game.is_normal_form:
        return EvalResult(_nf_value(game, p1, p2), 0.0, 1, "exact")
    if cfg.mode == "exact":
        if isinstance(p1, JointMixPolicy) or isinstance(p2, JointMixPolicy):
            raise EvaluationError("decompose joint mixtures before exact stochastic evaluation")
        return EvalResult(_stochastic_exact(game, p1, p2, cfg), 0.0, 1, "exact")
    if cfg.seed is None:
        raise EvaluationError("Monte-Carlo evaluation requires an explicit seed")
    rng = np.random.default_rng(cfg.seed)
    samples = np.array([rollout(game, p1, p2, rng) for _ in range(cfg.mc_samples)])
    stderr = float(samples.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else 0.0
    return EvalResult(float(samples.mean()), stderr, len(samples), "mc")


def expected_team_reward(game: Game, p1, p2, cfg: EvalConfig | None = None) -> float:
    """Expected team-1 reward (team 2's reward is the negation)."""
    return evaluate(game, p1, p2, cfg).value


def mixture_value(game: Game, mix1, mix2, cfg: EvalConfig | None = None) -> float:
    """Expected team-1 reward when both sides mix over team policies.

    Mixtures are episode-level lotteries: an entry is drawn once, then
    played for the whole episode.  Exact expectation over the support is
    used (support limited to MIXTURE_SUPPORT_LIMIT per side).
    """
    pairs1, pairs2 = as_mixture(mix1), as_mixture(mix2)
    if len(pairs1) > MIXTURE_SUPPORT_LIMIT or len(pairs2) > MIXTURE_SUPPORT_LIMIT:
        raise EvaluationError(
            f"mixture support exceeds {MIXTURE_SUPPORT_LIMIT}; use Monte-Carlo instead"
        )
    total = 0.0
    for pol1, w1 in pairs1:
        for pol2, w2 in pairs2:
            total += w1 * w2 * expected_team_reward(game, pol1, pol2, cfg)
    return total


def team_value(game: Game, team: int, own, opponent, cfg: EvalConfig | None = None) -> float:
    """Expected reward of ``team`` when it plays ``own`` against ``opponent``.

    Either side may be a policy or a mixture of policies.
    """
    if team == 1:
        return mixture_value(game, own, opponent, cfg)
    return -mixture_value(game, opponent, own, cfg)


# ---------------------------------------------------------------------------
# Conversions and sampling


def product_to_joint(policy: ProductPolicy, game: NormalFormTeamGame, team: int) -> JointMixPolicy:
    """Joint-mix equivalent of an independent product policy (normal form).

    Weights are products of individual action probabilities; zero-weight
    joint actions are dropped.
    """
    if not isinstance(policy, ProductPolicy):
        raise DimensionError("product_to_joint expects a ProductPolicy")
    check_team_policy(game, team, policy)
    atoms, weights = [], []
    for joint in game.joint_actions(team):
        w = math.prod(m.dist(NF_OBS)[a] for m, a in zip(policy.members, joint))
        if w > 0.0:
            atoms.append(joint)
            weights.append(w)
    return JointMixPolicy(atoms, weights)


def sample_joint_action(policy, obs_list: Sequence[Obs], rng: np.random.Generator) -> tuple:
    """Draw one pure team joint action.

    ``obs_list`` carries each member's private observation.  Shared policies
    draw one action per member independently from the shared distribution.
    Joint mixtures draw an atom per call.
    """
    if isinstance(policy, JointMixPolicy):
        idx = int(rng.choice(len(policy.atoms), p=policy.weights))
        return policy.atoms[idx]
    members = policy.members
    if len(obs_list) != len(members):
        raise DimensionError("one observation per member required")
    out = []
    for member, obs in zip(members, obs_list):
        d = member.dist(obs)
        out.append(int(rng.choice(len(d), p=d)))
    return tuple(out)


# ---------------------------------------------------------------------------
# Serialization (normal-form games and their policies)


def game_to_dict(game: NormalFormTeamGame) -> dict:
    """JSON-ready form: team sizes, action counts, flat row-major payoff."""
    if not isinstance(game, NormalFormTeamGame):
        raise TypeError("only normal-form games serialize to the payoff schema")
    return {
        "type": "normal_form",
        "name": game.name,
        "team_sizes": list(game.team_sizes),
        "action_counts": [list(game.action_counts[0]), list(game.action_counts[1])],
        "payoff": [float(x) for x in game.payoff.ravel()],
    }


def game_from_dict(data: Mapping) -> NormalFormTeamGame:
    if data.get("type", "normal_form") != "normal_form":
        raise ValueError(f"not a normal-form game document: {data.get('type')!r}")
    counts = (
        tuple(int(c) for c in data["action_counts"][0]),
        tuple(int(c) for c in data["action_counts"][1]),
    )
    shape = counts[0] + counts[1]
    payoff = np.asarray(data["payoff"], dtype=float).reshape(shape)
    return NormalFormTeamGame(
        team_sizes=(int(data["team_sizes"][0]), int(data["team_sizes"][1])),
        action_counts=counts,
        payoff=payoff,
        name=str(data.get("name", "")),
    )


def policy_to_dict(policy) -> dict:
    """Serialize a normal-form team policy (variant tag plus tables)."""
    if isinstance(policy, ProductPolicy):
        return {
            "kind": "product",
            "members": [
                {"n_actions": m.n_actions, "dist": [float(x) for x in m.dist(NF_OBS)]}
                for m in policy.members
            ],
        }
    if isinstance(policy, SharedPolicy):
        return {
            "kind": "shared",
            "n_members": policy.n_members,
            "policy": {
                "n_actions": policy.policy.n_actions,
                "dist": [float(x) for x in policy.policy.dist(NF_OBS)],
            },
        }
    if isinstance(policy, JointMixPolicy):
        return {
            "kind": "jointmix",
            "atoms": [list(a) for a in policy.atoms],
            "weights": [float(w) for w in policy.weights],
        }
    raise TypeError(f"cannot serialize {policy!r}")


def policy_from_dict(data: Mapping):
    kind = data["kind"]
    if kind == "product":
        return ProductPolicy(
            [
                IndividualPolicy(m["n_actions"], {NF_OBS: m["dist"]})
                for m in data["members"]
            ]
        )
    if kind == "shared":
        p = data["policy"]
        return SharedPolicy(
            IndividualPolicy(p["n_actions"], {NF_OBS: p["dist"]}), int(data["n_members"])
        )
    if kind == "jointmix":
        return JointMixPolicy([tuple(a) for a in data["atoms"]], data["weights"])
    raise ValueError(f"unknown policy kind {kind!r}")


def save_game(game: NormalFormTeamGame, path) -> None:
    with open(path, "w") as fh:
        json.dump(game_to_dict(game), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_game(path) -> NormalFormTeamGame:
    with open(path) as fh:
        return game_from_dict(json.load(fh))
