"""Matrix maxmin solving and the team best-response oracles.

Four oracles with different cooperative ability:

- joint: argmax over pure team joint actions/policies (full coordination),
- shared: best shared (parameter-tied) policy, members sampling independently,
- individual: round-robin iterated unilateral best responses,
- sebr: sequential coordinate ascent where each member best-responds exactly
  given its predecessors' updated policies, logged through a communication
  channel and justified by the per-member advantage decomposition.

All oracles are pure functions, deterministic given (inputs, seed), and
break ties lexicographically on action indices.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DIST_TOL,
    NF_OBS,
    ConstantPolicy,
    DimensionError,
    EvalConfig,
    EvaluationError,
    Game,
    HashPolicy,
    IndividualPolicy,
    JointMixPolicy,
    NormalFormTeamGame,
    ProductPolicy,
    SharedPolicy,
    StochasticTeamGame,
    as_mixture,
    check_team_policy,
    team_action_dist,
    team_value,
)

#: Support-enumeration is used when the smaller matrix side has at most this
#: many strategies (larger instances go through the self-play loop).
SUPPORT_ENUM_MAX = 6
_SUPPORT_ENUM_COST_CAP = 300_000


def subseed(seed: int, name: str) -> int:
    """Stable named sub-stream of a root seed."""
    digest = hashlib.blake2b(
        name.encode(), digest_size=8, key=int(seed).to_bytes(8, "little", signed=True)
    ).digest()
    return int.from_bytes(digest, "little") >> 1


class MaxminConvergenceError(RuntimeError):
    """The iterative solver hit its cap; carries the best solution so far."""

    def __init__(self, best: "MaxminSolution | None", tol: float, iterations: int):
        super().__init__(
            f"maxmin gap {best.gap if best else float('inf'):.3g} > tol {tol:g} "
            f"after {iterations} iterations"
        )
        self.best = best


class ExactBRUnsupported(RuntimeError):
    """Exact tabular best response is not expressible for this game/policy."""


@dataclass(frozen=True)
class MaxminSolution:
    """Equilibrium of a zero-sum matrix game with a best-response gap
    certificate: gap is the larger of the two sides' best-response slacks."""

    row_mix: np.ndarray
    col_mix: np.ndarray
    value: float
    gap: float

    def __post_init__(self):
        for name in ("row_mix", "col_mix"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.min(initial=0.0) < -DIST_TOL or abs(arr.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} is not a probability vector")
            arr = np.clip(arr, 0.0, None)
            arr = arr / arr.sum()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "gap", max(float(self.gap), 0.0))

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "gap": float(self.gap),
            "row_mix": [float(x) for x in self.row_mix],
            "col_mix": [float(x) for x in self.col_mix],
        }


def _certify(matrix: np.ndarray, x: np.ndarray, y: np.ndarray) -> MaxminSolution:
    x = np.clip(x, 0.0, None)
    x = x / x.sum()
    y = np.clip(y, 0.0, None)
    y = y / y.sum()
    value = float(x @ matrix @ y)
    row_slack = float((matrix @ y).max() - value)
    col_slack = float(value - (x @ matrix).min())
    return MaxminSolution(x, y, value, max(row_slack, col_slack, 0.0))


def _equalize(matrix: np.ndarray, rows, cols) -> MaxminSolution | None:
    """Solve the square equalization system on a support pair and certify
    on the full matrix.  Returns None for singular or infeasible systems."""
    k = len(rows)
    sub = matrix[np.ix_(rows, cols)]
    lhs_x = np.zeros((k + 1, k + 1))
    lhs_x[:k, :k] = sub.T
    lhs_x[:k, k] = -1.0
    lhs_x[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    lhs_y = np.zeros((k + 1, k + 1))
    lhs_y[:k, :k] = sub
    lhs_y[:k, k] = -1.0
    lhs_y[k, :k] = 1.0
    try:
        sol_x = np.linalg.solve(lhs_x, rhs)
        sol_y = np.linalg.solve(lhs_y, rhs)
    except np.linalg.LinAlgError:
        return None
    xs, ys = sol_x[:k], sol_y[:k]
    if xs.min() < -1e-9 or ys.min() < -1e-9:
        return None
    x = np.zeros(matrix.shape[0])
    y = np.zeros(matrix.shape[1])
    x[list(rows)] = np.clip(xs, 0.0, None)
    y[list(cols)] = np.clip(ys, 0.0, None)
    if x.sum() <= 0 or y.sum() <= 0:
        return None
    return _certify(matrix, x, y)


def _support_enumeration(matrix: np.ndarray, tol: float) -> MaxminSolution | None:
    rows, cols = matrix.shape
    best = None
    for k in range(1, min(rows, cols) + 1):
        for s_rows in itertools.combinations(range(rows), k):
            for s_cols in itertools.combinations(range(cols), k):
                sol = _equalize(matrix, s_rows, s_cols)
                if sol is None:
                    continue
                if sol.gap <= tol:
                    return sol
                if best is None or sol.gap < best.gap:
                    best = sol
    return best


def _refine_supports(matrix, x_avg, y_avg, tol) -> MaxminSolution | None:
    """Guess supports from approximate strategies and solve them exactly."""
    rows, cols = matrix.shape
    best = None
    tried = set()
    for thresh in (1e-2, 1e-4, 1e-8):
        sup_r = [i for i in range(rows) if x_avg[i] > thresh * x_avg.max()]
        sup_c = [j for j in range(cols) if y_avg[j] > thresh * y_avg.max()]
        k = min(max(len(sup_r), len(sup_c)), rows, cols)
        top_r = tuple(sorted(np.argsort(-x_avg, kind="stable")[:k]))
        top_c = tuple(sorted(np.argsort(-y_avg, kind="stable")[:k]))
        if (top_r, top_c) in tried:
            continue
        tried.add((top_r, top_c))
        sol = _equalize(matrix, top_r, top_c)
        if sol is not None and (best is None or sol.gap < best.gap):
            best = sol
        if best is not None and best.gap <= tol:
            return best
    return best


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max())
    return z / z.sum()


def _mw_solve(matrix: np.ndarray, tol: float, cap: int) -> MaxminSolution:
    """Optimistic multiplicative-weights self-play with periodic support
    refinement; terminates as soon as the gap certificate meets tol."""
    rows, cols = matrix.shape
    lo, hi = float(matrix.min()), float(matrix.max())
    scale = (hi - lo) or 1.0
    norm = (matrix - lo) / scale
    logx = np.zeros(rows)
    logy = np.zeros(cols)
    gx_prev = np.zeros(rows)
    gy_prev = np.zeros(cols)
    x_sum = np.zeros(rows)
    y_sum = np.zeros(cols)
    eta = 0.5
    best: MaxminSolution | None = None
    check_at = 25
    for t in range(1, cap + 1):
        x = _softmax(logx)
        y = _softmax(logy)
        x_sum += x
        y_sum += y
        gx = norm @ y
        gy = norm.T @ x
        logx += eta * (2.0 * gx - gx_prev)
        logy -= eta * (2.0 * gy - gy_prev)
        gx_prev, gy_prev = gx, gy
        if t >= check_at or t == cap:
            check_at = min(check_at * 2, check_at + 5000)
            x_avg = x_sum / x_sum.sum()
            y_avg = y_sum / y_sum.sum()
            for cand in (
                _certify(matrix, x_avg, y_avg),
                _refine_supports(matrix, x_avg, y_avg, tol),
                _certify(matrix, x, y),
            ):
                if cand is not None and (best is None or cand.gap < best.gap):
                    best = cand
            if best is not None and best.gap <= tol:
                return best
    raise MaxminConvergenceError(best, tol, cap)


def solve_matrix_maxmin(
    matrix, tol: float = 1e-9, max_iterations: int = 500_000
) -> MaxminSolution:
    """Maxmin (equilibrium) of a zero-sum matrix game.

    The row player maximizes ``row_mix @ matrix @ col_mix``.  Small games
    (smaller side at most SUPPORT_ENUM_MAX) are solved by square-support
    enumeration; larger ones by a multiplicative-weights self-play loop
    with a best-response gap certificate.  Deterministic for fixed inputs.
    """
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError("matrix must be 2-d with at least one row and column")
    if not np.isfinite(mat).all():
        raise ValueError("matrix entries must be finite")
    rows, cols = mat.shape
    if min(rows, cols) <= SUPPORT_ENUM_MAX:
        cost = sum(
            math.comb(rows, k) * math.comb(cols, k)
            for k in range(1, min(rows, cols) + 1)
        )
        if cost <= _SUPPORT_ENUM_COST_CAP:
            sol = _support_enumeration(mat, tol)
            if sol is not None and sol.gap <= tol:
                return sol
    return _mw_solve(mat, tol, max_iterations)


# ---------------------------------------------------------------------------
# Reward tensors for normal-form oracles


def _mixture_joint_dist(game: NormalFormTeamGame, team: int, mixture) -> np.ndarray:
    out = np.zeros(game.joint_count(team))
    for policy, w in as_mixture(mixture):
        out += w * team_action_dist(game, team, policy)
    return out


def team_reward_tensor(game: NormalFormTeamGame, team: int, opponent) -> np.ndarray:
    """Expected reward of ``team`` for each of its pure joint actions
    against a fixed opponent policy or mixture; one axis per member."""
    mat = game.matrix()
    if team == 1:
        d2 = _mixture_joint_dist(game, 2, opponent)
        return (mat @ d2).reshape(game.action_counts[0])
    d1 = _mixture_joint_dist(game, 1, opponent)
    return (-(d1 @ mat)).reshape(game.action_counts[1])


def _members_view(policy) -> tuple:
    if isinstance(policy, (ProductPolicy, SharedPolicy)):
        return policy.members
    raise DimensionError(
        "a distributed (product or shared) team policy is required here"
    )


def _contract(tensor: np.ndarray, dists: list, fixed: dict) -> float:
    """Contract member axes: fixed axes are indexed, the rest averaged."""
    out = tensor
    for axis in reversed(range(tensor.ndim)):
        if axis in fixed:
            out = np.take(out, fixed[axis], axis=axis)
        else:
            out = np.tensordot(out, dists[axis], axes=([axis], [0]))
    return float(out)


def _member_values(tensor: np.ndarray, dists: list, member: int) -> np.ndarray:
    """Team-reward vector over one member's actions, others at their dists."""
    out = np.moveaxis(tensor, member, 0)
    rest = [d for i, d in enumerate(dists) if i != member]
    for d in reversed(rest):
        out = out @ d
    return out


# ---------------------------------------------------------------------------
# Stochastic-game machinery: layered reachability and exact unit BR


def _policy_support(policy_like, obs) -> list[tuple[int, float]]:
    d = policy_like.dist(obs)
    return [(int(a), float(d[a])) for a in np.nonzero(d)[0]]


def _others_support(game, team, own_members, unit, opp_policy, state):
    """Support over all non-unit players' actions: list of
    ((team1_actions_template, team2_actions_template), prob) with the unit
    members' slots set to None."""
    opp_team = 3 - team
    own_obs = game.member_observations(team, state)
    opp_obs = game.member_observations(opp_team, state)
    opp_members = _members_view(opp_policy)
    slots = []
    for i, member in enumerate(own_members):
        if i in unit:
            slots.append([(None, 1.0)])
        else:
            slots.append(_policy_support(member, own_obs[i]))
    for i, member in enumerate(opp_members):
        slots.append(_policy_support(member, opp_obs[i]))
    n_own = len(own_members)
    out = []
    for combo in itertools.product(*slots):
        prob = math.prod(p for _, p in combo)
        if prob <= 0.0:
            continue
        acts = [a for a, _ in combo]
        own_acts, opp_acts = acts[:n_own], acts[n_own:]
        out.append(((own_acts, opp_acts), prob))
    return out


def _assemble_joint(team, own_template, opp_acts, unit, unit_action):
    own = list(own_template)
    for pos, member in enumerate(unit):
        own[member] = unit_action[pos]
    if team == 1:
        return (tuple(own), tuple(opp_acts))
    return (tuple(opp_acts), tuple(own))


def _unit_action_space(game, team, unit) -> list[tuple[int, ...]]:
    counts = game.action_counts[team - 1]
    return list(itertools.product(*(range(counts[m]) for m in unit)))


def _unit_best_response_exact(
    game: StochasticTeamGame,
    team: int,
    unit: tuple[int, ...],
    own_members: tuple,
    opp_policy,
    cfg: EvalConfig,
):
    """Exact finite-horizon best response of a unit of members (all others,
    including the single opponent team policy, held fixed).

    Backward induction over the layered reachable graph.  Requires the unit
    members' observations to determine the dynamic-programming stage (the
    built-in skirmish encodes the step counter in the state); raises
    ExactBRUnsupported otherwise.  Returns (member tables, value).
    """
    unit_actions = _unit_action_space(game, team, unit)
    layers: list[set] = [{s for s, p in game.initial if p > 0.0}]
    ops = 0
    for _ in range(game.horizon):
        nxt = set()
        for state in layers[-1]:
            others = _others_support(game, team, own_members, unit, opp_policy, state)
            ops += len(others) * len(unit_actions)
            if ops > cfg.exact_bound:
                raise EvaluationError(
                    "exact best-response budget exceeded; raise EvalConfig.exact_bound"
                )
            for (own_t, opp_t), _p in others:
                for ua in unit_actions:
                    joint = _assemble_joint(team, own_t, opp_t, unit, ua)
                    for s2, pt in game.successors(state, joint):
                        if pt > 0.0:
                            nxt.add(s2)
        layers.append(nxt)
    sign = 1.0 if team == 1 else -1.0
    values: dict = {s: 0.0 for s in layers[game.horizon]}
    assign: list[dict] = [dict() for _ in unit]
    for t in reversed(range(game.horizon)):
        new_values: dict = {}
        for state in sorted(layers[t], key=repr):
            q = {ua: 0.0 for ua in unit_actions}
            for (own_t, opp_t), p in _others_support(
                game, team, own_members, unit, opp_policy, state
            ):
                for ua in unit_actions:
                    joint = _assemble_joint(team, own_t, opp_t, unit, ua)
                    tail = sum(
                        pt * values[s2] for s2, pt in game.successors(state, joint)
                    )
                    q[ua] += p * (
                        sign * game.step_reward(state, joint) + game.discount * tail
                    )
            best_val = max(q.values())
            # unit_actions is lexicographically ordered: first max wins
            best_ua = next(ua for ua in unit_actions if q[ua] == best_val)
            new_values[state] = best_val
            for pos, member in enumerate(unit):
                obs = game.member_obs(team, member, state)
                prev = assign[pos].get(obs)
                if prev is None:
                    assign[pos][obs] = best_ua[pos]
                elif prev != best_ua[pos]:
                    raise ExactBRUnsupported(
                        "member observations do not determine the decision stage; "
                        "exact tabular best response is not expressible"
                    )
        values = new_values
    value = sum(p * values[s] for s, p in game.initial if p > 0.0)
    counts = game.action_counts[team - 1]
    tables = []
    for pos, member in enumerate(unit):
        tables.append(
            IndividualPolicy(
                counts[member],
                {
                    obs: np.eye(counts[member])[a]
                    for obs, a in assign[pos].items()
                },
                fallback=own_members[member],
            )
        )
    return tables, float(value)


def _occupancy_and_values(game, team, own_members, opp_policy, cfg):
    """Discounted state occupancies and on-policy values for one opponent
    atom, everything held fixed.  Returns (occ, values) keyed by (t, state)."""
    dist = {}
    for s, p in game.initial:
        if p > 0.0:
            dist[s] = dist.get(s, 0.0) + p
    occ: dict = {}
    per_state_support: dict = {}
    layer_states = [dict(dist)]
    for t in range(game.horizon):
        nxt: dict = {}
        for state, p_state in layer_states[-1].items():
            occ[(t, state)] = occ.get((t, state), 0.0) + (game.discount**t) * p_state
            support = _others_support(game, team, own_members, (), opp_policy, state)
            per_state_support[(t, state)] = support
            for (own_t, opp_t), p in support:
                joint = _assemble_joint(team, own_t, opp_t, (), ())
                for s2, pt in game.successors(state, joint):
                    if pt > 0.0:
                        nxt[s2] = nxt.get(s2, 0.0) + p_state * p * pt
        layer_states.append(nxt)
    sign = 1.0 if team == 1 else -1.0
    values = {s: 0.0 for s in layer_states[game.horizon]}
    all_values: dict = {}
    for t in reversed(range(game.horizon)):
        new_values = {}
        for state in layer_states[t]:
            total = 0.0
            for (own_t, opp_t), p in per_state_support[(t, state)]:
                joint = _assemble_joint(team, own_t, opp_t, (), ())
                tail = sum(pt * values[s2] for s2, pt in game.successors(state, joint))
                total += p * (sign * game.step_reward(state, joint) + game.discount * tail)
            new_values[state] = total
            all_values[(t, state)] = total
        values = new_values
    return occ, all_values, layer_states


def _unit_improve_weighted(
    game, team, unit, own_members, opp_atoms, cfg, rounds: int = 20
):
    """Occupancy-weighted greedy improvement of the unit's policy against a
    mixture of opponent atoms, iterated to a local fixed point.

    Against a non-degenerate mixture the member faces a hidden opponent
    identity, so exact best response is a POMDP; this greedy scheme is the
    tabular analogue of on-policy improvement and is paired with a
    keep-if-better guard by the callers.
    """
    counts = game.action_counts[team - 1]
    unit_actions = _unit_action_space(game, team, unit)
    members = list(own_members)

    def full_value(mems) -> float:
        own_policy = ProductPolicy(mems)
        return sum(
            w * team_value(game, team, own_policy, atom, cfg)
            for atom, w in opp_atoms
        )

    value = full_value(members)
    for _ in range(rounds):
        qbar: dict = {}
        for atom, w in opp_atoms:
            occ, vals, layers = _occupancy_and_values(game, team, members, atom, cfg)
            sign = 1.0 if team == 1 else -1.0
            for t in range(game.horizon):
                for state, _p in layers[t].items():
                    d = occ.get((t, state), 0.0)
                    if d <= 0.0:
                        continue
                    key = tuple(game.member_obs(team, m, state) for m in unit)
                    row = qbar.setdefault(key, {ua: 0.0 for ua in unit_actions})
                    for (own_t, opp_t), p in _others_support(
                        game, team, members, unit, atom, state
                    ):
                        for ua in unit_actions:
                            joint = _assemble_joint(team, own_t, opp_t, unit, ua)
                            nxt = game.successors(state, joint)
                            tail = sum(
                                pt * vals.get((t + 1, s2), 0.0) for s2, pt in nxt
                            )
                            row[ua] += (
                                w
                                * d
                                * p
                                * (
                                    sign * game.step_reward(state, joint)
                                    + game.discount * tail
                                )
                            )
        tables = [dict() for _ in unit]
        for key in sorted(qbar, key=repr):
            row = qbar[key]
            best_val = max(row.values())
            best_ua = next(ua for ua in unit_actions if row[ua] == best_val)
            for pos, _m in enumerate(unit):
                tables[pos][key[pos]] = best_ua[pos]
        candidate = list(members)
        for pos, member in enumerate(unit):
            candidate[member] = IndividualPolicy(
                counts[member],
                {obs: np.eye(counts[member])[a] for obs, a in tables[pos].items()},
                fallback=members[member],
            )
        cand_value = full_value(candidate)
        if cand_value > value + 1e-15:
            members = candidate
            value = cand_value
        else:
            break
    return [members[m] for m in unit], value


# ---------------------------------------------------------------------------
# Best-response oracles


def best_response_joint(game: Game, opponent, team: int, cfg: EvalConfig | None = None):
    """Fully correlated best response: the best pure team joint action
    (normal form, returned as a degenerate joint mix) or the centralized
    deterministic joint policy (stochastic, returned as a product of
    deterministic member policies).  Ties break to the lexicographically
    smallest joint action."""
    cfg = cfg or EvalConfig()
    if game.is_normal_form:
        values = team_reward_tensor(game, team, opponent).ravel()
        idx = int(np.argmax(values))
        joint = game.joint_actions(team)[idx]
        return JointMixPolicy.pure(joint), float(values[idx])
    atoms = as_mixture(opponent)
    unit = tuple(range(game.team_sizes[team - 1]))
    counts = game.action_counts[team - 1]
    base = [ConstantPolicy(c, 0) for c in counts]
    if len(atoms) == 1:
        tables, value = _unit_best_response_exact(
            game, team, unit, tuple(base), atoms[0][0], cfg
        )
        return ProductPolicy(tables), value
    tables, value = _unit_improve_weighted(game, team, unit, tuple(base), atoms, cfg)
    return ProductPolicy(tables), value


def best_response_individual(
    game: Game,
    opponent,
    team: int,
    start: ProductPolicy,
    sweeps: int = 50,
    cfg: EvalConfig | None = None,
) -> ProductPolicy:
    """Round-robin iterated pure unilateral best responses until a fixed
    point or the sweep cap.  A member switches only on strict improvement,
    so the team value never decreases across updates."""
    cfg = cfg or EvalConfig()
    check_team_policy(game, team, start)
    members = list(start.members)
    n = len(members)
    for _ in range(sweeps):
        changed = False
        for m in range(n):
            new_member, improved = _member_update(game, team, m, members, opponent, cfg)
            if improved:
                members[m] = new_member
                changed = True
        if not changed:
            break
    return ProductPolicy(members)


def _member_update(game, team, member, members, opponent, cfg):
    """One member's exact pure best response, switch on strict improvement.

    Returns (policy, changed).  Normal-form updates are closed-form; the
    stochastic path uses exact backward induction for a single opponent
    atom and occupancy-weighted improvement with a keep-if-better guard
    for mixtures.
    """
    if game.is_normal_form:
        tensor = team_reward_tensor(game, team, opponent)
        dists = [m.dist(NF_OBS) for m in members]
        values = _member_values(tensor, dists, member)
        current = float(values @ dists[member])
        best = int(np.argmax(values))
        if values[best] > current:
            return IndividualPolicy.deterministic(len(values), best), True
        return members[member], False
    atoms = as_mixture(opponent)
    current = sum(
        w * team_value(game, team, ProductPolicy(members), atom, cfg)
        for atom, w in atoms
    )
    if len(atoms) == 1:
        tables, value = _unit_best_response_exact(
            game, team, (member,), tuple(members), atoms[0][0], cfg
        )
    else:
        tables, value = _unit_improve_weighted(
            game, team, (member,), tuple(members), atoms, cfg
        )
    if value > current + 1e-15:
        return tables[0], True
    return members[member], False


def _shared_value(tensor: np.ndarray, dist: np.ndarray) -> float:
    out = tensor
    for _ in range(tensor.ndim):
        out = out @ dist
    return float(out)


def _quadratic_simplex_max(q: np.ndarray):
    """Exact maximum of p^T Q p over the simplex via KKT support
    enumeration (team of two members)."""
    n = q.shape[0]
    sym = q + q.T
    best_val, best_p = -math.inf, None
    for a in range(n):
        p = np.zeros(n)
        p[a] = 1.0
        val = float(p @ q @ p)
        if val > best_val:
            best_val, best_p = val, p
    for size in range(2, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            lhs = np.zeros((size + 1, size + 1))
            lhs[:size, :size] = sym[np.ix_(idx, idx)]
            lhs[:size, size] = -1.0
            lhs[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            try:
                sol = np.linalg.solve(lhs, rhs)
            except np.linalg.LinAlgError:
                continue
            ps = sol[:size]
            if ps.min() < -1e-12:
                continue
            p = np.zeros(n)
            p[idx] = np.clip(ps, 0.0, None)
            p = p / p.sum()
            val = float(p @ q @ p)
            if val > best_val + 1e-15:
                best_val, best_p = val, p
    return best_p, best_val


def _two_action_poly_max(tensor: np.ndarray):
    """Exact maximum over q in [0,1] of the shared value of a 2-action
    team of any size (a degree-n polynomial in q)."""
    n = tensor.ndim
    coeffs = np.zeros(n + 1)
    for joint in itertools.product(range(2), repeat=n):
        poly = np.array([1.0])
        for a in joint:
            factor = np.array([0.0, 1.0]) if a == 1 else np.array([1.0, -1.0])
            poly = np.convolve(poly, factor)
        coeffs[: len(poly)] += tensor[joint] * poly
    deriv = np.polynomial.polynomial.polyder(coeffs)
    candidates = [0.0, 1.0]
    if np.any(np.abs(deriv) > 0):
        for root in np.polynomial.polynomial.polyroots(deriv):
            if abs(root.imag) < 1e-12 and -1e-12 <= root.real <= 1 + 1e-12:
                candidates.append(min(max(float(root.real), 0.0), 1.0))
    vals = [
        (float(np.polynomial.polynomial.polyval(qq, coeffs)), qq) for qq in candidates
    ]
    best_val, best_q = max(vals, key=lambda t: (t[0], -t[1]))
    return np.array([1.0 - best_q, best_q]), best_val


def _ascent_simplex_max(tensor: np.ndarray, seed: int, starts: int = 10):
    """Seeded multi-start ascent for shared teams beyond the exact cases."""
    n_actions = tensor.shape[0]
    n = tensor.ndim
    rng = np.random.default_rng(seed)
    best_val, best_p = -math.inf, None
    inits = [np.full(n_actions, 1.0 / n_actions)]
    inits += [rng.dirichlet(np.ones(n_actions)) for _ in range(starts)]
    for p in inits:
        p = p.copy()
        for _ in range(200):
            grad = tensor
            for _ in range(n - 1):
                grad = grad @ p
            new_p = np.clip(p + 0.5 * (grad - grad @ p * np.ones(n_actions)), 0, None)
            if new_p.sum() <= 0:
                break
            new_p /= new_p.sum()
            if np.abs(new_p - p).max() < 1e-12:
                p = new_p
                break
            p = new_p
        val = _shared_value(tensor, p)
        if val > best_val:
            best_val, best_p = val, p
    return best_p, best_val


def best_response_shared(
    game: Game, opponent, team: int, cfg: EvalConfig | None = None, seed: int = 0
):
    """Best shared policy: pure shared actions by enumeration, refined by an
    exact mixed-shared search (exact for two-member teams and for 2-action
    teams of any size; seeded ascent otherwise).  Returns the better of the
    pure and mixed candidates."""
    cfg = cfg or EvalConfig()
    counts = game.action_counts[team - 1]
    if len(set(counts)) != 1:
        raise DimensionError("shared best response requires homogeneous action spaces")
    n_actions, n_members = counts[0], len(counts)
    if game.is_normal_form:
        tensor = team_reward_tensor(game, team, opponent)
        pure_vals = [tensor[(a,) * n_members] for a in range(n_actions)]
        best_a = int(np.argmax(pure_vals))
        best_val = float(pure_vals[best_a])
        best_dist = np.eye(n_actions)[best_a]
        if n_members == 2:
            mix_p, mix_val = _quadratic_simplex_max(tensor)
        elif n_actions == 2:
            mix_p, mix_val = _two_action_poly_max(tensor)
        else:
            mix_p, mix_val = _ascent_simplex_max(tensor, seed)
        if mix_p is not None and mix_val > best_val + 1e-15:
            best_dist, best_val = mix_p, float(mix_val)
        policy = SharedPolicy(
            IndividualPolicy(n_actions, {NF_OBS: best_dist}), n_members
        )
        return policy, best_val
    atoms = as_mixture(opponent)
    obs_set = _reachable_member_obs(game, team, cfg)
    n_tables = n_actions ** len(obs_set)
    if n_tables > 4096:
        raise EvaluationError(
            f"{n_tables} pure shared policies exceed the enumeration bound"
        )
    best_val, best_policy = -math.inf, None
    for assignment in itertools.product(range(n_actions), repeat=len(obs_set)):
        table = {
            obs: np.eye(n_actions)[a] for obs, a in zip(obs_set, assignment)
        }
        policy = SharedPolicy(IndividualPolicy(n_actions, table), n_members)
        val = sum(w * team_value(game, team, policy, atom, cfg) for atom, w in atoms)
        if val > best_val + 1e-15:
            best_val, best_policy = val, policy
    return best_policy, float(best_val)


def _reachable_member_obs(game: StochasticTeamGame, team: int, cfg) -> list:
    """Member observations reachable under any play, enumeration-bounded."""
    states = {s for s, p in game.initial if p > 0.0}
    seen = set(states)
    obs_set = set()
    frontier = list(states)
    joints = list(
        itertools.product(
            itertools.product(*(range(c) for c in game.action_counts[0])),
            itertools.product(*(range(c) for c in game.action_counts[1])),
        )
    )
    ops = 0
    for _ in range(game.horizon):
        nxt = []
        for state in frontier:
            for member in range(game.team_sizes[team - 1]):
                obs_set.add(game.member_obs(team, member, state))
            for joint in joints:
                ops += 1
                if ops > cfg.exact_bound:
                    raise EvaluationError(
                        "observation enumeration budget exceeded"
                    )
                for s2, pt in game.successors(state, joint):
                    if pt > 0.0 and s2 not in seen:
                        seen.add(s2)
                        nxt.append(s2)
        frontier = nxt
    return sorted(obs_set, key=repr)


# ---------------------------------------------------------------------------
# Advantage decomposition and SeBR


def advantage_decompose(
    game: Game,
    p1,
    p2,
    team: int,
    team_action: tuple[int, ...],
    obs=None,
    order: tuple[int, ...] | None = None,
    cfg: EvalConfig | None = None,
) -> np.ndarray:
    """Per-member advantage terms along ``order``.

    Term m conditions the members earlier in the order on their given
    actions, marginalizes later members under the team's own policy, and
    always marginalizes the opponent under its policy.  The terms sum to
    the joint advantage of ``team_action`` exactly.
    """
    cfg = cfg or EvalConfig()
    own = p1 if team == 1 else p2
    opponent = p2 if team == 1 else p1
    members = _members_view(own)
    n = len(members)
    order = tuple(order) if order is not None else tuple(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the team's members")
    if game.is_normal_form:
        tensor = team_reward_tensor(game, team, opponent)
        dists = [m.dist(NF_OBS) for m in members]
    else:
        if obs is None:
            raise ValueError("a joint observation is required for stochastic games")
        tensor = _stochastic_q_tensor(game, team, members, opponent, obs, cfg)
        obs_list = game.member_observations(team, obs)
        dists = [m.dist(o) for m, o in zip(members, obs_list)]
    partials = []
    fixed: dict[int, int] = {}
    partials.append(_contract(tensor, dists, fixed))
    for member in order:
        fixed[member] = int(team_action[member])
        partials.append(_contract(tensor, dists, fixed))
    return np.diff(np.array(partials))


def _stochastic_q_tensor(game, team, members, opponent, obs, cfg):
    """Q(obs, .) over the team's joint actions with the opponent
    marginalized, at the full remaining horizon."""
    own_policy = ProductPolicy(members)
    p1 = own_policy if team == 1 else opponent
    p2 = opponent if team == 1 else own_policy
    layers = [{obs}]
    for _ in range(game.horizon):
        nxt = set()
        for state in layers[-1]:
            for (own_t, opp_t), _p in _others_support(
                game, team, members, (), opponent, state
            ):
                joint = _assemble_joint(team, own_t, opp_t, (), ())
                for s2, pt in game.successors(state, joint):
                    if pt > 0.0:
                        nxt.add(s2)
        # the team may deviate at the root: expand root successors fully
        if len(layers) == 1:
            for joint in _all_joints(game):
                for s2, pt in game.successors(obs, joint):
                    if pt > 0.0:
                        nxt.add(s2)
        layers.append(nxt)
    sign = 1.0 if team == 1 else -1.0
    values = {s: 0.0 for s in layers[game.horizon]}
    for t in reversed(range(1, game.horizon)):
        new_values = {}
        for state in layers[t]:
            total = 0.0
            for (own_t, opp_t), p in _others_support(
                game, team, members, (), opponent, state
            ):
                joint = _assemble_joint(team, own_t, opp_t, (), ())
                tail = sum(pt * values[s2] for s2, pt in game.successors(state, joint))
                total += p * (sign * game.step_reward(state, joint) + game.discount * tail)
            new_values[state] = total
        values = new_values
    counts = game.action_counts[team - 1]
    tensor = np.zeros(counts)
    unit = tuple(range(len(counts)))
    for (own_t, opp_t), p in _others_support(game, team, members, unit, opponent, obs):
        for ua in itertools.product(*(range(c) for c in counts)):
            joint = _assemble_joint(team, own_t, opp_t, unit, ua)
            tail = sum(pt * values[s2] for s2, pt in game.successors(obs, joint))
            tensor[ua] += p * (
                sign * game.step_reward(obs, joint) + game.discount * tail
            )
    return tensor


def _all_joints(game):
    return itertools.product(
        itertools.product(*(range(c) for c in game.action_counts[0])),
        itertools.product(*(range(c) for c in game.action_counts[1])),
    )


@dataclass(frozen=True)
class ChannelEntry:
    member: int
    policy_summary: str
    advantages: tuple[float, ...]
    team_reward: float


class CommChannel:
    """Ordered log of member updates within one SeBR sweep.

    Entries appear in the sequential order and the log is cleared at each
    sweep start.  The channel is confined to a single sebr invocation.
    """

    def __init__(self):
        self.entries: list[ChannelEntry] = []

    def clear(self) -> None:
        self.entries = []

    def log(self, entry: ChannelEntry) -> None:
        self.entries.append(entry)


def channel_to_dicts(channel: CommChannel) -> list[dict]:
    """Structured-text form of a channel log for audit output."""
    return [
        {
            "member": e.member,
            "policy": e.policy_summary,
            "advantages": list(e.advantages),
            "team_reward": e.team_reward,
        }
        for e in channel.entries
    ]


def trace_to_dicts(trace: list) -> list[dict]:
    """Structured-text form of a sebr update trace for audit output."""
    return [
        {
            "restart": r,
            "sweep": s,
            "member": m,
            "value_before": before,
            "value_after": after,
        }
        for r, s, m, before, after in trace
    ]


def _policy_summary(member_policy) -> str:
    if isinstance(member_policy, (ConstantPolicy,)):
        return f"const:{member_policy.action}"
    if isinstance(member_policy, IndividualPolicy):
        a = member_policy.pure_action(
            member_policy.observations()[0] if member_policy.observations() else NF_OBS
        )
        return f"pure:{a}" if a is not None else "mixed"
    return type(member_policy).__name__


def sebr_starts(game: Game, team: int, incumbent, restarts: int, seed: int):
    """Start set for SeBR: the incumbent plus either every pure product
    policy (when at most ``restarts`` exist, normal form) or ``restarts``
    seeded random deterministic products."""
    counts = game.action_counts[team - 1]
    starts: list[ProductPolicy] = []
    if incumbent is not None:
        starts.append(_as_product(incumbent, counts))
    if restarts > 0:
        if game.is_normal_form and int(np.prod(counts)) <= restarts:
            for joint in itertools.product(*(range(c) for c in counts)):
                starts.append(ProductPolicy.pure(joint, counts))
        else:
            for i in range(restarts):
                starts.append(
                    ProductPolicy(
                        [
                            HashPolicy(c, subseed(seed, f"sebr-start/{i}/{m}"))
                            for m, c in enumerate(counts)
                        ]
                    )
                )
    if not starts:
        starts.append(ProductPolicy([ConstantPolicy(c, 0) for c in counts]))
    return starts


def _as_product(policy, counts) -> ProductPolicy:
    if isinstance(policy, ProductPolicy):
        return policy
    if isinstance(policy, SharedPolicy):
        return ProductPolicy(policy.members)
    if isinstance(policy, JointMixPolicy):
        top = int(np.argmax(policy.weights))
        return ProductPolicy.pure(policy.atoms[top], counts)
    raise DimensionError(f"cannot convert {policy!r} to a product policy")


def sebr(
    game: Game,
    opponent,
    team: int,
    order: tuple[int, ...] | None = None,
    start: ProductPolicy | None = None,
    restarts: int = 4,
    max_sweeps: int = 50,
    seed: int = 0,
    channel: CommChannel | None = None,
    trace: list | None = None,
    cfg: EvalConfig | None = None,
) -> ProductPolicy:
    """Sequential best response: members update in ``order``, each
    best-responding exactly given predecessors' updated policies and
    successors' current policies, against a fixed opponent policy or
    mixture.  Each member update weakly improves the team value; a sweep
    with no change terminates the ascent.  The highest-value result over
    the restart set is returned (ties keep the earliest start).

    ``trace``, when given, collects (restart, sweep, member, value_before,
    value_after) tuples across all updates for auditing.
    """
    cfg = cfg or EvalConfig()
    channel = channel if channel is not None else CommChannel()
    n = game.team_sizes[team - 1]
    order = tuple(order) if order is not None else tuple(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the team's members")
    atoms = as_mixture(opponent)
    best_policy, best_value = None, -math.inf

    def value_of(members) -> float:
        return sum(
            w * team_value(game, team, ProductPolicy(members), atom, cfg)
            for atom, w in atoms
        )

    for restart_idx, start_policy in enumerate(
        sebr_starts(game, team, start, restarts, seed)
    ):
        members = list(start_policy.members)
        value = value_of(members)
        for sweep in range(max_sweeps):
            channel.clear()
            changed = False
            for member in order:
                before = value
                new_member, improved = _member_update(
                    game, team, member, members, opponent, cfg
                )
                if improved:
                    members[member] = new_member
                    value = value_of(members)
                    changed = True
                advantages: tuple[float, ...] = ()
                if game.is_normal_form:
                    joint = ProductPolicy(members).pure_joint_action([NF_OBS] * n)
                    if joint is not None:
                        tensor = team_reward_tensor(game, team, opponent)
                        dists = [mm.dist(NF_OBS) for mm in members]
                        fixed: dict[int, int] = {}
                        partials = [_contract(tensor, dists, fixed)]
                        for mem in order:
                            fixed[mem] = joint[mem]
                            partials.append(_contract(tensor, dists, fixed))
                        advantages = tuple(
                            float(b - a) for a, b in zip(partials, partials[1:])
                        )
                channel.log(
                    ChannelEntry(
                        member=member,
                        policy_summary=_policy_summary(members[member]),
                        advantages=advantages,
                        team_reward=value,
                    )
                )
                if trace is not None:
                    trace.append((restart_idx, sweep, member, before, value))
            if not changed:
                break
        if value > best_value + 1e-15:
            best_value = value
            best_policy = ProductPolicy(members)
    return best_policy


def shared_maxmin_grid(game: NormalFormTeamGame, team: int, points: int = 10001):
    """Worst-case value of independent shared policies for a 2-action team:
    max over the shared mixing weight q of the minimum team reward across
    all opponent pure joint actions, on a q-grid of ``points`` samples."""
    counts = game.action_counts[team - 1]
    if len(set(counts)) != 1 or counts[0] != 2:
        raise DimensionError("grid shared maxmin supports 2-action homogeneous teams")
    n = len(counts)
    qs = np.linspace(0.0, 1.0, points)
    dists = np.stack([1.0 - qs, qs], axis=1)
    joint_dists = np.ones((points, 1))
    for _ in range(n):
        joint_dists = np.einsum("pi,pj->pij", joint_dists, dists).reshape(points, -1)
    mat = game.matrix()
    if team == 1:
        vals = joint_dists @ mat
    else:
        vals = joint_dists @ (-mat.T)
    worst = vals.min(axis=1)
    idx = int(np.argmax(worst))
    return float(qs[idx]), float(worst[idx])
