"""Population-based equilibrium approximation (the PSRO family).

One loop, four oracles: joint (double oracle on pure team joint actions),
shared (parameter-tied policies), individual (iterated unilateral best
responses) and sebr (sequential best response).  The loop alternates a
restricted zero-sum meta-game solve with best-response expansion and stops
when neither team's oracle gains more than the tolerance over the meta
value, or when no new entry gets appended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ConstantPolicy,
    EvalConfig,
    Game,
    ProductPolicy,
    check_team_policy,
    team_value,
)
from .oracles import (
    MaxminSolution,
    _as_product,
    best_response_individual,
    best_response_joint,
    best_response_shared,
    sebr,
    solve_matrix_maxmin,
    subseed,
)

ORACLES = ("joint", "shared", "individual", "sebr")


@dataclass(frozen=True)
class Population:
    """Per-team policy pools and the empirical meta-payoff matrix.

    ``payoffs[a, b]`` is the expected team-1 reward of team-1 entry ``a``
    against team-2 entry ``b``; every cell is present (no holes).
    """

    team1: tuple
    team2: tuple
    payoffs: np.ndarray
    eval_mode: str = "exact"
    stderr: np.ndarray | None = None

    def __post_init__(self):
        payoffs = np.asarray(self.payoffs, dtype=float)
        if payoffs.shape != (len(self.team1), len(self.team2)):
            raise ValueError(
                f"meta matrix shape {payoffs.shape} does not match population sizes "
                f"({len(self.team1)}, {len(self.team2)})"
            )
        payoffs = payoffs.copy()
        payoffs.setflags(write=False)
        object.__setattr__(self, "payoffs", payoffs)

    def entries(self, team: int) -> tuple:
        return self.team1 if team == 1 else self.team2

    def mixture(self, team: int, weights) -> list[tuple]:
        entries = self.entries(team)
        return [(e, float(w)) for e, w in zip(entries, weights, strict=True) if w > 0.0]


def initial_population(game: Game, cfg: EvalConfig | None = None) -> Population:
    """Both teams seeded with the all-zeros deterministic product policy."""
    cfg = cfg or EvalConfig()
    seeds = []
    for team in (1, 2):
        counts = game.action_counts[team - 1]
        seeds.append(ProductPolicy([ConstantPolicy(c, 0) for c in counts]))
    value = team_value(game, 1, seeds[0], seeds[1], cfg)
    return Population((seeds[0],), (seeds[1],), np.array([[value]]), cfg.mode)


def extend_population(
    game: Game, pop: Population, entry, team: int, cfg: EvalConfig | None = None
) -> Population:
    """Append one entry; only the new row or column is evaluated, existing
    cells are untouched."""
    cfg = cfg or EvalConfig()
    check_team_policy(game, team, entry)
    if team == 1:
        row = [
            team_value(game, 1, entry, opponent, cfg) for opponent in pop.team2
        ]
        payoffs = np.vstack([pop.payoffs, np.asarray(row)[None, :]])
        return replace(pop, team1=pop.team1 + (entry,), payoffs=payoffs)
    col = [team_value(game, 1, own, entry, cfg) for own in pop.team1]
    payoffs = np.hstack([pop.payoffs, np.asarray(col)[:, None]])
    return replace(pop, team2=pop.team2 + (entry,), payoffs=payoffs)


def meta_solve(payoffs, tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray, float]:
    """Restricted zero-sum equilibrium of the meta game."""
    sol: MaxminSolution = solve_matrix_maxmin(payoffs, tol=tol)
    return sol.row_mix, sol.col_mix, sol.value


@dataclass(frozen=True)
class SebrConfig:
    order: tuple[int, ...] | None = None
    restarts: int = 4
    max_sweeps: int = 50


@dataclass(frozen=True)
class PsroConfig:
    """Loop configuration; the oracle kind selects the PSRO variant:
    sebr -> S-PSRO, shared -> Team-PSRO, individual -> Indep-PSRO,
    joint -> Joint-PSRO.  ``expand_teams`` restricts which populations grow
    (a frozen opponent is treated as gain 0)."""

    oracle: str = "sebr"
    max_iterations: int = 40
    meta_tol: float = 1e-6
    gain_tol: float = 1e-6
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    expand_teams: tuple[int, ...] = (1, 2)
    sebr: SebrConfig = field(default_factory=SebrConfig)
    individual_sweeps: int = 50
    duplicate_tol: float = 1e-9

    def __post_init__(self):
        if self.oracle not in ORACLES:
            raise ValueError(f"oracle must be one of {ORACLES}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.meta_tol <= 0 or self.gain_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not self.expand_teams or any(t not in (1, 2) for t in self.expand_teams):
            raise ValueError("expand_teams must be a nonempty subset of (1, 2)")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    meta_value: float
    br_gain_1: float
    br_gain_2: float
    pop_1: int
    pop_2: int


@dataclass(frozen=True)
class PsroResult:
    population: Population
    meta_1: np.ndarray
    meta_2: np.ndarray
    value: float
    history: tuple[IterationRecord, ...]
    converged: bool
    iterations: int


def _best_entry_vs(game, team, entries, opponent_mix, cfg) -> ProductPolicy | None:
    """Population entry with the highest value against the opponent mixture
    (used as the incumbent start for local oracles)."""
    best, best_val = None, -math.inf
    for entry in entries:
        val = team_value(game, team, entry, opponent_mix, cfg)
        if val > best_val:
            best, best_val = entry, val
    return best


def _oracle_response(game, team, opponent_mix, pop, cfg: PsroConfig, iteration: int):
    """One oracle call; returns (policy, value vs the opponent mixture)."""
    eval_cfg = cfg.eval
    if cfg.oracle == "joint":
        return best_response_joint(game, opponent_mix, team, cfg=eval_cfg)
    if cfg.oracle == "shared":
        return best_response_shared(
            game, opponent_mix, team, cfg=eval_cfg,
            seed=subseed(cfg.seed, f"shared/t{team}/i{iteration}"),
        )
    incumbent = _best_entry_vs(game, team, pop.entries(team), opponent_mix, eval_cfg)
    if cfg.oracle == "individual":
        start = _as_product(incumbent, game.action_counts[team - 1])
        policy = best_response_individual(
            game, opponent_mix, team, start, sweeps=cfg.individual_sweeps, cfg=eval_cfg
        )
        return policy, team_value(game, team, policy, opponent_mix, eval_cfg)
    policy = sebr(
        game,
        opponent_mix,
        team,
        order=cfg.sebr.order,
        start=incumbent,
        restarts=cfg.sebr.restarts,
        max_sweeps=cfg.sebr.max_sweeps,
        seed=subseed(cfg.seed, f"sebr/t{team}/i{iteration}"),
        cfg=eval_cfg,
    )
    return policy, team_value(game, team, policy, opponent_mix, eval_cfg)


def _new_line(game, team, entry, pop, cfg) -> np.ndarray:
    """The meta row (team 1) or column (team 2) the entry would add."""
    opponents = pop.team2 if team == 1 else pop.team1
    if team == 1:
        return np.array([team_value(game, 1, entry, o, cfg) for o in opponents])
    return np.array([team_value(game, 1, o, entry, cfg) for o in opponents])


def _is_duplicate(line: np.ndarray, existing: np.ndarray, tol: float) -> bool:
    if existing.size == 0:
        return False
    return bool(np.any(np.max(np.abs(existing - line[None, :]), axis=1) <= tol))


def run_psro(game: Game, cfg: PsroConfig) -> PsroResult:
    """Algorithm loop: meta-solve, oracle best responses against the
    opponent meta-strategies, append non-duplicate responses, stop when
    both teams' best-response gains fall within the tolerance (restricted
    equilibrium) or the iteration cap is hit (reported, not fatal)."""
    pop = initial_population(game, cfg.eval)
    history: list[IterationRecord] = []
    converged = False
    iteration = 0
    for iteration in range(1, cfg.max_iterations + 1):
        meta_1, meta_2, value = meta_solve(pop.payoffs, cfg.meta_tol)
        gains = {1: 0.0, 2: 0.0}
        appended = False
        new_pop = pop
        for team in (1, 2):
            if team not in cfg.expand_teams:
                continue
            opponent_mix = pop.mixture(3 - team, meta_2 if team == 1 else meta_1)
            policy, br_value = _oracle_response(game, team, opponent_mix, pop, cfg, iteration)
            team_meta_value = value if team == 1 else -value
            gains[team] = br_value - team_meta_value
            if gains[team] <= cfg.gain_tol:
                continue
            line = _new_line(game, team, policy, new_pop, cfg.eval)
            existing = new_pop.payoffs if team == 1 else new_pop.payoffs.T
            if _is_duplicate(line, existing, cfg.duplicate_tol):
                continue
            new_pop = extend_population(game, new_pop, policy, team, cfg.eval)
            appended = True
        history.append(
            IterationRecord(
                iteration=iteration,
                meta_value=float(value),
                br_gain_1=float(gains[1]),
                br_gain_2=float(gains[2]),
                pop_1=len(new_pop.team1),
                pop_2=len(new_pop.team2),
            )
        )
        pop = new_pop
        if not appended:
            converged = all(gains[t] <= cfg.gain_tol for t in cfg.expand_teams)
            break
    meta_1, meta_2, value = meta_solve(pop.payoffs, cfg.meta_tol)
    return PsroResult(
        population=pop,
        meta_1=meta_1,
        meta_2=meta_2,
        value=float(value),
        history=tuple(history),
        converged=converged,
        iterations=iteration,
    )
