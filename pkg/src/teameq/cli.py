"""Reproducible experiment runner.

Subcommands: ``game`` (emit a builtin game), ``solve`` (matrix maxmin /
CTME of a normal-form game), ``verify`` (equilibrium check under a
correlation class), ``psro`` (population loop with a chosen oracle),
``eval`` (exploitability profile / rpp / elo) and ``report`` (re-emit run
artifacts as CSV or JSON-lines).

Every run writes its manifest before any result file.  All randomness
flows from the single manifest seed through named sub-streams, so two runs
with identical manifests and exact evaluation produce byte-identical
CSVs.  Exit codes: 0 success, 2 verification FAIL, 1 error.

Config precedence: command-line flags override the optional ``--config``
JSON file, which overrides built-in defaults; the merged configuration is
what the manifest records.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from .core import (
    ConstantPolicy,
    IndividualPolicy,
    NormalFormTeamGame,
    ProductPolicy,
    game_from_dict,
    game_to_dict,
    policy_from_dict,
    policy_to_dict,
)
from .deviation import (
    Joint,
    NoCorrelation,
    PivotFollowers,
    SampleFactor,
    Sequential,
    build_deviation_spec,
    verify_equilibrium,
)
from .evaluation import (
    CLASS_ORDER,
    Candidate,
    MatchLedger,
    elo_ratings,
    exploitability_profile,
    rpp,
)
from .games import (
    SadConfig,
    SkirmishConfig,
    anti_coordination,
    example1,
    grid_skirmish,
    random_team_game,
    sad,
)
from .oracles import solve_matrix_maxmin
from .psro import PsroConfig, SebrConfig, run_psro

OUT_ENV = "TEAMEQ_OUT"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFY_FAIL = 2


class CliError(Exception):
    """User-facing CLI error (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; the exit-code contract
    # reserves 2 for verification FAIL, so usage errors become errors.
    def error(self, message):
        raise CliError(message)


def fmt9(x) -> str:
    """Floats printed with 9 significant digits."""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _kv_spec(body: str) -> dict:
    out = {}
    if body:
        for part in body.split(","):
            key, _, val = part.partition("=")
            if not _:
                raise CliError(f"malformed game spec field {part!r}, expected key=value")
            out[key.strip()] = val.strip()
    return out


def parse_game_spec(spec: str):
    """Builtin game spec ('example1', 'sad:N=2,A=3', ...) or a JSON file path."""
    name, _, body = spec.partition(":")
    name = name.strip().lower().replace("-", "_")
    if name == "example1":
        return example1()
    if name == "anti_coordination":
        return anti_coordination()
    if name == "sad":
        kv = _kv_spec(body)
        return sad(
            SadConfig(
                n_players=int(kv.get("N", kv.get("n", 2))),
                seek_max=int(kv.get("A", kv.get("a", 3))),
                attack_bonus=float(kv.get("B", kv.get("b", 1.0))),
            )
        )
    if name == "random":
        kv = _kv_spec(body)
        n1 = int(kv.get("n1", 2))
        n2 = int(kv.get("n2", 2))
        acts = int(kv.get("actions", 2))
        return random_team_game(
            (n1, n2),
            ((acts,) * n1, (acts,) * n2),
            (float(kv.get("lo", -1.0)), float(kv.get("hi", 1.0))),
            seed=int(kv.get("seed", 0)),
        )
    if name == "skirmish":
        kv = _kv_spec(body)
        return grid_skirmish(
            SkirmishConfig(
                width=int(kv.get("w", 3)),
                height=int(kv.get("h", 3)),
                team_size=int(kv.get("n", 2)),
                horizon=int(kv.get("H", kv.get("horizon", 4))),
                damage=float(kv.get("damage", 1.0)),
                discount=float(kv.get("gamma", 0.95)),
            )
        )
    if os.path.exists(spec):
        with open(spec) as fh:
            data = json.load(fh)
        if data.get("type") == "builtin":
            return parse_game_spec(data["spec"])
        return game_from_dict(data)
    raise CliError(f"unknown game spec or missing file: {spec!r}")


def game_file_dict(game, spec: str) -> dict:
    if isinstance(game, NormalFormTeamGame):
        return game_to_dict(game)
    return {"type": "builtin", "spec": spec, "name": game.name}


def parse_profile_spec(spec: str, game):
    """Profile spec: 'all-zeros', 'uniform', or a JSON file with team1/team2."""
    label = spec.strip().lower().replace("_", "-")
    if label in ("all-zeros", "zeros"):
        return tuple(
            ProductPolicy([ConstantPolicy(c, 0) for c in game.action_counts[t]])
            for t in (0, 1)
        )
    if label == "uniform":
        if not game.is_normal_form:
            raise CliError("uniform table profiles are supported for normal form only")
        return tuple(
            ProductPolicy([IndividualPolicy.uniform(c) for c in game.action_counts[t]])
            for t in (0, 1)
        )
    if os.path.exists(spec):
        with open(spec) as fh:
            data = json.load(fh)
        return (policy_from_dict(data["team1"]), policy_from_dict(data["team2"]))
    raise CliError(f"unknown profile spec or missing file: {spec!r}")


# ---------------------------------------------------------------------------
# Run directory plumbing


def _merged_config(args: argparse.Namespace, defaults: dict) -> dict:
    file_cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    merged = dict(defaults)
    merged.update({k: v for k, v in file_cfg.items() if k in defaults})
    merged.update(
        {k: v for k, v in vars(args).items() if k in defaults and v is not None}
    )
    return merged


def _out_dir(args) -> str:
    out = getattr(args, "out", None) or os.environ.get(OUT_ENV) or "teameq-run"
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path: str, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out: str, command: str, game_spec, config: dict) -> dict:
    manifest = {
        "tool": "teameq",
        "version": __version__,
        "command": command,
        "game": game_spec,
        "config": config,
        "seed": config.get("seed"),
        "tolerance": config.get("tol"),
        "out_dir": out,
        "wall_clock_seconds": None,
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    return manifest


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt9(x) for x in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


HISTORY_COLUMNS = ["iter", "meta_value", "br_gain_1", "br_gain_2", "pop_1", "pop_2"]


def history_rows(history) -> list[list]:
    return [
        [r.iteration, r.meta_value, r.br_gain_1, r.br_gain_2, r.pop_1, r.pop_2]
        for r in history
    ]


def emit_report(run_dir: str, fmt: str) -> list[str]:
    """Re-emit run artifacts from the canonical history.json; idempotent,
    stable column order, floats at 9 significant digits."""
    hist_path = os.path.join(run_dir, "history.json")
    if not os.path.exists(hist_path):
        raise CliError(f"missing artifact {hist_path}")
    with open(hist_path) as fh:
        records = json.load(fh)
    rows = [[rec[c] for c in HISTORY_COLUMNS] for rec in records]
    written = []
    if fmt == "csv":
        path = os.path.join(run_dir, "history.csv")
        _write_csv(path, HISTORY_COLUMNS, rows)
        written.append(path)
    elif fmt == "json-lines":
        path = os.path.join(run_dir, "history.jsonl")
        lines = [
            json.dumps(
                {c: (fmt9(v) if isinstance(v, float) else v) for c, v in zip(HISTORY_COLUMNS, row)},
                sort_keys=True,
            )
            for row in rows
        ]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        written.append(path)
    else:
        raise CliError(f"unknown report format {fmt!r}")
    return written


# ---------------------------------------------------------------------------
# Subcommands


def cmd_game(args) -> int:
    defaults = {"game": None, "seed": 0}
    cfg = _merged_config(args, defaults)
    if not cfg["game"]:
        raise CliError("--game is required")
    game = parse_game_spec(cfg["game"])
    out = _out_dir(args)
    write_manifest(out, "game", cfg["game"], cfg)
    t0 = time.perf_counter()
    _write_json(os.path.join(out, "game.json"), game_file_dict(game, cfg["game"]))
    _write_json(
        os.path.join(out, "summary.json"),
        {
            "command": "game",
            "name": game.name,
            "wall_clock_seconds": time.perf_counter() - t0,
        },
    )
    print(f"wrote {game.name} to {out}/game.json")
    return EXIT_OK


def cmd_solve(args) -> int:
    defaults = {"game": None, "tol": 1e-6, "seed": 0}
    cfg = _merged_config(args, defaults)
    if not cfg["game"]:
        raise CliError("--game is required")
    game = parse_game_spec(cfg["game"])
    if not game.is_normal_form:
        raise CliError("solve works on normal-form games (joint-action matrix)")
    out = _out_dir(args)
    write_manifest(out, "solve", cfg["game"], cfg)
    t0 = time.perf_counter()
    solution = solve_matrix_maxmin(game.matrix(), tol=float(cfg["tol"]))
    summary = {
        "command": "solve",
        "game": game.name,
        "value": solution.value,
        "gap": solution.gap,
        "row_mix": {
            str(list(a)): float(w)
            for a, w in zip(game.joint_actions(1), solution.row_mix)
            if w > 0
        },
        "col_mix": {
            str(list(a)): float(w)
            for a, w in zip(game.joint_actions(2), solution.col_mix)
            if w > 0
        },
        "wall_clock_seconds": time.perf_counter() - t0,
    }
    _write_json(os.path.join(out, "solution.json"), solution.to_dict())
    _write_json(os.path.join(out, "summary.json"), summary)
    print(f"value {fmt9(solution.value)} gap {fmt9(solution.gap)}")
    return EXIT_OK


_CLASS_FLAGS = {"none", "pivot", "sequential", "joint"}


def _correlation_from_flags(cfg) -> object:
    label = cfg["klass"]
    if label == "none":
        return NoCorrelation()
    if label == "pivot":
        return PivotFollowers(pivot=int(cfg["pivot"]))
    if label == "sequential":
        sf = SampleFactor(
            f_team=float(cfg["f_team"]),
            f_policy=float(cfg["f_policy"]),
            n_init=int(cfg["n_init"]),
        )
        return Sequential(sample_factor=sf, seed=int(cfg["seed"]))
    if label == "joint":
        return Joint()
    raise CliError(f"--class must be one of {sorted(_CLASS_FLAGS)}")


def cmd_verify(args) -> int:
    defaults = {
        "game": None,
        "profile": "all-zeros",
        "klass": "none",
        "pivot": 0,
        "epsilon": 1e-6,
        "n_init": 16,
        "f_team": 0.0,
        "f_policy": 0.0,
        "seed": 0,
        "tol": None,
    }
    cfg = _merged_config(args, defaults)
    if not cfg["game"]:
        raise CliError("--game is required")
    game = parse_game_spec(cfg["game"])
    profile = parse_profile_spec(cfg["profile"], game)
    out = _out_dir(args)
    write_manifest(out, "verify", cfg["game"], cfg)
    t0 = time.perf_counter()
    correlation = _correlation_from_flags(cfg)
    specs = [
        build_deviation_spec(game, team, profile[team - 1], correlation)
        for team in (1, 2)
    ]
    report = verify_equilibrium(game, profile, specs, epsilon=float(cfg["epsilon"]))
    payload = report.to_dict()
    payload["wall_clock_seconds"] = time.perf_counter() - t0
    _write_json(os.path.join(out, "verify.json"), payload)
    _write_json(os.path.join(out, "summary.json"), payload)
    for check in report.checks:
        print(
            f"team {check.team} [{check.class_name}] max_gain {fmt9(check.max_gain)} "
            f"witness {check.witness} {'PASS' if check.passed else 'FAIL'}"
        )
    print(f"verdict {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def cmd_psro(args) -> int:
    defaults = {
        "game": None,
        "oracle": "sebr",
        "iters": 40,
        "tol": 1e-6,
        "seed": 0,
        "expand": "both",
        "restarts": 4,
    }
    cfg = _merged_config(args, defaults)
    if not cfg["game"]:
        raise CliError("--game is required")
    game = parse_game_spec(cfg["game"])
    out = _out_dir(args)
    write_manifest(out, "psro", cfg["game"], cfg)
    t0 = time.perf_counter()
    expand = {"both": (1, 2), "1": (1,), "2": (2,)}.get(str(cfg["expand"]))
    if expand is None:
        raise CliError("--expand must be both, 1 or 2")
    pcfg = PsroConfig(
        oracle=cfg["oracle"],
        max_iterations=int(cfg["iters"]),
        meta_tol=float(cfg["tol"]),
        gain_tol=float(cfg["tol"]),
        seed=int(cfg["seed"]),
        expand_teams=expand,
        sebr=SebrConfig(restarts=int(cfg["restarts"])),
    )
    result = run_psro(game, pcfg)
    records = [
        dict(zip(HISTORY_COLUMNS, row)) for row in history_rows(result.history)
    ]
    _write_json(os.path.join(out, "history.json"), records)
    emit_report(out, "csv")
    if isinstance(game, NormalFormTeamGame):
        _write_json(
            os.path.join(out, "population.json"),
            {
                "team1": [policy_to_dict(_serializable(p, game, 1)) for p in result.population.team1],
                "team2": [policy_to_dict(_serializable(p, game, 2)) for p in result.population.team2],
                "meta_1": [float(w) for w in result.meta_1],
                "meta_2": [float(w) for w in result.meta_2],
            },
        )
    summary = {
        "command": "psro",
        "game": game.name,
        "oracle": cfg["oracle"],
        "meta_value": result.value,
        "iterations": result.iterations,
        "converged": result.converged,
        "pop_sizes": [len(result.population.team1), len(result.population.team2)],
        "wall_clock_seconds": time.perf_counter() - t0,
    }
    _write_json(os.path.join(out, "summary.json"), summary)
    print(
        f"meta value {fmt9(result.value)} after {result.iterations} iterations "
        f"(converged={result.converged})"
    )
    return EXIT_OK


def _serializable(policy, game, team):
    """Make population entries serializable: lazy policies become tables."""
    from .core import NF_OBS, SharedPolicy, JointMixPolicy

    if isinstance(policy, (JointMixPolicy,)):
        return policy
    counts = game.action_counts[team - 1]
    if isinstance(policy, SharedPolicy):
        dist = policy.policy.dist(NF_OBS)
        return SharedPolicy(IndividualPolicy(counts[0], {NF_OBS: dist}), policy.n_members)
    members = [
        IndividualPolicy(c, {NF_OBS: m.dist(NF_OBS)})
        for m, c in zip(policy.members, counts)
    ]
    return ProductPolicy(members)


def _load_candidate(run_dir: str, team: int) -> Candidate:
    path = os.path.join(run_dir, "population.json")
    if not os.path.exists(path):
        raise CliError(f"missing artifact {path} (psro run on a normal-form game?)")
    with open(path) as fh:
        data = json.load(fh)
    entries = tuple(policy_from_dict(d) for d in data[f"team{team}"])
    weights = tuple(float(w) for w in data[f"meta_{team}"])
    return Candidate(team, entries, weights)


def _load_population_entries(run_dir: str, team: int):
    return _load_candidate(run_dir, team).entries


def cmd_eval(args) -> int:
    defaults = {
        "game": None,
        "mode": "exploit",
        "run": None,
        "run_a": None,
        "run_b": None,
        "profile": None,
        "team": 1,
        "classes": ",".join(CLASS_ORDER),
        "matches": None,
        "k": 32.0,
        "base": 1200.0,
        "seed": 0,
        "tol": 1e-6,
    }
    cfg = _merged_config(args, defaults)
    out = _out_dir(args)
    write_manifest(out, "eval", cfg.get("game"), cfg)
    t0 = time.perf_counter()
    mode = cfg["mode"]
    if mode == "exploit":
        game = parse_game_spec(_require(cfg, "game"))
        team = int(cfg["team"])
        if cfg["run"]:
            candidate = _load_candidate(cfg["run"], team)
            cand_id = f"{cfg['run']}:team{team}"
        elif cfg["profile"]:
            profile = parse_profile_spec(cfg["profile"], game)
            candidate = Candidate.single(team, profile[team - 1])
            cand_id = f"{cfg['profile']}:team{team}"
        else:
            raise CliError("eval exploit needs --run or --profile")
        classes = tuple(c.strip() for c in str(cfg["classes"]).split(",") if c.strip())
        report = exploitability_profile(
            game, candidate, classes=classes, seed=int(cfg["seed"]), candidate_id=cand_id
        )
        payload = report.to_dict()
        payload["wall_clock_seconds"] = time.perf_counter() - t0
        _write_json(os.path.join(out, "report.json"), payload)
        header = ["candidate", "team"] + list(classes)
        row = [cand_id, team] + [
            (r.opponent_reward if r.applicable else "n/a") for r in report.results
        ]
        _write_csv(os.path.join(out, "report.csv"), header, [row])
        for r in report.results:
            shown = fmt9(r.opponent_reward) if r.applicable else "n/a"
            print(f"{r.class_name}: {shown}")
        _write_json(os.path.join(out, "summary.json"), payload)
        return EXIT_OK
    if mode == "rpp":
        game = parse_game_spec(_require(cfg, "game"))
        entries_a = _load_population_entries(_require(cfg, "run_a"), 1)
        entries_b = _load_population_entries(_require(cfg, "run_b"), 2)
        value = rpp(game, entries_a, entries_b, tol=float(cfg["tol"]))
        payload = {
            "command": "eval/rpp",
            "value": value,
            "run_a": cfg["run_a"],
            "run_b": cfg["run_b"],
            "wall_clock_seconds": time.perf_counter() - t0,
        }
        _write_json(os.path.join(out, "rpp.json"), payload)
        _write_json(os.path.join(out, "summary.json"), payload)
        print(f"rpp {fmt9(value)}")
        return EXIT_OK
    if mode == "elo":
        path = _require(cfg, "matches")
        matches = []
        with open(path) as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line or (i == 0 and line.lower().startswith("a,")):
                    continue
                a, b, score = line.split(",")
                matches.append((a, b, float(score)))
        ratings = elo_ratings(MatchLedger(tuple(matches)), k=float(cfg["k"]), base=float(cfg["base"]))
        payload = {
            "command": "eval/elo",
            "ratings": {k_: float(v) for k_, v in sorted(ratings.items())},
            "wall_clock_seconds": time.perf_counter() - t0,
        }
        _write_json(os.path.join(out, "ratings.json"), payload)
        _write_csv(
            os.path.join(out, "ratings.csv"),
            ["player", "rating"],
            [[k_, v] for k_, v in sorted(ratings.items())],
        )
        _write_json(os.path.join(out, "summary.json"), payload)
        for k_, v in sorted(ratings.items()):
            print(f"{k_}: {fmt9(v)}")
        return EXIT_OK
    raise CliError("--mode must be exploit, rpp or elo")


def _require(cfg: dict, key: str):
    if not cfg.get(key):
        raise CliError(f"--{key.replace('_', '-')} is required for this mode")
    return cfg[key]


def cmd_report(args) -> int:
    defaults = {"run": None, "format": "csv"}
    cfg = _merged_config(args, defaults)
    written = emit_report(_require(cfg, "run"), cfg["format"])
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="teameq", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--out", "-o", help=f"output directory (default ${OUT_ENV} or ./teameq-run)")
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int, help="root seed for all sub-streams")

    p_game = sub.add_parser("game", help="emit a builtin game to file")
    common(p_game)
    p_game.add_argument("--game", help="builtin spec or JSON path")

    p_solve = sub.add_parser("solve", help="matrix maxmin / CTME of a normal-form game")
    common(p_solve)
    p_solve.add_argument("--game")
    p_solve.add_argument("--tol", type=float)

    p_verify = sub.add_parser("verify", help="equilibrium check under a correlation class")
    common(p_verify)
    p_verify.add_argument("--game")
    p_verify.add_argument("--profile")
    p_verify.add_argument("--class", dest="klass", choices=sorted(_CLASS_FLAGS))
    p_verify.add_argument("--pivot", type=int)
    p_verify.add_argument("--epsilon", type=float)
    p_verify.add_argument("--n-init", dest="n_init", type=int)
    p_verify.add_argument("--f-team", dest="f_team", type=float)
    p_verify.add_argument("--f-policy", dest="f_policy", type=float)

    p_psro = sub.add_parser("psro", help="population loop with a chosen oracle")
    common(p_psro)
    p_psro.add_argument("--game")
    p_psro.add_argument("--oracle", choices=["joint", "shared", "individual", "sebr"])
    p_psro.add_argument("--iters", type=int)
    p_psro.add_argument("--tol", type=float)
    p_psro.add_argument("--expand", choices=["both", "1", "2"])
    p_psro.add_argument("--restarts", type=int)

    p_eval = sub.add_parser("eval", help="exploitability profile / rpp / elo")
    common(p_eval)
    p_eval.add_argument("--game")
    p_eval.add_argument("--mode", choices=["exploit", "rpp", "elo"])
    p_eval.add_argument("--run", help="psro run directory with a saved population")
    p_eval.add_argument("--run-a", dest="run_a")
    p_eval.add_argument("--run-b", dest="run_b")
    p_eval.add_argument("--profile")
    p_eval.add_argument("--team", type=int)
    p_eval.add_argument("--classes")
    p_eval.add_argument("--matches", help="CSV of (a,b,score) rows")
    p_eval.add_argument("--k", type=float)
    p_eval.add_argument("--base", type=float)
    p_eval.add_argument("--tol", type=float)

    p_report = sub.add_parser("report", help="re-emit run artifacts")
    common(p_report)
    p_report.add_argument("--run")
    p_report.add_argument("--format", choices=["csv", "json-lines"])

    return parser


_COMMANDS = {
    "game": cmd_game,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "psro": cmd_psro,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise CliError("a subcommand is required (game, solve, verify, psro, eval, report)")
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # runtime errors are distinct from verify FAIL
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
