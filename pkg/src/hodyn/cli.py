"""Command-line front end.

Subcommands: simulate, sweep, eliminate, verify, list-builtins. Exit codes
are 0 on success, 1 on a failed verification, 2 on usage or input errors
and 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import verify as vf
from .builtins import BUILTINS, get_builtin
from .dominance import Mode, iterated_elimination
from .dynamics import DomainError, DynamicsConfig, Kind, parse_observable
from .game import Game, GameError, MixedProfile, as_profile, dump_game, load_game
from .integrator import IntegrationError, IntegratorConfig, Trajectory
from .simulation import simulate

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- parsing helpers ---------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def parse_profile(game: Game, text: str) -> MixedProfile:
    """``p0,p1;q0,q1`` (players separated by ``;``) or ``barycenter``."""
    if text == "barycenter":
        return MixedProfile.barycenter(game)
    if text.startswith("rest-at:"):
        text = text[len("rest-at:"):]
    blocks = [_floats(b) for b in text.split(";")]
    try:
        return as_profile(game, blocks)
    except GameError as exc:
        raise UsageError(f"bad initial profile: {exc}") from None


def parse_bias(items) -> dict[int, list[float]]:
    out = {}
    for item in items or ():
        r, sep, values = item.partition("=")
        if not sep:
            raise UsageError(f"--bias-level expects r=values, got {item!r}")
        try:
            level = int(r)
        except ValueError:
            raise UsageError(f"bad bias level {r!r}") from None
        out[level] = _floats(values)
    return out


def parse_grid(text: str) -> tuple[int, int]:
    try:
        n, m = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--grid expects NxM, got {text!r}") from None
    if n < 1 or m < 1:
        raise UsageError("grid sizes must be positive")
    return n, m


def load_source(args) -> tuple[Game, str]:
    if bool(args.game) == bool(args.builtin):
        raise UsageError("give exactly one of --game or --builtin")
    if args.builtin:
        try:
            return get_builtin(args.builtin), f"builtin:{args.builtin}"
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    try:
        return load_game(args.game), f"file:{args.game}"
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load game {args.game!r}: {exc}") from None


def dynamics_config(args, game: Game) -> DynamicsConfig:
    lambdas = tuple(_floats(args.lam)) if args.lam else None
    observable = parse_observable(args.observable) if args.observable else None
    kind = Kind(args.dynamics)
    kw = {}
    if observable is not None:
        kw["observable"] = observable
    try:
        cfg = DynamicsConfig(order=args.order, kind=kind, lambdas=lambdas, **kw)
        cfg.lambda_vector(game)
    except GameError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def integrator_config(args) -> IntegratorConfig:
    try:
        return IntegratorConfig(method=args.method, step=args.step, rel_tol=args.rtol,
                                abs_tol=args.atol, t_end=args.t_end,
                                sample_every=args.sample_every)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- output ------------------------------------------------------------------------


def _num(v: float) -> str:
    return repr(float(v))


def level_names(f) -> list[str]:
    """Coordinate names of one cascade level, e.g. ``z_0_bottom``."""
    inner = getattr(f, "inner", f)
    g = inner.game
    if inner.kind == "zd":
        return [f"z_{k}_{g.labels[k][a]}" for k in range(g.num_players)
                for a in inner.perm[k][1:]]
    sym = "y" if inner.kind == "ld" else "x"
    return [f"{sym}_{k}_{lab}" for k in range(g.num_players) for lab in g.labels[k]]


def trajectory_csv(game: Game, traj: Trajectory, derivatives: bool = False) -> str:
    """CSV text: t, then x per player and action, then optional level columns."""
    header = ["t"] + [f"x_{k}_{lab}" for k in range(game.num_players)
                      for lab in game.labels[k]]
    rows = [traj.times[:, None], traj.profiles]
    f = traj.meta.get("field_obj")
    if derivatives and f is not None and f.order > 1:
        width = f.width
        names = level_names(f)
        for r in range(1, f.order):
            header += [f"d{r}{n}" for n in names]
        rows.append(traj.states[:, width:])
    data = np.hstack(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in data:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def run_summary(game: Game, traj: Trajectory, order: int) -> str:
    lines = [f"game={game.name or 'anonymous'}", f"fingerprint={game.fingerprint()}",
             f"t_end={traj.t_end:.10g}", f"samples={len(traj.times)}",
             f"steps={traj.meta.get('steps', 0)}",
             "final=" + ",".join(f"{v:.10g}" for v in traj.profiles[-1])]
    for i, e in enumerate(traj.events):
        lines.append(f"event.{i}.kind={e.kind}")
        lines.append(f"event.{i}.time={e.time:.12g}")
        for key, val in e.payload.items():
            lines.append(f"event.{i}.{key}={val}")
    out = "\n".join(lines) + "\n"
    try:
        out += an.classify_limit(traj, game).to_text()
    except an.FolkTheoremViolation as exc:
        out += f"limit.violation={exc}\n"
    report = iterated_elimination(game, Mode.STRICT_MIXED)
    for rnd in report.rounds:
        for e in rnd:
            key = f"fit.{e.player}.{e.label}"
            try:
                fit = an.extinction_rate_fit(traj, game, e.action, e.player, order)
                out += fit.to_text(key)
            except an.AnalysisError as exc:
                out += f"{key}.status={type(exc).__name__}\n"
    return out


def resolved_spec(source, game, cfg: DynamicsConfig, icfg: IntegratorConfig, x0, bias):
    return {
        "game": {"source": source, "fingerprint": game.fingerprint(), **game.to_dict()},
        "dynamics": {"kind": cfg.kind.value, "order": cfg.order,
                     "lambdas": [float(v) for v in cfg.lambda_vector(game)],
                     "observable": cfg.observable.describe()},
        "integrator": icfg.to_dict(),
        "initial": {"profile": [list(map(float, s)) for s in x0],
                    "bias": {str(k): v for k, v in (bias or {}).items()}},
    }


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# -- subcommands ---------------------------------------------------------------------


def cmd_simulate(args) -> int:
    game, source = load_source(args)
    cfg = dynamics_config(args, game)
    icfg = integrator_config(args)
    x0 = parse_profile(game, args.init)
    bias = parse_bias(args.bias_level)
    out = Path(args.out_dir)
    try:
        traj = simulate(game, cfg, x0, icfg, bias=bias)
    except (GameError, DomainError) as exc:
        raise UsageError(str(exc)) from None
    _write(out / "trajectory.csv", trajectory_csv(game, traj, args.derivatives))
    summary = run_summary(game, traj, cfg.order)
    _write(out / "summary.txt", summary)
    _write(out / "spec.json",
           json.dumps(resolved_spec(source, game, cfg, icfg, x0, bias), indent=2) + "\n")
    sys.stdout.write(summary)
    return EXIT_OK


def grid_starts(game: Game, n: int, m: int) -> list[MixedProfile]:
    """Interior grid over the first action's share of players 0 and 1.

    The remaining mass of each player is split evenly over its other actions;
    players beyond the second start at their barycenter.
    """
    if game.num_players < 2:
        raise UsageError("sweeps need at least two players")

    def strategy(k, p):
        c = game.action_counts[k]
        v = np.full(c, (1 - p) / (c - 1)) if c > 1 else np.ones(1)
        v[0] = p if c > 1 else 1.0
        return v

    starts = []
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            s = [strategy(0, i / (n + 1)), strategy(1, j / (m + 1))]
            s += [np.full(c, 1.0 / c) for c in game.action_counts[2:]]
            starts.append(MixedProfile(s))
    return starts


def _sweep_one(task):
    game, cfg, icfg, x0, path = task
    try:
        traj = simulate(game, cfg, x0, icfg)
    except IntegrationError as exc:
        return {"file": path.name, "status": "numerical-error", "message": str(exc)}
    _write(path, trajectory_csv(game, traj))
    try:
        rep = an.classify_limit(traj, game)
        cls, conv = rep.classification.value, rep.converged
    except an.FolkTheoremViolation:
        cls, conv = "violation", True
    return {"file": path.name, "status": "ok", "converged": conv,
            "classification": cls,
            "final": ",".join(f"{v:.10g}" for v in traj.profiles[-1])}


def worker_count() -> int:
    raw = os.environ.get("HODYN_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            raise UsageError("HODYN_THREADS must be an integer") from None
    return cap


def cmd_sweep(args) -> int:
    game, _ = load_source(args)
    cfg = dynamics_config(args, game)
    icfg = integrator_config(args)
    n, m = parse_grid(args.grid)
    out = Path(args.out_dir)
    starts = grid_starts(game, n, m)
    tasks = [(game, cfg, icfg, x0, out / f"run_{i:04d}.csv") for i, x0 in enumerate(starts)]
    workers = min(worker_count(), len(tasks))
    if workers > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    lines = [f"runs={len(results)}", f"grid={n}x{m}", f"workers={workers}"]
    failed = 0
    for i, (x0, res) in enumerate(zip(starts, results)):
        lines.append(f"run.{i}.file={res['file']}")
        lines.append(f"run.{i}.initial=" + ",".join(f"{v:.10g}" for v in x0.flat))
        lines.append(f"run.{i}.status={res['status']}")
        if res["status"] == "ok":
            lines.append(f"run.{i}.converged={str(res['converged']).lower()}")
            lines.append(f"run.{i}.classification={res['classification']}")
            lines.append(f"run.{i}.final={res['final']}")
        else:
            failed += 1
    text = "\n".join(lines) + "\n"
    _write(out / "sweep_summary.txt", text)
    sys.stdout.write(text)
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_eliminate(args) -> int:
    game, _ = load_source(args)
    report = iterated_elimination(game, Mode(args.mode))
    text = report.to_text()
    if args.out_dir:
        _write(Path(args.out_dir) / "dominance.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    ids = list(vf.RECIPES) if args.id == "all" else [args.id]
    options = {}
    if args.order is not None:
        if args.id not in ("dom-rate", "strict-rate", "strict-convergence",
                           "folk-stationarity"):
            raise UsageError(f"--order is not an option of {args.id}")
        options["orders"] = (args.order,)
    if args.builtin:
        if args.id != "folk-stationarity":
            raise UsageError(f"--builtin is not an option of {args.id}")
        if args.builtin not in BUILTINS:
            raise UsageError(f"unknown builtin {args.builtin!r}")
        options["games"] = (args.builtin,)
    ok = True
    texts = []
    for rid in ids:
        try:
            verdict = vf.run(rid, **options)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        ok &= verdict.passed
        texts.append(verdict.to_text())
    text = "\n".join(texts)
    if args.out_dir:
        _write(Path(args.out_dir) / "verify.txt", text)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_list_builtins(args) -> int:
    for name in BUILTINS:
        game = get_builtin(name)
        shape = "x".join(map(str, game.action_counts))
        labels = ";".join(",".join(l) for l in game.labels)
        print(f"{name} shape={shape} actions={labels}")
        if args.export:
            dump_game(game, Path(args.export) / f"{name}.json")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def _source_args(p):
    p.add_argument("--game", metavar="PATH", help="game file (JSON, or YAML with PyYAML)")
    p.add_argument("--builtin", metavar="NAME", help="built-in game id")


def _run_args(p):
    p.add_argument("--order", type=int, default=2, help="order of the dynamics")
    p.add_argument("--lambda", dest="lam", metavar="L[,L...]",
                   help="inverse temperature, one value or one per player")
    p.add_argument("--dynamics", choices=[k.value for k in Kind], default="zd",
                   help="integration space: scores, relative scores, strategies, "
                        "or generalized observable dynamics")
    p.add_argument("--observable", metavar="SPEC",
                   help="identity | positive-affine:a,b | monotone:tanh|cubic | "
                        "payoff-adjusted[:c]")
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--method", choices=["rk45", "rk4"], default="rk45")
    p.add_argument("--step", type=float, default=1e-2, help="fixed step for rk4")
    p.add_argument("--sample-every", type=float, default=0.01)
    p.add_argument("--out-dir", default="hodyn-out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one run and export it")
    _source_args(p)
    _run_args(p)
    p.add_argument("--init", default="barycenter",
                   help="barycenter | rest-at:p0,p1;q0,q1 | p0,p1;q0,q1")
    p.add_argument("--bias-level", action="append", metavar="r=v1,v2,...",
                   help="initial value of derivative level r (repeatable)")
    p.add_argument("--derivatives", action="store_true",
                   help="append the derivative levels of the state to the CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rest starts on an interior grid")
    _source_args(p)
    _run_args(p)
    p.add_argument("--grid", default="11x11", metavar="NxM")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eliminate", help="iterated elimination of dominated actions")
    _source_args(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.STRICT_PURE.value)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_eliminate)

    p = sub.add_parser("verify", help="run a pre-registered verification recipe")
    p.add_argument("id", choices=list(vf.RECIPES) + ["all"])
    p.add_argument("--order", type=int)
    p.add_argument("--builtin")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list-builtins", help="list built-in games")
    p.add_argument("--export", metavar="DIR", help="also write each game as JSON")
    p.set_defaults(func=cmd_list_builtins)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hodyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"hodyn: numerical error: {exc}", file=sys.stderr)
        if exc.state is not None:
            print(f"hodyn: state at t={exc.time}: {np.array2string(np.asarray(exc.state))}",
                  file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
