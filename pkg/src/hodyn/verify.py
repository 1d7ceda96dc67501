"""Pre-registered desk-scale experiments, one per checked property.

Each recipe returns a :class:`Verdict` holding named sub-checks and the
measured quantities behind them. ``RECIPES`` maps the command-line ids to
the recipe functions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import analysis as an
from .builtins import BUILTINS, get_builtin
from .dominance import Kind as DomKind
from .dominance import Mode, dominates_pure, iterated_elimination
from .dynamics import (AggregatePayoffField, DynamicsConfig, Kind, RelativeScoreField,
                       ScoreField, StrategyField, faa_di_bruno_remainder,
                       make_observable)
from .game import MixedProfile, is_nash, is_strict_nash, restrict, restricted_equilibria
from .integrator import (IntegratorConfig, Trajectory, event_convergence, event_extinction,
                         integrate)
from .simulation import simulate

GRID = tuple(np.linspace(0.1, 0.9, 5))

DOM_RATE_BRACKETS = {1: (0.9, 1.1), 2: (1.8, 2.2), 3: (2.6, 3.4)}
WEAK_RATE_BRACKET = (0.8, 1.2)
STRICT_RATE_BRACKETS = {1: (0.9, 1.1), 2: (1.8, 2.2)}


@dataclass
class Verdict:
    id: str
    checks: list[tuple[str, bool]] = field(default_factory=list)
    measurements: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def check(self, name: str, ok) -> bool:
        self.checks.append((name, bool(ok)))
        return bool(ok)

    def to_text(self) -> str:
        lines = [f"verify={self.id}", f"result={'pass' if self.passed else 'fail'}"]
        for name, ok in self.checks:
            lines.append(f"check.{name}={'pass' if ok else 'fail'}")
        for key, value in self.measurements.items():
            lines.append(f"{key}={_fmt(value)}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


# -- shared runs -----------------------------------------------------------------

# runs are memoised so recipes sharing starts (and the limit check) reuse them


@lru_cache(maxsize=512)
def rest_run(builtin: str, start: tuple, order: int, t_end: float,
             observable: tuple = ("identity",)) -> Trajectory:
    game = get_builtin(builtin)
    obs = make_observable(observable[0], *observable[1:])
    kind = Kind.ZD if obs.is_identity else Kind.GD
    cfg = DynamicsConfig(order=order, kind=kind, observable=obs)
    return simulate(game, cfg, [list(s) for s in start], IntegratorConfig(t_end=t_end))


def _two_by_two(p, q):
    return ((p, 1 - p), (q, 1 - q))


def entry_grid():
    return [_two_by_two(a, b) for a, b in itertools.product(GRID, GRID)]


def outside_option_grid():
    starts = []
    for a0, a1 in itertools.product(GRID, GRID):
        if a0 + a1 < 1 - 1e-9:
            for b in GRID:
                starts.append(((a0, a1, 1 - a0 - a1), (b, 1 - b)))
    return starts


def pennies_starts(count: int = 20, spread: float = 0.1, seed: int = 7):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.5 - spread, 0.5 + spread, size=(count, 2))
    return [_two_by_two(float(p), float(q)) for p, q in pts]


# -- recipes ---------------------------------------------------------------------


def dom_rate(orders=(1, 2, 3), t_end: float = 20.0) -> Verdict:
    """Strictly dominated action of player 0 in fig1_dominance."""
    v = Verdict("dom-rate")
    game = get_builtin("fig1_dominance")
    report = iterated_elimination(game, Mode.STRICT_PURE)
    first = [e for e in report.rounds[0] if e.player == 0][0]
    gap = first.relation.margin
    v.measurements["dominated"] = first.label
    v.measurements["margin"] = gap
    bary = ((0.5, 0.5), (0.5, 0.5))
    for n in orders:
        traj = rest_run("fig1_dominance", bary, n, t_end)
        fit = an.extinction_rate_fit(traj, game, first.action, 0, n)
        lo, hi = DOM_RATE_BRACKETS[n]
        v.measurements[f"n{n}.exponent"] = fit.exponent_estimate
        v.measurements[f"n{n}.coefficient"] = fit.coefficient_estimate
        v.check(f"n{n}.exponent", lo <= fit.exponent_estimate <= hi)
        D, sat = an.kl_curve(traj, game, _unit(2, first.action), 0)
        t = traj.times
        m = (t >= t_end / 2) & ~sat
        slack = D[m] - gap * t[m] ** n / math.factorial(n)
        v.measurements[f"n{n}.bound_slack_min"] = float(slack.min())
        v.measurements[f"n{n}.saturated_samples"] = int(np.sum(sat & (t >= t_end / 2)))
        v.check(f"n{n}.lower_bound", np.all(slack >= -5.0))
    return v


def _unit(n, a):
    e = np.zeros(n)
    e[a] = 1.0
    return e


def weak_dom(t_end: float = 30.0) -> Verdict:
    """Weakly dominated "fight" in entry_deterrence from rest on a 5x5 grid."""
    v = Verdict("weak-dom")
    game = get_builtin("entry_deterrence")
    fight = game.labels[1].index("fight")
    rel = dominates_pure(game, 1, fight, game.labels[1].index("share"))
    v.check("fight-weakly-dominated", rel.kind is DomKind.WEAK)
    idx = game.offsets[1] + fight
    starts = entry_grid()
    shares2, exps = [], []
    for s in starts:
        traj = rest_run("entry_deterrence", s, 2, t_end)
        shares2.append(float(traj.profiles[-1, idx]))
        try:
            exps.append(an.extinction_rate_fit(traj, game, fight, 1, 2,
                                               weak=True).exponent_estimate)
        except an.InsufficientGrowthError:
            exps.append(float("nan"))
    shares1 = [float(rest_run("entry_deterrence", s, 1, t_end).profiles[-1, idx])
               for s in starts]
    lo, hi = WEAK_RATE_BRACKET
    v.measurements["n2.max_fight_share"] = max(shares2)
    v.measurements["n2.exponent_min"] = float(np.nanmin(exps))
    v.measurements["n2.exponent_max"] = float(np.nanmax(exps))
    v.measurements["n1.max_fight_share"] = max(shares1)
    v.measurements["n1.surviving_points"] = sum(s > 0.05 for s in shares1)
    v.check("n2.extinction", max(shares2) < 1e-3)
    v.check("n2.exponent", all(lo <= p <= hi for p in exps))
    v.check("n1.survival", any(s > 0.05 for s in shares1))
    return v


def iterated_weak(t_end: float = 30.0) -> Verdict:
    """Iteratively (not directly) weakly dominated action survives at order 2."""
    v = Verdict("iterated-weak")
    game = get_builtin("fig2_outside_option")
    b0, b1 = 0, 1
    direct = dominates_pure(game, 1, b1, b0)
    strict = iterated_elimination(game, Mode.STRICT_PURE)
    later = dominates_pure(restrict(game, strict.surviving[0]), 1, b1, b0)
    v.check("not-weakly-dominated-initially", direct.kind is DomKind.NONE)
    v.check("weakly-dominated-after-strict-round", later.kind is DomKind.WEAK)
    idx = game.offsets[1] + b1
    shares = [float(rest_run("fig2_outside_option", s, 2, t_end).profiles[-1, idx])
              for s in outside_option_grid()]
    v.measurements["action"] = game.labels[1][b1]
    v.measurements["grid_points"] = len(shares)
    v.measurements["surviving_points"] = sum(s > 0.05 for s in shares)
    v.measurements["max_share"] = max(shares)
    v.check("survival", any(s > 0.05 for s in shares))
    return v


def folk_stationarity(games=None, orders=(1, 2), t_end: float = 10.0) -> Verdict:
    """Restricted equilibria started at rest do not move."""
    v = Verdict("folk-stationarity")
    worst = 0.0
    count = 0
    for name in games or BUILTINS:
        game = get_builtin(name)
        for eq in restricted_equilibria(game):
            for n in orders:
                traj = simulate(game, DynamicsConfig(order=n), eq,
                                IntegratorConfig(t_end=t_end))
                drift = float(np.max(np.abs(traj.profiles - eq.flat)))
                worst = max(worst, drift)
                count += 1
    v.measurements["runs"] = count
    v.measurements["max_drift"] = worst
    v.check("drift", worst < 1e-8)
    return v


def _limit_runs():
    """Runs of the rate, survival and strict-rate recipes."""
    runs = []
    bary = ((0.5, 0.5), (0.5, 0.5))
    for n in (1, 2, 3):
        runs.append(("fig1_dominance", bary, n, 20.0))
    for s in entry_grid():
        for n in (1, 2):
            runs.append(("entry_deterrence", s, n, 30.0))
    for s in outside_option_grid():
        runs.append(("fig2_outside_option", s, 2, 30.0))
    for n in (1, 2):
        runs.append(("fig3_coordination", ((0.7, 0.3), (0.7, 0.3)), n, 20.0))
    return runs


def folk_limit_nash() -> Verdict:
    """Converged interior runs end at Nash equilibria (tolerance 1e-5)."""
    v = Verdict("folk-limit-nash")
    converged = violations = 0
    for name, s, n, t_end in _limit_runs():
        game = get_builtin(name)
        traj = rest_run(name, s, n, t_end)
        try:
            rep = an.classify_limit(traj, game)
        except an.FolkTheoremViolation:
            violations += 1
            continue
        if rep.converged:
            converged += 1
            if not is_nash(game, rep.limit, tol=1e-5):
                violations += 1
    v.measurements["runs"] = len(_limit_runs())
    v.measurements["converged"] = converged
    v.measurements["violations"] = violations
    v.check("nash", violations == 0)
    return v


def strict_convergence(orders=(1, 2), t_end: float = 15.0, radius: float = 1e-3) -> Verdict:
    """Rest starts within 0.2 of a strict equilibrium converge to it."""
    v = Verdict("strict-convergence")
    game = get_builtin("fig3_coordination")
    targets = [q for q in restricted_equilibria(game) if is_strict_nash(game, q)]
    offsets = (0.0, 0.1, 0.19)
    latest = 0.0
    failures = 0
    runs = 0
    for q in targets:
        for d1, d2 in itertools.product(offsets, offsets):
            x0 = q.flat.copy()
            for k, d in enumerate((d1, d2)):
                a = int(np.argmax(q[k]))
                sl = slice(game.offsets[k], game.offsets[k + 1])
                block = x0[sl]
                block[a] = 1 - 0.01 - d
                block[1 - a] = 0.01 + d
            for n in orders:
                ev = event_convergence(q, radius)
                traj = simulate(game, DynamicsConfig(order=n), x0,
                                IntegratorConfig(t_end=t_end), events=[ev])
                hit = traj.first_event("convergence")
                stays = np.max(np.abs(traj.profiles[-1] - q.flat)) < radius
                runs += 1
                if hit is None or not stays:
                    failures += 1
                else:
                    latest = max(latest, hit.time)
    v.measurements["targets"] = len(targets)
    v.measurements["runs"] = runs
    v.measurements["latest_entry_time"] = latest
    v.check("converge", failures == 0)
    return v


def strict_rate(orders=(1, 2), t_end: float = 20.0) -> Verdict:
    """Approach rate to the strict equilibrium (a0, b0) of fig3_coordination."""
    v = Verdict("strict-rate")
    game = get_builtin("fig3_coordination")
    q = MixedProfile.pure(game, [0, 0])
    for n in orders:
        traj = rest_run("fig3_coordination", ((0.7, 0.3), (0.7, 0.3)), n, t_end)
        fit = an.strict_convergence_fit(traj, game, q, n)
        lo, hi = STRICT_RATE_BRACKETS[n]
        v.measurements[f"n{n}.exponent"] = fit.exponent_estimate
        v.measurements[f"n{n}.coefficient"] = fit.coefficient_estimate
        v.check(f"n{n}.exponent", lo <= fit.exponent_estimate <= hi)
    return v


def _no_interior_convergence(v: Verdict, observable=("identity",), t_end=50.0):
    game = get_builtin("matching_pennies")
    center = MixedProfile([[0.5, 0.5], [0.5, 0.5]])
    obs = make_observable(observable[0], *observable[1:])
    kind = Kind.ZD if obs.is_identity else Kind.GD
    fired = 0
    closest = math.inf
    for s in pennies_starts():
        ev = event_convergence(center, 1e-3, dwell=5.0)
        traj = simulate(game, DynamicsConfig(order=2, kind=kind, observable=obs), s,
                        IntegratorConfig(t_end=t_end), events=[ev])
        fired += traj.first_event("convergence") is not None
        late = traj.times >= 5.0
        closest = min(closest, float(np.min(np.max(np.abs(
            traj.profiles[late] - center.flat), axis=1))))
    v.measurements["starts"] = 20
    v.measurements["fired"] = fired
    v.measurements["closest_after_t5"] = closest
    v.check("no-convergence", fired == 0)


def non_attraction() -> Verdict:
    v = Verdict("non-attraction")
    _no_interior_convergence(v)
    return v


def _random_state(rng, field, order):
    return rng.normal(scale=2.0, size=order * field.width)


def incompressibility(samples: int = 100, order: int = 2, seed: int = 11) -> Verdict:
    """Score-space fields have zero divergence."""
    v = Verdict("incompressibility")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in BUILTINS:
        game = get_builtin(name)
        cfg = DynamicsConfig(order=order)
        for f in (ScoreField(game, cfg), RelativeScoreField(game, cfg)):
            for _ in range(samples):
                d = an.field_divergence(f, _random_state(rng, f, order))
                worst = max(worst, abs(d))
    v.measurements["max_abs_divergence"] = worst
    v.check("divergence", worst < 1e-4)
    return v


def _rd_vs_ld(game, x0, t_end):
    icfg = IntegratorConfig(t_end=t_end, rel_tol=1e-11, abs_tol=1e-13)
    cfg = DynamicsConfig(order=2, kind=Kind.RD)
    rd = StrategyField(game, cfg)
    a = integrate(rd, rd.initial(x0), icfg)
    ld = ScoreField(game, DynamicsConfig(order=2, kind=Kind.LD))
    b = integrate(ld, ld.initial(x0), icfg)
    return float(np.max(np.abs(a.profiles - b.profiles)))


def _md2_vs_rd(game, x0, t_end):
    icfg = IntegratorConfig(t_end=t_end, rel_tol=1e-11, abs_tol=1e-13)
    md = AggregatePayoffField(game)
    a = integrate(md, md.initial(x0), icfg)
    rd = StrategyField(game, DynamicsConfig(order=2, kind=Kind.RD))
    b = integrate(rd, rd.initial(x0), icfg)
    return float(np.max(np.abs(a.profiles - b.profiles)))


def remainder_errors(seed: int = 3, paths: int = 20):
    """Max errors of the order-2 closed form and the order-3 FD oracle."""
    rng = np.random.default_rng(seed)
    err2 = err3 = 0.0
    for _ in range(paths):
        c = rng.normal(size=4)

        # x(t) = exp(c0 sin(c1 t) + c2 t^2) * (2 + cos(c3 t)) is positive
        def x(t):
            return np.exp(c[0] * np.sin(c[1] * t) + 0.1 * c[2] * t * t) * (2 + np.cos(c[3] * t))

        t0 = rng.uniform(-1, 1)
        h = 1e-3
        # derivatives of x by high-order central differences
        d = [x(t0 + j * h) for j in range(-4, 5)]
        x1 = (d[2] - 8 * d[3] + 8 * d[5] - d[6]) / (12 * h)
        x2 = (-d[2] + 16 * d[3] - 30 * d[4] + 16 * d[5] - d[6]) / (12 * h * h)
        x3 = (d[1] - 8 * d[2] + 13 * d[3] - 13 * d[5] + 8 * d[6] - d[7]) / (8 * h ** 3)
        r2 = faa_di_bruno_remainder(2, [[d[4]], [x1]])[0]
        err2 = max(err2, abs(r2 - (-(x1 ** 2) / d[4] ** 2)))
        L = [np.log(x(t0 + j * h)) for j in range(-4, 5)]
        L3 = (L[1] - 8 * L[2] + 13 * L[3] - 13 * L[5] + 8 * L[6] - L[7]) / (8 * h ** 3)
        r3 = faa_di_bruno_remainder(3, [[d[4]], [x1], [x2]])[0]
        err3 = max(err3, abs(r3 - (L3 - x3 / d[4])))
    return err2, err3


def equivalence() -> Verdict:
    v = Verdict("equivalence")
    game = get_builtin("fig3_coordination")
    x0 = [[0.52, 0.48], [0.5, 0.5]]
    e_a = _rd_vs_ld(game, x0, 10.0)
    e_b = _md2_vs_rd(game, x0, 5.0)
    e2, e3 = remainder_errors()
    v.measurements["rd2_vs_ld2"] = e_a
    v.measurements["md2_vs_rd2"] = e_b
    v.measurements["remainder2_error"] = e2
    v.measurements["remainder3_error"] = e3
    v.check("rd2-vs-ld2", e_a < 1e-6)
    v.check("md2-vs-rd2", e_b < 1e-6)
    v.check("remainder2-closed-form", e2 == 0.0)
    v.check("remainder3-oracle", e3 < 1e-5)
    return v


MONOTONE_OBSERVABLES = (("positive-affine", 2.0, 1.0), ("monotone", "tanh"))


def monotonic_dom(t_end: float = 20.0) -> Verdict:
    v = Verdict("monotonic-dom")
    game = get_builtin("fig1_dominance")
    bary = ((0.5, 0.5), (0.5, 0.5))
    for obs in MONOTONE_OBSERVABLES:
        tag = obs[0] if obs[0] != "monotone" else obs[1]
        traj = rest_run("fig1_dominance", bary, 2, t_end, obs)
        fit = an.extinction_rate_fit(traj, game, 1, 0, 2)
        ev = event_extinction(game, 0, 1, 1e-6)
        o = make_observable(obs[0], *obs[1:])
        crossed = simulate(game, DynamicsConfig(order=2, kind=Kind.GD, observable=o),
                           [list(s) for s in bary], IntegratorConfig(t_end=t_end),
                           events=[ev]).first_event("extinction")
        v.measurements[f"{tag}.exponent"] = fit.exponent_estimate
        v.measurements[f"{tag}.crossing_time"] = crossed.time if crossed else "none"
        v.check(f"{tag}.exponent", 1.8 <= fit.exponent_estimate <= 2.2)
        v.check(f"{tag}.crossing", crossed is not None)
    return v


PAYOFF_ADJUSTED_BASELINE = 2.0


def monotonic_folk() -> Verdict:
    v = Verdict("monotonic-folk")
    _no_interior_convergence(v, ("payoff-adjusted", PAYOFF_ADJUSTED_BASELINE))
    return v


RECIPES: dict[str, Callable[..., Verdict]] = {
    "dom-rate": dom_rate,
    "weak-dom": weak_dom,
    "iterated-weak": iterated_weak,
    "folk-stationarity": folk_stationarity,
    "folk-limit-nash": folk_limit_nash,
    "strict-convergence": strict_convergence,
    "strict-rate": strict_rate,
    "incompressibility": incompressibility,
    "non-attraction": non_attraction,
    "equivalence": equivalence,
    "monotonic-dom": monotonic_dom,
    "monotonic-folk": monotonic_folk,
}


def run(recipe_id: str, **options) -> Verdict:
    try:
        fn = RECIPES[recipe_id]
    except KeyError:
        raise KeyError(f"unknown verification id {recipe_id!r}") from None
    return fn(**options)
