"""Explicit Runge-Kutta integration of cascade fields with dense sampling and events."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .dynamics import Z_MAX, DomainError
from .game import Game, MixedProfile


class Method(enum.Enum):
    RK4 = "rk4"
    RK45 = "rk45"


class IntegrationError(RuntimeError):
    """Base class for failed integrations; carries the partial trajectory."""

    def __init__(self, message, trajectory=None, state=None, time=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.state = state
        self.time = time


class TruncationError(IntegrationError):
    """The step budget ran out before ``t_end``."""


class BlowupError(IntegrationError):
    """A non-finite state was produced."""


class BoundaryError(IntegrationError):
    """The field refused to step (boundary guard)."""


@dataclass(frozen=True)
class IntegratorConfig:
    method: Method = Method.RK45
    step: float = 1e-2
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    t_end: float = 20.0
    sample_every: float = 0.01
    max_steps: int = 2_000_000
    max_step: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        for name in ("step", "rel_tol", "abs_tol", "t_end", "sample_every", "max_step"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        return d


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    payload: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    """Sampled run: ``states[i]`` is the flat cascade state at ``times[i]``
    and ``profiles[i]`` the flat strategy profile of the full game."""

    times: np.ndarray
    states: np.ndarray
    profiles: np.ndarray
    events: list[Event] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def final_profile(self, game: Game) -> MixedProfile:
        return MixedProfile.from_flat(game, self.profiles[-1], tol=1e-6)

    def share(self, game: Game, k: int, a: int) -> np.ndarray:
        return self.profiles[:, game.offsets[k] + a]

    def first_event(self, kind: str) -> Event | None:
        for e in self.events:
            if e.kind == kind:
                return e
        return None


# -- steppers -----------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dp_step(f, t, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        yi = y.copy()
        for j, a in enumerate(_A[i]):
            if a:
                yi += h * a * k[j]
        k.append(f(t + _C[i] * h, yi))
    # stage 7 is evaluated at the 5th-order solution (FSAL)
    y_new = y + h * sum(b * kk for b, kk in zip(_B5, k) if b)
    err = h * sum(e * kk for e, kk in zip(_E, k) if e)
    return y_new, k[6], err


def _rk4_step(f, t, y, f0, h):
    k1 = f0
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def hermite(t0, y0, f0, t1, y1, f1, t):
    """Cubic Hermite interpolant through two endpoints and their slopes."""
    h = t1 - t0
    s = (t - t0) / h
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    # increment form: a constant segment reproduces y0 bit for bit
    return y0 + h01 * (y1 - y0) + h * (h10 * f0 + h11 * f1)


@dataclass
class Step:
    """One accepted step, with dense output for event location."""

    field: Any
    t0: float
    y0: np.ndarray
    f0: np.ndarray
    t1: float
    y1: np.ndarray
    f1: np.ndarray

    def state(self, t: float) -> np.ndarray:
        if t <= self.t0:
            return self.y0
        if t >= self.t1:
            return self.y1
        y = hermite(self.t0, self.y0, self.f0, self.t1, self.y1, self.f1, t)
        # equal endpoints with nonzero slope only arise from clamping
        pinned = (self.y0 == self.y1) & (self.f0 != 0)
        if np.any(pinned):
            y = np.where(pinned, self.y0, y)
        return self.field.postprocess(y)

    def profile(self, t: float) -> np.ndarray:
        return self.field.profile(self.state(t))


# -- events ---------------------------------------------------------------------

EVENT_TIME_TOL = 1e-10


def _bisect(g: Callable[[float], float], lo: float, hi: float) -> float:
    """Locate the first time in (lo, hi] where g <= 0, given g(lo) > 0 >= g(hi)."""
    while hi - lo > EVENT_TIME_TOL:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


class EventSpec:
    """Base class; ``start`` sees the initial point, ``check`` each step.

    Both return the event time (or None).
    """

    kind = "event"
    terminal = False

    def start(self, field, t, y):
        return None

    def check(self, step: Step):
        return None

    def payload(self) -> dict:
        return {}


class ExtinctionEvent(EventSpec):
    """Fires when ``x_{k,a}`` drops strictly below ``threshold``.

    In relative-score space it also fires once the action's relative score
    falls below ``-0.9 Z_MAX``.
    """

    kind = "extinction"

    def __init__(self, game: Game, player: int, action: int, threshold: float,
                 terminal: bool = False):
        game.check_action(player, action)
        if not 0 < threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        self.player, self.action = player, action
        self.index = game.offsets[player] + action
        self.log_thr = math.log(threshold)
        self.threshold = threshold
        self.terminal = terminal
        self._zi = None

    def _g(self, field, y):
        x = field.profile(y)[self.index]
        g = (math.log(x) if x > 0 else -math.inf) - self.log_thr
        if self._zi is not None:
            g = min(g, y[self._zi] + 0.9 * Z_MAX)
        return g

    def start(self, field, t, y):
        self._zi = None
        if getattr(field, "kind", None) == "zd":
            self._zi = field.score_index(self.player, self.action)
        return t if self._g(field, y) < 0 else None

    def check(self, step):
        f = step.field
        if self._g(f, step.y0) < 0 or self._g(f, step.y1) >= 0:
            return None
        return _bisect(lambda t: self._g(f, step.state(t)), step.t0, step.t1)

    def payload(self):
        return {"player": self.player, "action": self.action,
                "threshold": self.threshold}


class ConvergenceEvent(EventSpec):
    """Fires once the profile has stayed within ``radius`` (max-norm) of
    ``target`` for ``dwell`` time units without interruption."""

    kind = "convergence"
    probes = 4

    def __init__(self, target: MixedProfile, radius: float, dwell: float = 0.0,
                 terminal: bool = False):
        if not radius > 0:
            raise ValueError("radius must be positive")
        if dwell < 0:
            raise ValueError("dwell must be non-negative")
        self.target = np.asarray(target.flat, dtype=float)
        self.radius = radius
        self.dwell = dwell
        self.terminal = terminal
        self.since = None

    def _g(self, x):
        return float(np.max(np.abs(x - self.target))) - self.radius

    def start(self, field, t, y):
        self.since = t if self._g(field.profile(y)) <= 0 else None
        if self.since is not None and self.dwell == 0:
            return t
        return None

    def check(self, step):
        ts = np.linspace(step.t0, step.t1, self.probes + 1)
        gs = [self._g(step.profile(t)) for t in ts]
        for i in range(1, len(ts)):
            lo, hi = ts[i - 1], ts[i]
            if gs[i] > 0:
                self.since = None
                continue
            if self.since is None:
                self.since = lo if gs[i - 1] <= 0 else _bisect(
                    lambda t: self._g(step.profile(t)), lo, hi)
            if hi - self.since >= self.dwell:
                return max(self.since + self.dwell, step.t0)
        return None

    def payload(self):
        return {"radius": self.radius, "dwell": self.dwell}


def event_extinction(game: Game, player: int, action: int, threshold: float,
                     terminal: bool = False) -> ExtinctionEvent:
    return ExtinctionEvent(game, player, action, threshold, terminal)


def event_convergence(target: MixedProfile, radius: float, dwell: float = 0.0,
                      terminal: bool = False) -> ConvergenceEvent:
    return ConvergenceEvent(target, radius, dwell, terminal)


# -- driver ---------------------------------------------------------------------


def _initial_step(f, t, y, f0, rtol, atol, t_end):
    scale = atol + rtol * np.abs(y)
    d0 = np.max(np.abs(y) / scale, initial=0.0)
    d1 = np.max(np.abs(f0) / scale, initial=0.0)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t)
    f1 = f(t + h0, y + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale, initial=0.0) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_end - t)


def integrate(field, y0, cfg: IntegratorConfig | None = None,
              events=(), meta: dict | None = None) -> Trajectory:
    """Advance ``field`` from ``y0`` at t = 0 up to ``cfg.t_end``.

    Output is sampled on the grid ``k * sample_every`` (plus ``t_end``) by
    cubic Hermite interpolation between accepted steps.
    """
    cfg = cfg or IntegratorConfig()
    y = field.postprocess(np.array(y0, dtype=float))
    t = 0.0
    t_end = float(cfg.t_end)
    n_grid = int(math.floor(t_end / cfg.sample_every + 1e-9))
    grid = [i * cfg.sample_every for i in range(n_grid + 1)]
    if t_end - grid[-1] > 1e-12:
        grid.append(t_end)
    else:
        grid[-1] = t_end
    times, states = [0.0], [y.copy()]
    nxt = 1
    log: list[Event] = []
    meta = dict(meta or {})
    meta["integrator"] = cfg.to_dict()

    def partial():
        ts = np.array(times)
        ss = np.array(states)
        return Trajectory(ts, ss, _profiles(field, ss), list(log), meta)

    def fire(spec, when):
        log.append(Event(float(when), spec.kind, spec.payload()))
        return spec.terminal

    if not np.all(np.isfinite(y)):
        raise BlowupError("initial state is not finite", partial(), y, t)
    try:
        field.check(y)
    except DomainError as exc:
        raise BoundaryError(str(exc), partial(), y, t) from exc
    active = list(events)
    stop = False
    for spec in list(active):
        when = spec.start(field, t, y)
        if when is not None:
            active.remove(spec)
            stop |= fire(spec, when)
    f0 = field(t, y)

    adaptive = cfg.method is Method.RK45
    h = (_initial_step(field, t, y, f0, cfg.rel_tol, cfg.abs_tol, t_end)
         if adaptive else cfg.step)
    steps = 0
    while not stop and t < t_end:
        if steps >= cfg.max_steps:
            raise TruncationError(f"max_steps={cfg.max_steps} reached at t={t:.6g}",
                                  partial(), y, t)
        steps += 1
        h_try = min(h, cfg.max_step, t_end - t)
        last = t + h_try >= t_end * (1 - 1e-15)
        if adaptive:
            y_new, f_new, err = _dp_step(field, t, y, f0, h_try)
            if not np.all(np.isfinite(y_new)):
                if h_try < 1e-14:
                    raise BlowupError("non-finite state", partial(), y, t)
                h = h_try * 0.2
                continue
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            e = float(np.max(np.abs(err) / scale)) if err.size else 0.0
            if e > 1.0:
                h = h_try * max(0.2, 0.9 * e ** -0.2)
                continue
            h = h_try * (5.0 if e == 0 else min(5.0, 0.9 * e ** -0.2))
        else:
            y_new = _rk4_step(field, t, y, f0, h_try)
            if not np.all(np.isfinite(y_new)):
                raise BlowupError("non-finite state", partial(), y_new, t + h_try)
            f_new = None
        t_new = t_end if last else t + h_try
        clamped = field.postprocess(y_new)
        if clamped is not y_new:
            # land the step where a coordinate first meets its clamp, so the
            # dense output never interpolates across a saturation kink
            fresh = (clamped != y_new) & (y != clamped)
            if np.any(fresh):
                if f_new is None:
                    f_new = field(t_new, y_new)
                tau = _clamp_time(t, y, f0, t_new, y_new, f_new, fresh, clamped)
                if tau - t < h_try * (1 - 1e-6):
                    h = max(tau - t, 1e-12)
                    continue
        if clamped is not y_new or f_new is None:
            f_new = field(t_new, clamped)
        y_new = clamped
        try:
            field.check(y_new)
        except DomainError as exc:
            raise BoundaryError(str(exc), partial(), y, t) from exc
        step = Step(field, t, y, f0, t_new, y_new, f_new)

        cut = t_new
        for spec in list(active):
            when = spec.check(step)
            if when is not None:
                active.remove(spec)
                if fire(spec, when):
                    stop = True
                    cut = min(cut, when)
        while nxt < len(grid) and grid[nxt] <= cut + 1e-12:
            tg = grid[nxt]
            times.append(tg)
            states.append(y_new.copy() if tg >= t_new else step.state(tg))
            nxt += 1
        if stop and times[-1] < cut:
            times.append(cut)
            states.append(step.state(cut))
        t, y, f0 = t_new, y_new, f_new
        if not adaptive:
            h = cfg.step

    meta["steps"] = steps
    log.sort(key=lambda e: e.time)
    ts = np.array(times)
    ss = np.array(states)
    return Trajectory(ts, ss, _profiles(field, ss), log, meta)


def _clamp_time(t0, y0, f0, t1, y1, f1, mask, bound) -> float:
    tau = t1
    for i in np.flatnonzero(mask):
        def g(t, i=i):
            return hermite(t0, y0[i], f0[i], t1, y1[i], f1[i], t) - bound[i]
        if g(t0) > 0:
            tau = min(tau, _bisect(g, t0, t1))
    return tau


def _profiles(field, states: np.ndarray) -> np.ndarray:
    if len(states) == 0:
        return np.zeros((0, 0))
    return np.array([field.profile(s) for s in states])
