"""Post-processing of trajectories: divergence curves, rate fits, limits."""

from __future__ import annotations

import enum
import inspect
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Z_MAX
from .game import (Game, MixedProfile, as_profile, is_nash, is_restricted_equilibrium,
                   is_strict_nash)
from .integrator import Trajectory

# shares below this come from clamped relative scores and are excluded from fits
SATURATION_SHARE = math.exp(-0.99 * Z_MAX)


class AnalysisError(ValueError):
    pass


class InsufficientGrowthError(AnalysisError):
    """Divergence never exceeded the growth floor on the fit window."""


class NonConvergenceError(AnalysisError):
    pass


class FolkTheoremViolation(AssertionError):
    """A converged interior trajectory ended away from a Nash equilibrium."""


def kl_divergence(q, x) -> float:
    """Relative entropy of ``x`` with respect to ``q`` (0 log 0 = 0).

    Returns ``inf`` when ``x`` vanishes somewhere on the support of ``q``.
    """
    q = np.asarray(q, dtype=float)
    x = np.asarray(x, dtype=float)
    s = q > 0
    if np.any(x[s] <= 0):
        return math.inf
    return float(np.sum(q[s] * np.log(q[s] / x[s])))


def kl_curve(traj: Trajectory, game: Game, q, k: int):
    """D(q || x_k(t)) on the sample grid, and a mask of saturated samples."""
    q = np.asarray(q, dtype=float)
    s = q > 0
    block = traj.profiles[:, game.offsets[k]:game.offsets[k + 1]]
    sup = block[:, s]
    saturated = np.any(sup <= SATURATION_SHARE, axis=1)
    with np.errstate(divide="ignore"):
        logs = np.log(np.where(sup > 0, sup, 0.0))
    D = -(logs * q[s]).sum(axis=1) + float(np.sum(q[s] * np.log(q[s])))
    # report saturated samples at the ceiling implied by the clamp
    D = np.where(saturated, np.maximum(D, 0.99 * Z_MAX * q[s].min()), D)
    return D, saturated


@dataclass(frozen=True)
class RateFit:
    """Power-law fit ``D ~ a t^p`` plus the coefficient b of ``b t^n / n!``."""

    exponent_estimate: float
    coefficient_estimate: float
    window: tuple[float, float]
    residual: float
    fixed_exponent: int = 0
    points: int = 0

    def to_text(self, prefix: str = "fit") -> str:
        return (f"{prefix}.exponent={self.exponent_estimate:.6g}\n"
                f"{prefix}.coefficient={self.coefficient_estimate:.6g}\n"
                f"{prefix}.fixed_exponent={self.fixed_exponent}\n"
                f"{prefix}.window={self.window[0]:.6g},{self.window[1]:.6g}\n"
                f"{prefix}.residual={self.residual:.6g}\n"
                f"{prefix}.points={self.points}\n")


def _window(traj, window):
    t_end = traj.t_end
    if window is None:
        window = (t_end / 2, t_end)
    lo, hi = map(float, window)
    if not lo < hi:
        raise AnalysisError("fit window must have t_lo < t_hi")
    return lo, hi


def power_fit(t, D, fixed: int, window) -> RateFit:
    """Log-log slope of D against t, and the least-squares b with p fixed."""
    t = np.asarray(t, dtype=float)
    D = np.asarray(D, dtype=float)
    if t.size < 3:
        raise AnalysisError("too few samples in the fit window")
    lt, lD = np.log(t), np.log(D)
    A = np.vstack([lt, np.ones_like(lt)]).T
    (p, c), *_ = np.linalg.lstsq(A, lD, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([p, c]) - lD) ** 2)))
    phi = t ** fixed / math.factorial(fixed) if fixed > 0 else np.ones_like(t)
    b = float(phi @ D / (phi @ phi))
    return RateFit(float(p), b, window, resid, fixed, int(t.size))


def extinction_rate_fit(traj: Trajectory, game: Game, q, k: int, n: int,
                        weak: bool = False, window=None,
                        floor: float = 10.0) -> RateFit:
    """Fit the growth of D(q || x_k) over the tail window.

    ``q`` is a mixed strategy of player ``k`` or a pure action index.
    Saturated samples are dropped; the coefficient uses p = n (n - 1 if weak).
    """
    q = _strategy(game, k, q)
    lo, hi = _window(traj, window)
    D, sat = kl_curve(traj, game, q, k)
    t = traj.times
    m = (t >= lo) & (t <= hi) & (t > 0)
    if not np.any(D[m] > floor):
        raise InsufficientGrowthError(
            f"divergence stays below {floor} on [{lo:.3g}, {hi:.3g}]; no extinction")
    m &= ~sat & np.isfinite(D) & (D > 0)
    used = t[m]
    return power_fit(used, D[m], n - 1 if weak else n,
                     (float(used[0]), float(used[-1])) if used.size else (lo, hi))


def _strategy(game: Game, k: int, q) -> np.ndarray:
    if isinstance(q, (int, np.integer)):
        game.check_action(k, int(q))
        v = np.zeros(game.action_counts[k])
        v[int(q)] = 1.0
        return v
    v = np.asarray(q, dtype=float)
    if v.shape != (game.action_counts[k],):
        raise AnalysisError("strategy has the wrong length")
    return v


def strict_convergence_fit(traj: Trajectory, game: Game, q, n: int, k: int = 0,
                           window=None, radius: float = 1e-3) -> RateFit:
    """Fit -log(1 - x_{k,a}(t)) where a is player k's action in strict equilibrium q."""
    q = as_profile(game, q)
    if not is_strict_nash(game, q):
        raise NonConvergenceError("target is not a strict equilibrium")
    final = traj.profiles[-1]
    if np.max(np.abs(final - q.flat)) > radius:
        raise NonConvergenceError("trajectory does not converge to the target")
    a = int(np.argmax(q[k]))
    block = traj.profiles[:, game.offsets[k]:game.offsets[k + 1]]
    others = np.delete(block, a, axis=1).sum(axis=1)
    lo, hi = _window(traj, window)
    t = traj.times
    m = (t >= lo) & (t <= hi) & (t > 0) & (others > SATURATION_SHARE)
    with np.errstate(divide="ignore"):
        G = -np.log(others[m])
    keep = G > 0
    used = t[m][keep]
    if used.size < 3:
        raise NonConvergenceError("no unsaturated samples in the fit window")
    return power_fit(used, G[keep], n, (float(used[0]), float(used[-1])))


class Classification(enum.Enum):
    STRICT_NASH = "strict-nash"
    NASH = "nash"
    RESTRICTED_EQ_ONLY = "restricted-eq-only"
    NOT_STATIONARY = "not-stationary"


@dataclass(frozen=True)
class LimitReport:
    converged: bool
    limit: MixedProfile | None
    classification: Classification
    tail_spread: float
    spread_history: tuple[float, ...]

    @property
    def spread_decreasing(self) -> bool:
        h = self.spread_history
        return all(b <= a + 1e-15 for a, b in zip(h, h[1:]))

    def to_text(self, prefix: str = "limit") -> str:
        lines = [f"{prefix}.converged={str(self.converged).lower()}",
                 f"{prefix}.classification={self.classification.value}",
                 f"{prefix}.tail_spread={self.tail_spread:.6g}",
                 f"{prefix}.spread_decreasing={str(self.spread_decreasing).lower()}"]
        if self.limit is not None:
            lines.append(f"{prefix}.profile=" +
                         ",".join(f"{v:.10g}" for v in self.limit.flat))
        return "\n".join(lines) + "\n"


def _spread(block: np.ndarray) -> float:
    return float(np.max(block.max(axis=0) - block.min(axis=0))) if len(block) else 0.0


def _returning(tail: np.ndarray, tol: float, rise: float = 1.0) -> bool:
    """True if a near-zero share is growing again over the tail.

    Near a vertex X barely moves while a score climbs back from far below;
    such a run is in transit and must not count as converged.
    """
    if len(tail) < 2:
        return False
    small = tail[-1] < tol
    if not np.any(small):
        return False
    with np.errstate(divide="ignore"):
        logs = np.log(tail[:, small])
    first, last = logs[0], logs[-1]
    ok = np.isfinite(first) & np.isfinite(last)
    return bool(np.any(last[ok] - first[ok] > rise))


def _snap(game: Game, flat, tol) -> MixedProfile:
    x = np.where(np.asarray(flat) < tol, 0.0, flat)
    strategies = []
    for k in range(game.num_players):
        v = x[game.offsets[k]:game.offsets[k + 1]]
        strategies.append(v / v.sum())
    return MixedProfile(strategies)


def classify_limit(traj: Trajectory, game: Game, tol: float = 1e-6,
                   window_frac: float = 0.1) -> LimitReport:
    """Cauchy-tail convergence test on X and equilibrium type of the limit."""
    t = traj.times
    t_end = traj.t_end
    w = window_frac * t_end
    tail = traj.profiles[t >= t_end - w]
    spread = _spread(tail)
    history = []
    for i in range(10, 0, -1):
        hi = t_end - (i - 1) * w
        sel = (t >= hi - w) & (t <= hi)
        if np.any(sel) and hi - w >= -1e-12:
            history.append(_spread(traj.profiles[sel]))
    converged = spread < tol and not _returning(tail, tol)
    if not converged:
        return LimitReport(False, None, Classification.NOT_STATIONARY, spread, tuple(history))
    limit = _snap(game, traj.profiles[-1], tol)
    if is_strict_nash(game, limit, tol=tol):
        cls = Classification.STRICT_NASH
    elif is_nash(game, limit, tol=tol):
        cls = Classification.NASH
    elif is_restricted_equilibrium(game, limit, tol=tol):
        cls = Classification.RESTRICTED_EQ_ONLY
    else:
        cls = Classification.NOT_STATIONARY
    if np.all(traj.profiles[0] > 0) and not is_nash(game, limit, tol=1e-5):
        raise FolkTheoremViolation(
            f"interior trajectory converged to a non-Nash profile {limit!r}")
    return LimitReport(True, limit, cls, spread, tuple(history))


def _as_vector_field(field):
    try:
        params = inspect.signature(field).parameters
    except (TypeError, ValueError):
        params = {}
    if len(params) >= 2:
        return lambda y: np.asarray(field(0.0, y), dtype=float)
    return lambda y: np.asarray(field(y), dtype=float)


def field_divergence(field, state, fd_step: float = 1e-6) -> float:
    """Trace of the Jacobian by central differences.

    ``field`` is ``f(t, y)`` (bound cascade fields) or ``f(y)``.
    """
    f = _as_vector_field(field)
    y = np.array(state, dtype=float)
    total = 0.0
    for i in range(y.size):
        yp, ym = y.copy(), y.copy()
        yp[i] += fd_step
        ym[i] -= fd_step
        total += (f(yp)[i] - f(ym)[i]) / (2 * fd_step)
    return float(total)


@dataclass(frozen=True)
class EscapeResult:
    escaped: bool
    escape_time: float | None
    tail_increasing: bool

    def __bool__(self):
        return self.escaped


def weak_dominance_escape_check(traj: Trajectory, game: Game, q, k: int,
                                center, radius: float) -> EscapeResult:
    """Did the run leave the ``radius`` neighbourhood of ``center`` for good
    while the divergence from ``q`` kept growing?"""
    q = _strategy(game, k, q)
    c = as_profile(game, center).flat
    if np.max(np.abs(traj.profiles[0] - c)) > radius:
        raise AnalysisError("trajectory does not start inside the neighbourhood")
    dist = np.max(np.abs(traj.profiles - c), axis=1)
    outside = dist > radius
    t = traj.times
    D, sat = kl_curve(traj, game, q, k)
    tail = (t >= traj.t_end / 2) & ~sat
    dD = np.diff(D[tail])
    increasing = bool(dD.size > 0 and np.all(dD >= -1e-9) and D[tail][-1] > D[tail][0])
    if not outside[-1]:
        return EscapeResult(False, None, increasing)
    # first time after which the run stays outside
    inside_idx = np.flatnonzero(~outside)
    first = inside_idx[-1] + 1 if inside_idx.size else 0
    when = float(t[first])
    return EscapeResult(increasing, when, increasing)
