"""Vector fields of higher-order learning and replicator dynamics.

Every n-th order system is written as a first-order cascade over a stack of
``n`` levels: level ``r`` holds the r-th time derivative, its derivative is
level ``r + 1``, and the top level's derivative is the driving term. Stacks
are arrays of shape ``(n, m)`` where ``m`` is the number of coordinates
(actions for scores and strategies, non-base actions for relative scores).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import kernels
from .game import Game, GameError, MixedProfile, as_profile

Z_MAX = 700.0
RD_MAX_ORDER = 4
BOUNDARY_GUARD = 1e-12


class DomainError(ValueError):
    """State outside the domain where a field is defined."""


class Kind(enum.Enum):
    LD = "ld"
    ZD = "zd"
    RD = "rd"
    GD = "gd"


class Monotonicity(enum.Enum):
    AGGREGATE = "aggregate"
    CONVEX = "convex"
    CONCAVE = "concave"
    PAYOFF_MONOTONIC = "payoff-monotonic"
    NONE = "none"


# -- observables -------------------------------------------------------------


@dataclass(frozen=True)
class Observable:
    """Payoff observable w_{k,a}(x) built from the action payoffs.

    ``rule(u, x, game)`` maps flat action payoffs and the flat profile to the
    flat observable vector.
    """

    id: str
    rule: Callable[[np.ndarray, np.ndarray, Game], np.ndarray] = field(compare=False)
    monotonicity: Monotonicity
    params: tuple = ()

    @property
    def is_identity(self) -> bool:
        return self.id == "identity"

    def __call__(self, u, x, game):
        return self.rule(u, x, game)

    def __reduce__(self):
        # rules are closures; rebuild from the id so sweeps can ship configs
        return (make_observable, (self.id, *self.params))

    def describe(self) -> str:
        if not self.params:
            return self.id
        return f"{self.id}({','.join(str(p) for p in self.params)})"


_SCALARS = {
    "tanh": np.tanh,
    "cubic": lambda u: u ** 3 + u,
}


def _payoff_adjusted(baseline):
    def rule(u, x, game):
        off = game.offsets
        w = np.empty_like(u)
        for k in range(game.num_players):
            s = slice(off[k], off[k + 1])
            mean = float(u[s] @ x[s]) + baseline
            if mean <= 0:
                raise DomainError(
                    "payoff-adjusted observable needs a positive mean payoff; "
                    "increase the baseline")
            w[s] = (u[s] + baseline) / mean
        return w

    return rule


def make_observable(id: str, *params) -> Observable:
    """Build one of the shipped observables.

    ``identity``; ``positive-affine`` with (a, b), a > 0; ``monotone`` with a
    scalar name in {tanh, cubic}; ``payoff-adjusted`` with an optional
    baseline c (w = (u + c) / (mean payoff + c)).
    """
    if id == "identity":
        return Observable("identity", lambda u, x, g: u, Monotonicity.AGGREGATE)
    if id == "positive-affine":
        a, b = (float(p) for p in (params or (1.0, 0.0)))
        if a <= 0:
            raise GameError("positive-affine observable needs a > 0")
        return Observable(id, lambda u, x, g: a * u + b, Monotonicity.AGGREGATE, (a, b))
    if id == "monotone":
        name = params[0] if params else "tanh"
        try:
            f = _SCALARS[name]
        except KeyError:
            raise GameError(f"unknown monotone scalar {name!r}") from None
        return Observable(id, lambda u, x, g: f(u), Monotonicity.PAYOFF_MONOTONIC, (name,))
    if id == "payoff-adjusted":
        c = float(params[0]) if params else 0.0
        return Observable(id, _payoff_adjusted(c), Monotonicity.PAYOFF_MONOTONIC, (c,))
    raise GameError(f"unknown observable {id!r}")


def parse_observable(text: str) -> Observable:
    """Parse ``name`` or ``name:p1,p2`` as used on the command line."""
    name, _, rest = text.partition(":")
    params = [p for p in rest.split(",") if p] if rest else []
    if name == "monotone":
        return make_observable(name, *params)
    return make_observable(name, *(float(p) for p in params))


IDENTITY = make_observable("identity")


# -- configuration and states ------------------------------------------------


@dataclass(frozen=True)
class DynamicsConfig:
    order: int = 1
    kind: Kind = Kind.ZD
    lambdas: tuple[float, ...] | None = None
    base_actions: tuple[int, ...] | None = None
    observable: Observable = IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.order) != self.order or self.order < 1:
            raise GameError("order must be an integer >= 1")
        if self.lambdas is not None:
            lam = tuple(float(v) for v in self.lambdas)
            if any(not v > 0 for v in lam):
                raise GameError("inverse temperatures must be positive")
            object.__setattr__(self, "lambdas", lam)
        if self.kind is Kind.RD and self.order > RD_MAX_ORDER:
            raise GameError(f"strategy-space fields are capped at order {RD_MAX_ORDER}")

    def lambda_vector(self, game: Game) -> np.ndarray:
        if self.lambdas is None:
            return np.ones(game.num_players)
        if len(self.lambdas) == 1:
            return np.full(game.num_players, self.lambdas[0])
        if len(self.lambdas) != game.num_players:
            raise GameError("need one inverse temperature per player")
        return np.array(self.lambdas, dtype=float)

    def bases(self, game: Game) -> tuple[int, ...]:
        if self.base_actions is None:
            return (0,) * game.num_players
        if len(self.base_actions) != game.num_players:
            raise GameError("need one base action per player")
        for k, b in enumerate(self.base_actions):
            game.check_action(k, b)
        return tuple(self.base_actions)


def _stack(values, order, width, what):
    s = np.array(values, dtype=float)
    if s.shape != (order, width):
        raise GameError(f"{what} stack must have shape {(order, width)}, got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise GameError(f"{what} stack has non-finite entries")
    return s


@dataclass(frozen=True)
class ScoreState:
    """Scores y and their first n-1 time derivatives, shape (n, num_actions)."""

    stack: np.ndarray

    @property
    def order(self) -> int:
        return self.stack.shape[0]


@dataclass(frozen=True)
class RelativeScoreState:
    """Relative scores z against the base actions, shape (n, num_actions - N)."""

    stack: np.ndarray

    @property
    def order(self) -> int:
        return self.stack.shape[0]


@dataclass(frozen=True)
class StrategyState:
    """Profile x and its first n-1 derivatives, shape (n, num_actions)."""

    stack: np.ndarray

    @property
    def order(self) -> int:
        return self.stack.shape[0]


# -- choice maps -------------------------------------------------------------


def gibbs(y, lam: float = 1.0) -> np.ndarray:
    """Logit choice x_a = exp(lam y_a) / sum_b exp(lam y_b)."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise GameError("scores must be finite")
    if not lam > 0:
        raise GameError("inverse temperature must be positive")
    v = lam * y
    e = np.exp(v - v.max())
    return e / e.sum()


def reduced_gibbs(z, lam: float = 1.0) -> np.ndarray:
    """Choice map on relative scores; index 0 of the output is the base action."""
    z = np.asarray(z, dtype=float)
    return gibbs(np.concatenate([[0.0], z]), lam)


def log_ratio(x) -> np.ndarray:
    """Inverse of ``reduced_gibbs`` on the relative interior."""
    x = np.asarray(x, dtype=float)
    return np.log(x[1:] / x[0])


# -- Faa di Bruno remainder ---------------------------------------------------


@lru_cache(maxsize=None)
def remainder_terms(n: int) -> tuple[tuple[float, int, tuple[int, ...]], ...]:
    """Terms (coefficient, m, multiplicities) of the order-(n-1) remainder.

    Multiplicities ``(m_1, ..., m_{n-1})`` range over all solutions of
    sum r m_r = n with the single-part partition (m_n = 1) excluded. The
    coefficient folds in (-1)^(m-1) n! (m-1)! / prod(m_r! (r!)^m_r).
    """
    if n < 1:
        raise GameError("order must be >= 1")
    terms = []

    def walk(r, left, acc):
        if r == n:
            if left == 0:
                terms.append(tuple(acc))
            return
        for m_r in range(left // r + 1):
            walk(r + 1, left - r * m_r, acc + [m_r])

    walk(1, n, [])
    out = []
    for ms in terms:
        m = sum(ms)
        coef = (-1) ** (m - 1) * math.factorial(n) * math.factorial(m - 1)
        for r, m_r in enumerate(ms, start=1):
            coef /= math.factorial(m_r) * math.factorial(r) ** m_r
        out.append((float(coef), m, ms))
    return tuple(out)


def faa_di_bruno_remainder(n: int, x_stack) -> np.ndarray:
    """R^{n-1} such that d^n/dt^n log x = x^(n) / x + R^{n-1}.

    ``x_stack`` holds x, x', ..., x^(n-1) as rows (extra rows are ignored).
    """
    s = np.atleast_2d(np.asarray(x_stack, dtype=float))
    if s.shape[0] < max(n - 1, 1):
        raise GameError("derivative stack is too short for this order")
    x = s[0]
    if np.any(x <= 0):
        raise DomainError("remainder is undefined on the boundary of the simplex")
    out = np.zeros_like(x)
    for coef, m, ms in remainder_terms(n):
        num = np.ones_like(x)
        for r, m_r in enumerate(ms, start=1):
            if m_r:
                num = num * s[r] ** m_r
        out += coef * (num / x ** m)
    return out


# -- fields ------------------------------------------------------------------


def _observed(game: Game, cfg: DynamicsConfig, x: np.ndarray) -> np.ndarray:
    u = np.empty(game.num_actions)
    kernels.action_payoffs(game.table, _counts(game), x, u)
    if cfg.observable.is_identity:
        return u
    return np.asarray(cfg.observable(u, x, game), dtype=float)


def _counts(game: Game) -> np.ndarray:
    return np.asarray(game.action_counts, dtype=np.int64)


def profile_from_scores(game: Game, y, lambdas) -> np.ndarray:
    x = np.empty(game.num_actions)
    kernels.gibbs_blocks(np.ascontiguousarray(y, dtype=float),
                         np.asarray(lambdas, dtype=float), _counts(game), x)
    return x


def ld_field(game: Game, cfg: DynamicsConfig, s: ScoreState, x=None) -> np.ndarray:
    """Derivative of the score cascade y^(n) = w(x), x = gibbs(y)."""
    stack = np.asarray(s.stack, dtype=float)
    n, a = stack.shape
    lam = cfg.lambda_vector(game)
    if x is None:
        x = profile_from_scores(game, stack[0], lam)
    else:
        x = as_profile(game, x).flat
    out = np.empty_like(stack)
    out[:-1] = stack[1:]
    out[-1] = _observed(game, cfg, x)
    return out


def _perm(game: Game, bases):
    """Per-player action order with the base action first."""
    return [[b] + [a for a in range(n) if a != b]
            for n, b in zip(game.action_counts, bases)]


def profile_from_relative(game: Game, z, lambdas, bases=None) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    x = np.empty(game.num_actions)
    off = game.offsets
    zoff = 0
    bases = bases or (0,) * game.num_players
    for k, order in enumerate(_perm(game, bases)):
        n = game.action_counts[k]
        v = np.empty(n)
        v[0] = 0.0
        v[1:] = lambdas[k] * z[zoff:zoff + n - 1]
        e = np.exp(v - v.max())
        x[off[k] + np.array(order)] = e / e.sum()
        zoff += n - 1
    return x


def relative_from_profile(game: Game, x, lambdas, bases=None) -> np.ndarray:
    x = as_profile(game, x)
    bases = bases or (0,) * game.num_players
    out = []
    for k, order in enumerate(_perm(game, bases)):
        xk = x[k][order]
        if np.any(xk <= 0):
            raise DomainError("relative scores need an interior profile")
        out.append(np.log(xk[1:] / xk[0]) / lambdas[k])
    return np.concatenate(out) if out else np.zeros(0)


def zd_field(game: Game, cfg: DynamicsConfig, s: RelativeScoreState) -> np.ndarray:
    """Derivative of the relative-score cascade z^(n) = w_mu(x) - w_base(x)."""
    stack = np.asarray(s.stack, dtype=float)
    lam = cfg.lambda_vector(game)
    bases = cfg.bases(game)
    x = profile_from_relative(game, stack[0], lam, bases)
    w = _observed(game, cfg, x)
    off = game.offsets
    top = []
    for k, order in enumerate(_perm(game, bases)):
        wk = w[off[k]:off[k + 1]][order]
        top.append(wk[1:] - wk[0])
    out = np.empty_like(stack)
    out[:-1] = stack[1:]
    out[-1] = np.concatenate(top)
    return out


def rd_field(game: Game, cfg: DynamicsConfig, s: StrategyState) -> np.ndarray:
    """Derivative of the strategy-space cascade (n-th order replicator/imitative)."""
    stack = np.asarray(s.stack, dtype=float)
    n = stack.shape[0]
    if n > RD_MAX_ORDER:
        raise GameError(f"strategy-space fields are capped at order {RD_MAX_ORDER}")
    x = stack[0]
    if np.any(x <= 0):
        raise DomainError("strategy-space field needs an interior profile")
    lam = cfg.lambda_vector(game)
    w = _observed(game, cfg, x)
    R = faa_di_bruno_remainder(n, stack) if n > 1 else np.zeros_like(x)
    off = game.offsets
    top = np.empty_like(x)
    for k in range(game.num_players):
        sl = slice(off[k], off[k + 1])
        xk = x[sl]
        top[sl] = (lam[k] * xk * (w[sl] - xk @ w[sl])
                   - xk * (R[sl] - xk @ R[sl]))
    out = np.empty_like(stack)
    out[:-1] = stack[1:]
    out[-1] = top
    return out


def aggregate_payoff_field(game: Game, x, U) -> tuple[np.ndarray, np.ndarray]:
    """Imitation of long-term success: x' = x (U - x.U), U' = u(x)."""
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    if np.any(x <= 0):
        raise DomainError("aggregate-payoff field needs an interior profile")
    off = game.offsets
    xdot = np.empty_like(x)
    for k in range(game.num_players):
        sl = slice(off[k], off[k + 1])
        xdot[sl] = x[sl] * (U[sl] - x[sl] @ U[sl])
    u = np.empty_like(x)
    kernels.action_payoffs(game.table, _counts(game), x, u)
    return xdot, u


# -- bound fields for integration ---------------------------------------------


class CascadeField:
    """A field bound to a game and config, acting on flat state vectors.

    Subclasses set ``width`` (coordinates per level) and implement
    ``rhs(flat)`` and ``profile(flat)``.
    """

    kind = "cascade"

    def __init__(self, game: Game, cfg: DynamicsConfig):
        self.game = game
        self.cfg = cfg
        self.order = cfg.order
        self.lambdas = np.ascontiguousarray(cfg.lambda_vector(game))
        self.counts = _counts(game)

    @property
    def dim(self) -> int:
        return self.order * self.width

    def __call__(self, t: float, flat: np.ndarray) -> np.ndarray:
        return self.rhs(flat)

    def stack(self, flat) -> np.ndarray:
        return np.asarray(flat, dtype=float).reshape(self.order, self.width)

    def postprocess(self, flat: np.ndarray) -> np.ndarray:
        return flat

    def check(self, flat: np.ndarray) -> None:
        pass

    def saturated(self, flat: np.ndarray) -> bool:
        return False


class ScoreField(CascadeField):
    kind = "ld"

    def __init__(self, game, cfg):
        super().__init__(game, cfg)
        self.width = game.num_actions

    def rhs(self, flat):
        flat = np.ascontiguousarray(flat, dtype=float)
        if self.cfg.observable.is_identity:
            return kernels.ld_rhs(self.game.table, self.counts, self.lambdas,
                                  flat, self.order, np.empty_like(flat))
        return ld_field(self.game, self.cfg, ScoreState(self.stack(flat))).reshape(-1)

    def profile(self, flat):
        x = np.empty(self.game.num_actions)
        return kernels.gibbs_blocks(np.ascontiguousarray(flat[:self.width]),
                                    self.lambdas, self.counts, x)

    def initial(self, x0, bias=None) -> np.ndarray:
        x0 = as_profile(self.game, x0)
        if not x0.is_interior():
            raise DomainError("score initial conditions need an interior profile")
        s = np.zeros((self.order, self.width))
        off = self.game.offsets
        for k in range(self.game.num_players):
            s[0, off[k]:off[k + 1]] = np.log(x0[k]) / self.lambdas[k]
        _apply_bias(s, bias)
        return s.reshape(-1)


class RelativeScoreField(CascadeField):
    """Canonical integration space; level-0 scores are clamped at -Z_MAX."""

    kind = "zd"

    def __init__(self, game, cfg):
        super().__init__(game, cfg)
        self.bases = cfg.bases(game)
        self.perm = _perm(game, self.bases)
        if any(b != 0 for b in self.bases):
            idx = np.ix_(*self.perm)
            self._inner = Game(tuple(t[idx] for t in game.payoffs))
        else:
            self._inner = game
        self.width = game.num_actions - game.num_players
        flat_perm = np.concatenate([np.asarray(p) + o
                                    for p, o in zip(self.perm, game.offsets[:-1])])
        self._unperm = np.argsort(flat_perm)

    def rhs(self, flat):
        flat = np.ascontiguousarray(flat, dtype=float)
        if self.cfg.observable.is_identity:
            return kernels.zd_rhs(self._inner.table, self.counts, self.lambdas,
                                  flat, self.order, np.empty_like(flat))
        return zd_field(self.game, self.cfg,
                        RelativeScoreState(self.stack(flat))).reshape(-1)

    def profile(self, flat):
        x = np.empty(self.game.num_actions)
        kernels.reduced_gibbs_blocks(np.ascontiguousarray(flat[:self.width]),
                                     self.lambdas, self.counts, x)
        return x[self._unperm]

    def postprocess(self, flat):
        z = flat[:self.width]
        if np.any(z < -Z_MAX):
            flat = flat.copy()
            np.maximum(flat[:self.width], -Z_MAX, out=flat[:self.width])
        return flat

    def saturated(self, flat) -> bool:
        return bool(np.any(flat[:self.width] <= -Z_MAX))

    def pinned(self, flat) -> np.ndarray:
        return np.asarray(flat[:self.width]) <= -Z_MAX

    def initial(self, x0, bias=None) -> np.ndarray:
        s = np.zeros((self.order, self.width))
        s[0] = relative_from_profile(self.game, x0, self.lambdas, self.bases)
        _apply_bias(s, bias)
        return s.reshape(-1)

    def score_index(self, k: int, a: int) -> int | None:
        """Flat level-0 index of action ``a``'s relative score (None for base)."""
        pos = self.perm[k].index(a)
        if pos == 0:
            return None
        return int(sum(n - 1 for n in self.game.action_counts[:k]) + pos - 1)


class StrategyField(CascadeField):
    kind = "rd"

    def __init__(self, game, cfg):
        super().__init__(game, cfg)
        if cfg.order > RD_MAX_ORDER:
            raise GameError(f"strategy-space fields are capped at order {RD_MAX_ORDER}")
        self.width = game.num_actions

    def rhs(self, flat):
        return rd_field(self.game, self.cfg, StrategyState(self.stack(flat))).reshape(-1)

    def profile(self, flat):
        return np.array(flat[:self.width], dtype=float)

    def check(self, flat):
        if np.any(flat[:self.width] < BOUNDARY_GUARD):
            raise DomainError("strategy-space state reached the boundary guard; "
                              "use relative-score integration near the boundary")

    def initial(self, x0, bias=None) -> np.ndarray:
        x0 = as_profile(self.game, x0)
        if not x0.is_interior():
            raise DomainError("strategy-space initial conditions must be interior")
        s = np.zeros((self.order, self.width))
        s[0] = x0.flat
        _apply_bias(s, bias)
        off = self.game.offsets
        for r in range(1, self.order):
            for k in range(self.game.num_players):
                if abs(s[r, off[k]:off[k + 1]].sum()) > 1e-9:
                    raise GameError("strategy derivatives must sum to zero per player")
        return s.reshape(-1)


class AggregatePayoffField(CascadeField):
    """(x, U) system for imitation of long-term success."""

    kind = "md2"

    def __init__(self, game, cfg=None):
        super().__init__(game, cfg or DynamicsConfig(order=2, kind=Kind.RD))
        self.order = 2
        self.width = game.num_actions

    def rhs(self, flat):
        a = self.width
        xdot, udot = aggregate_payoff_field(self.game, flat[:a], flat[a:])
        return np.concatenate([xdot, udot])

    def profile(self, flat):
        return np.array(flat[:self.width], dtype=float)

    def check(self, flat):
        if np.any(flat[:self.width] < BOUNDARY_GUARD):
            raise DomainError("aggregate-payoff state reached the boundary guard")

    def initial(self, x0, U0=None) -> np.ndarray:
        x0 = as_profile(self.game, x0)
        U = np.zeros(self.width) if U0 is None else np.asarray(U0, dtype=float)
        return np.concatenate([x0.flat, U])


def _apply_bias(s: np.ndarray, bias) -> None:
    if not bias:
        return
    for r, values in dict(bias).items():
        if not 1 <= r < s.shape[0]:
            raise GameError(f"bias level {r} outside 1..{s.shape[0] - 1}")
        v = np.asarray(values, dtype=float)
        if v.shape != (s.shape[1],):
            raise GameError(f"bias level {r} needs {s.shape[1]} values")
        s[r] = v


def make_field(game: Game, cfg: DynamicsConfig) -> CascadeField:
    if cfg.kind is Kind.LD:
        return ScoreField(game, cfg)
    if cfg.kind in (Kind.ZD, Kind.GD):
        return RelativeScoreField(game, cfg)
    if cfg.kind is Kind.RD:
        return StrategyField(game, cfg)
    raise GameError(f"unsupported dynamics kind {cfg.kind}")


def profile_of(game: Game, flat_x) -> MixedProfile:
    return MixedProfile.from_flat(game, np.asarray(flat_x), tol=1e-6)
