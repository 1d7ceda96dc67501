"""Strict and weak dominance, and iterated elimination of dominated actions.

Payoffs are multilinear, so the gap between two strategies is minimised at a
pure opponent profile; every "for all x" check here enumerates opponent
vertices instead of searching X.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .game import Game, GameError, Restriction, restrict
from .simplex import feasible_point


class Kind(enum.Enum):
    STRICT = "strict"
    WEAK = "weak"
    NONE = "none"


class Mode(enum.Enum):
    STRICT_PURE = "strict-pure"
    STRICT_MIXED = "strict-mixed"
    WEAK_THEN_STRICT = "weak-then-strict"


@dataclass(frozen=True)
class DominanceRelation:
    """Outcome of comparing a strategy against a candidate dominator.

    ``margin`` is the minimum gap over opponent pure profiles (0 for weak
    dominance, in which case ``witness`` is an opponent profile with a
    strictly positive gap).
    """

    kind: Kind
    dominated: np.ndarray
    dominator: np.ndarray
    margin: float
    witness: tuple[int, ...] | None = None
    witness_gap: float = 0.0

    def __bool__(self):
        return self.kind is not Kind.NONE


def _opponent_profiles(game: Game, k: int):
    counts = [n for j, n in enumerate(game.action_counts) if j != k]
    return list(itertools.product(*[range(n) for n in counts]))


def opponent_payoff_matrix(game: Game, k: int) -> np.ndarray:
    """Rows: opponent pure profiles (in itertools order); columns: k's actions."""
    t = np.moveaxis(game.payoffs[k], k, -1)
    return t.reshape(-1, game.action_counts[k])


def _classify(game, k, q, qp, gaps, tol) -> DominanceRelation:
    gaps = np.asarray(gaps, dtype=float)
    lo = float(gaps.min())
    if lo > tol:
        return DominanceRelation(Kind.STRICT, q, qp, lo)
    if lo >= -tol:
        j = int(np.argmax(gaps))
        if gaps[j] > tol:
            witness = _opponent_profiles(game, k)[j]
            return DominanceRelation(Kind.WEAK, q, qp, 0.0, witness, float(gaps[j]))
    return DominanceRelation(Kind.NONE, q, qp, lo)


def _unit(n, a):
    e = np.zeros(n)
    e[a] = 1.0
    return e


def dominates_pure(game: Game, k: int, alpha: int, beta: int,
                   tol: float = 0.0) -> DominanceRelation:
    """Is action ``alpha`` of player ``k`` dominated by action ``beta``?"""
    game.check_action(k, alpha)
    game.check_action(k, beta)
    if alpha == beta:
        raise GameError("an action cannot be compared against itself")
    M = opponent_payoff_matrix(game, k)
    n = game.action_counts[k]
    return _classify(game, k, _unit(n, alpha), _unit(n, beta),
                     M[:, beta] - M[:, alpha], tol)


def dominates_mixed(game: Game, k: int, q, q_prime, tol: float = 0.0) -> DominanceRelation:
    """Is mixed strategy ``q`` of player ``k`` dominated by ``q_prime``?"""
    game.check_player(k)
    q = np.asarray(q, dtype=float)
    qp = np.asarray(q_prime, dtype=float)
    n = game.action_counts[k]
    for v in (q, qp):
        if v.shape != (n,) or np.any(v < 0) or abs(v.sum() - 1) > 1e-9:
            raise GameError("dominance arguments must be probability vectors")
    M = opponent_payoff_matrix(game, k)
    return _classify(game, k, q, qp, M @ (qp - q), tol)


def find_pure_dominator_mixed(game: Game, k: int, alpha: int, strict: bool = True,
                              eps: float | None = None,
                              tol: float = 1e-9) -> np.ndarray | None:
    """Search for a mixed strategy that dominates pure action ``alpha``.

    Strict mode asks for a gap of at least ``eps`` against every opponent
    profile. Weak mode asks for non-negative gaps everywhere and a gap of at
    least ``eps`` against one profile, trying each profile in turn.
    """
    game.check_action(k, alpha)
    if eps is None:
        eps = 1e-6 * max(game.payoff_range(), 1.0)
    if eps <= 0:
        raise GameError("eps must be positive")
    n = game.action_counts[k]
    if n == 1:
        return None
    M = opponent_payoff_matrix(game, k)
    target = M[:, alpha]
    ones = np.ones((1, n))

    def verify(qp):
        if qp is None:
            return None
        qp = qp / qp.sum()
        gaps = M @ qp - target
        if strict and gaps.min() < eps - tol:
            return None
        if not strict and (gaps.min() < -tol or gaps.max() < eps - tol):
            return None
        return qp

    if strict:
        return verify(feasible_point(M, target + eps, ones, [1.0], tol=tol))
    for j in range(M.shape[0]):
        bump = np.zeros_like(target)
        bump[j] = eps
        qp = verify(feasible_point(M, target + bump, ones, [1.0], tol=tol))
        if qp is not None:
            return qp
    return None


# -- iterated elimination ----------------------------------------------------


@dataclass(frozen=True)
class Elimination:
    player: int
    action: int
    label: str
    relation: DominanceRelation


@dataclass
class DominanceReport:
    mode: Mode
    labels: tuple[tuple[str, ...], ...]
    initial: Restriction
    rounds: list[list[Elimination]] = field(default_factory=list)
    surviving: list[Restriction] = field(default_factory=list)

    @property
    def final(self) -> Restriction:
        return self.surviving[-1] if self.surviving else self.initial

    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def is_solvable(self) -> bool:
        return all(len(s) == 1 for s in self.final.actions)

    def survivor_labels(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(self.labels[k][a] for a in s)
                     for k, s in enumerate(self.final.actions))

    def to_text(self) -> str:
        lines = [f"mode={self.mode.value}", f"rounds={self.num_rounds}"]
        for i, rnd in enumerate(self.rounds, 1):
            for e in rnd:
                dom = ",".join(f"{v:.6g}" for v in e.relation.dominator)
                line = (f"round={i} player={e.player} removed={e.label} "
                        f"kind={e.relation.kind.value} margin={e.relation.margin:.6g} "
                        f"dominator={dom}")
                if e.relation.witness is not None:
                    line += " witness=" + ",".join(map(str, e.relation.witness))
                lines.append(line)
        for k, labs in enumerate(self.survivor_labels()):
            lines.append(f"survivors player={k} actions={','.join(labs)}")
        lines.append(f"dominance_solvable={str(self.is_solvable()).lower()}")
        return "\n".join(lines) + "\n"


def _find_dominated(sub: Game, k: int, strict: bool, mixed: bool):
    """Yield (action, relation) pairs for dominated actions of player k in ``sub``."""
    n = sub.action_counts[k]
    if n == 1:
        return
    for a in range(n):
        best = None
        for b in range(n):
            if b == a:
                continue
            rel = dominates_pure(sub, k, a, b)
            if rel.kind is Kind.STRICT or (not strict and rel.kind is Kind.WEAK):
                if best is None or rel.margin > best.margin:
                    best = rel
        if best is None and mixed:
            qp = find_pure_dominator_mixed(sub, k, a, strict=strict)
            if qp is not None:
                best = dominates_mixed(sub, k, _unit(n, a), qp, tol=1e-9)
                if not best:
                    best = None
        if best is not None:
            yield a, best


def _lift(rel: DominanceRelation, keep: tuple[int, ...], n_full: int) -> DominanceRelation:
    def up(v):
        out = np.zeros(n_full)
        out[list(keep)] = v
        return out

    return DominanceRelation(rel.kind, up(rel.dominated), up(rel.dominator),
                             rel.margin, rel.witness, rel.witness_gap)


def _round(game: Game, current: Restriction, strict: bool, mixed: bool,
           single_player: bool = False):
    sub = restrict(game, current)
    removed: list[Elimination] = []
    for k in range(game.num_players):
        keep = current.actions[k]
        for a, rel in _find_dominated(sub, k, strict, mixed):
            orig = keep[a]
            removed.append(Elimination(k, orig, game.labels[k][orig],
                                       _lift(rel, keep, game.action_counts[k])))
        if single_player and removed:
            break
    return removed


def _apply(current: Restriction, removed: list[Elimination]) -> Restriction:
    gone = {(e.player, e.action) for e in removed}
    return Restriction(tuple(tuple(a for a in s if (k, a) not in gone)
                             for k, s in enumerate(current.actions)))


def iterated_elimination(game: Game, mode: Mode | str = Mode.STRICT_PURE,
                         start: Restriction | None = None) -> DominanceReport:
    """Iterated elimination until a fixed point.

    A strict round removes, all at once, every dominated action of the
    lowest-indexed player that has any; players are visited again from the
    start after each round. In ``weak-then-strict`` mode a single weak round
    first removes the weakly (or strictly) dominated actions of all players
    simultaneously, mixed dominators allowed.
    """
    mode = Mode(mode)
    current = start or Restriction.full(game)
    report = DominanceReport(mode, game.labels, current)
    mixed = mode is not Mode.STRICT_PURE
    if mode is Mode.WEAK_THEN_STRICT:
        removed = _round(game, current, strict=False, mixed=True)
        if removed:
            current = _apply(current, removed)
            report.rounds.append(removed)
            report.surviving.append(current)
    while True:
        removed = _round(game, current, strict=True, mixed=mixed, single_player=True)
        if not removed:
            break
        current = _apply(current, removed)
        report.rounds.append(removed)
        report.surviving.append(current)
    return report
