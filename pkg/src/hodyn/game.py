"""Finite normal-form games, mixed profiles and equilibrium predicates."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class GameError(ValueError):
    """Raised for malformed games, profiles or restrictions."""


@dataclass(frozen=True, eq=False)
class Game:
    """An N-player game with one dense payoff tensor per player.

    ``payoffs[k][a_1, ..., a_N]`` is the payoff to player ``k`` at the pure
    profile ``(a_1, ..., a_N)``.
    """

    payoffs: tuple[np.ndarray, ...]
    labels: tuple[tuple[str, ...], ...] | None = None
    name: str = ""
    _table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        tensors = tuple(np.array(p, dtype=float) for p in self.payoffs)
        if not tensors:
            raise GameError("a game needs at least one player")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise GameError(
                f"{len(tensors)} players but payoff tensor has {len(shape)} axes")
        for k, t in enumerate(tensors):
            if t.shape != shape:
                raise GameError(f"player {k} tensor shape {t.shape} != {shape}")
            if not np.all(np.isfinite(t)):
                raise GameError(f"player {k} has non-finite payoffs")
        if any(n < 1 for n in shape):
            raise GameError("every player needs at least one action")
        for t in tensors:
            t.setflags(write=False)
        object.__setattr__(self, "payoffs", tensors)
        if self.labels is None:
            labels = tuple(tuple(str(a) for a in range(n)) for n in shape)
        else:
            labels = tuple(tuple(str(a) for a in ls) for ls in self.labels)
            if tuple(len(ls) for ls in labels) != shape:
                raise GameError("labels do not match action counts")
        object.__setattr__(self, "labels", labels)
        table = np.stack([t.reshape(-1) for t in tensors], axis=1)
        table = np.ascontiguousarray(table)
        table.setflags(write=False)
        object.__setattr__(self, "_table", table)

    @property
    def num_players(self) -> int:
        return len(self.payoffs)

    @property
    def action_counts(self) -> tuple[int, ...]:
        return self.payoffs[0].shape

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.action_counts)])

    @property
    def num_actions(self) -> int:
        return int(sum(self.action_counts))

    @property
    def table(self) -> np.ndarray:
        """Payoffs as a (num_pure_profiles, num_players) C-ordered table."""
        return self._table

    def payoff_range(self) -> float:
        return float(max(np.ptp(t) for t in self.payoffs))

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.asarray(self.action_counts, dtype=np.int64).tobytes())
        h.update(self._table.tobytes())
        return h.hexdigest()[:16]

    def check_player(self, k: int) -> None:
        if not 0 <= k < self.num_players:
            raise GameError(f"player index {k} out of range")

    def check_action(self, k: int, a: int) -> None:
        self.check_player(k)
        if not 0 <= a < self.action_counts[k]:
            raise GameError(f"action {a} out of range for player {k}")

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return (self.action_counts == other.action_counts
                and all(np.array_equal(a, b)
                        for a, b in zip(self.payoffs, other.payoffs)))

    def __hash__(self):
        return hash(self.fingerprint())

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "players": self.num_players,
            "actions": [list(ls) for ls in self.labels],
            "payoffs": [t.tolist() for t in self.payoffs],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "Game":
        try:
            players = int(data["players"])
            actions = data["actions"]
            payoffs = data["payoffs"]
        except (KeyError, TypeError, ValueError) as exc:
            raise GameError(f"game document is missing a field: {exc}") from None
        if len(actions) != players or len(payoffs) != players:
            raise GameError("'actions' and 'payoffs' must have one entry per player")
        labels = None
        if all(isinstance(a, (list, tuple)) for a in actions):
            labels = [list(a) for a in actions]
            counts = [len(a) for a in actions]
        else:
            counts = [int(a) for a in actions]
        try:
            tensors = [np.asarray(p, dtype=float) for p in payoffs]
        except ValueError as exc:
            raise GameError(f"ragged payoff array: {exc}") from None
        for t in tensors:
            if t.shape != tuple(counts):
                raise GameError(
                    f"payoff tensor shape {t.shape} does not match actions {counts}")
        return cls(tuple(tensors), labels=labels, name=name or data.get("name", ""))


def load_game(path: str | Path) -> Game:
    """Read a game document (JSON, or YAML by extension)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GameError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise GameError(f"{path}: expected a mapping at top level")
    return Game.from_dict(data, name=path.stem)


def dump_game(game: Game, path: str | Path) -> None:
    Path(path).write_text(json.dumps(game.to_dict(), indent=2) + "\n")


class MixedProfile:
    """One probability vector per player."""

    __slots__ = ("strategies",)

    def __init__(self, strategies: Iterable[Sequence[float]], tol: float = DEFAULT_TOL):
        strategies = tuple(np.array(s, dtype=float).reshape(-1) for s in strategies)
        for k, s in enumerate(strategies):
            if s.size == 0:
                raise GameError(f"player {k} strategy is empty")
            if not np.all(np.isfinite(s)) or np.any(s < 0):
                raise GameError(f"player {k} strategy has negative or non-finite entries")
            if abs(s.sum() - 1.0) > tol:
                raise GameError(f"player {k} strategy sums to {s.sum()!r}, not 1")
            s.setflags(write=False)
        self.strategies = strategies

    @classmethod
    def from_flat(cls, game: Game, flat: np.ndarray, tol: float = DEFAULT_TOL):
        off = game.offsets
        return cls([flat[off[k]:off[k + 1]] for k in range(game.num_players)], tol=tol)

    @classmethod
    def pure(cls, game: Game, actions: Sequence[int]) -> "MixedProfile":
        out = []
        for k, a in enumerate(actions):
            game.check_action(k, a)
            e = np.zeros(game.action_counts[k])
            e[a] = 1.0
            out.append(e)
        return cls(out)

    @classmethod
    def barycenter(cls, game: Game) -> "MixedProfile":
        return cls([np.full(n, 1.0 / n) for n in game.action_counts])

    def __getitem__(self, k: int) -> np.ndarray:
        return self.strategies[k]

    def __len__(self):
        return len(self.strategies)

    def __iter__(self):
        return iter(self.strategies)

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(self.strategies)

    def support(self, tol: float = 0.0) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(int(i) for i in np.flatnonzero(s > tol)) for s in self.strategies)

    def is_pure(self, tol: float = DEFAULT_TOL) -> bool:
        return all(s.max() >= 1.0 - tol for s in self.strategies)

    def is_interior(self) -> bool:
        return all(np.all(s > 0) for s in self.strategies)

    def distance(self, other: "MixedProfile") -> float:
        """Max-norm distance on X."""
        return float(max(np.max(np.abs(a - b)) for a, b in zip(self, other)))

    def __repr__(self):
        body = "; ".join(np.array2string(s, precision=4) for s in self.strategies)
        return f"MixedProfile({body})"


def as_profile(game: Game, x) -> MixedProfile:
    if isinstance(x, MixedProfile):
        prof = x
    elif isinstance(x, np.ndarray) and x.ndim == 1 and x.dtype != object:
        prof = MixedProfile.from_flat(game, x)
    else:
        prof = MixedProfile(x)
    if tuple(s.size for s in prof) != game.action_counts:
        raise GameError("profile does not match the game's action counts")
    return prof


# -- payoffs -----------------------------------------------------------------


def _contract_except(tensor: np.ndarray, x: MixedProfile, k: int) -> np.ndarray:
    """Contract every axis of ``tensor`` except ``k`` against the profile."""
    out = tensor
    # contract from the last axis down so remaining axis indices stay valid
    for j in reversed(range(tensor.ndim)):
        if j == k:
            continue
        out = np.tensordot(out, x[j], axes=([j], [0]))
    return out


def action_payoffs(game: Game, x, k: int) -> np.ndarray:
    """Vector of u_{k,a}(x) = u_k(a; x_{-k}) over player k's actions."""
    game.check_player(k)
    x = as_profile(game, x)
    return _contract_except(game.payoffs[k], x, k)


def action_payoff(game: Game, x, k: int, a: int) -> float:
    game.check_action(k, a)
    return float(action_payoffs(game, x, k)[a])


def expected_payoff(game: Game, x, k: int) -> float:
    game.check_player(k)
    x = as_profile(game, x)
    return float(action_payoffs(game, x, k) @ x[k])


def all_action_payoffs(game: Game, x) -> list[np.ndarray]:
    x = as_profile(game, x)
    return [_contract_except(game.payoffs[k], x, k) for k in range(game.num_players)]


# -- restrictions ------------------------------------------------------------


@dataclass(frozen=True)
class Restriction:
    """Per-player subsets of surviving action indices."""

    actions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        acts = tuple(tuple(sorted(set(int(a) for a in s))) for s in self.actions)
        if any(len(s) == 0 for s in acts):
            raise GameError("a restriction must keep at least one action per player")
        object.__setattr__(self, "actions", acts)

    @classmethod
    def full(cls, game: Game) -> "Restriction":
        return cls(tuple(tuple(range(n)) for n in game.action_counts))

    def validate(self, game: Game) -> None:
        if len(self.actions) != game.num_players:
            raise GameError("restriction has the wrong number of players")
        for k, s in enumerate(self.actions):
            for a in s:
                game.check_action(k, a)

    def intersect(self, other: "Restriction") -> "Restriction":
        return Restriction(tuple(tuple(sorted(set(a) & set(b)))
                                 for a, b in zip(self.actions, other.actions)))

    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.actions)

    def __len__(self):
        return len(self.actions)


def restrict(game: Game, r: Restriction) -> Game:
    """Sub-game on the listed actions; labels keep the original names."""
    r.validate(game)
    idx = np.ix_(*[list(s) for s in r.actions])
    tensors = tuple(t[idx] for t in game.payoffs)
    labels = tuple(tuple(game.labels[k][a] for a in s) for k, s in enumerate(r.actions))
    return Game(tensors, labels=labels, name=game.name)


def embed(game: Game, r: Restriction, x) -> MixedProfile:
    """Lift a profile of ``restrict(game, r)`` back into the full game."""
    sub_counts = r.counts()
    strategies = []
    for k, s in enumerate(r.actions):
        v = np.zeros(game.action_counts[k])
        xs = np.asarray(x[k], dtype=float)
        if xs.size != sub_counts[k]:
            raise GameError("profile does not match restriction")
        v[list(s)] = xs
        strategies.append(v)
    return MixedProfile(strategies)


# -- equilibrium predicates --------------------------------------------------


def is_nash(game: Game, q, tol: float = DEFAULT_TOL) -> bool:
    q = as_profile(game, q)
    for k, u in enumerate(all_action_payoffs(game, q)):
        if np.any(u > u @ q[k] + tol):
            return False
    return True


def is_strict_nash(game: Game, q, tol: float = DEFAULT_TOL) -> bool:
    q = as_profile(game, q)
    if not q.is_pure(tol):
        return False
    for k, u in enumerate(all_action_payoffs(game, q)):
        a = int(np.argmax(q[k]))
        others = np.delete(u, a)
        if others.size and np.any(others >= u[a] - tol):
            return False
    return True


def is_restricted_equilibrium(game: Game, q, tol: float = DEFAULT_TOL) -> bool:
    """Nash in the restriction of the game to supp(q)."""
    q = as_profile(game, q)
    for k, u in enumerate(all_action_payoffs(game, q)):
        supp = q[k] > tol
        best = u[supp].max()
        if np.any(u[supp] < best - tol):
            return False
    return True


def restricted_equilibria(game: Game, tol: float = 1e-9) -> list[MixedProfile]:
    """Vertices plus isolated support-enumeration equilibria (two players).

    For every pair of supports the indifference conditions are solved in the
    least-squares sense; degenerate supports also try the support barycenter.
    Candidates are kept only if they are valid, fully supported on the chosen
    supports, and pass ``is_restricted_equilibrium``. Games with more than two
    players only contribute their vertices.
    """
    found: list[MixedProfile] = []

    def add(p: MixedProfile):
        if not any(p.distance(f) < 1e-9 for f in found):
            found.append(p)

    for actions in itertools.product(*[range(n) for n in game.action_counts]):
        add(MixedProfile.pure(game, actions))
    if game.num_players != 2:
        return found

    A, B = game.payoffs
    n1, n2 = game.action_counts

    def subsets(n):
        for size in range(2, n + 1):
            yield from itertools.combinations(range(n), size)

    def solve_mix(M, rows, cols):
        # mix over `cols` making the row-player indifferent across `rows`
        sub = M[np.ix_(rows, cols)]
        eqs = [sub[i] - sub[0] for i in range(1, len(rows))]
        eqs.append(np.ones(len(cols)))
        rhs = np.zeros(len(eqs))
        rhs[-1] = 1.0
        cands = [np.linalg.lstsq(np.array(eqs), rhs, rcond=None)[0],
                 np.full(len(cols), 1.0 / len(cols))]
        return cands

    for s1 in [(a,) for a in range(n1)] + list(subsets(n1)):
        for s2 in [(a,) for a in range(n2)] + list(subsets(n2)):
            if len(s1) == 1 and len(s2) == 1:
                continue
            ys = solve_mix(A, list(s1), list(s2)) if len(s2) > 1 else [np.ones(1)]
            xs = solve_mix(B.T, list(s2), list(s1)) if len(s1) > 1 else [np.ones(1)]
            for xv in xs:
                for yv in ys:
                    if np.any(xv <= tol) or np.any(yv <= tol):
                        continue
                    x1 = np.zeros(n1)
                    x1[list(s1)] = xv / xv.sum()
                    x2 = np.zeros(n2)
                    x2[list(s2)] = yv / yv.sum()
                    p = MixedProfile([x1, x2])
                    if is_restricted_equilibrium(game, p, tol=1e-9):
                        add(p)
    return found
