"""Built-in games.

``fig1_dominance``, ``fig2_outside_option`` and ``fig3_coordination`` carry
the payoff matrices of the three reference examples. ``entry_deterrence``
and ``matching_pennies`` are repo-defined instances; see their docstrings.
"""

from __future__ import annotations

import numpy as np

from .game import Game


def _bimatrix(u1, u2, labels, name):
    return Game((np.array(u1, float), np.array(u2, float)), labels=labels, name=name)


def fig1_dominance() -> Game:
    """Dominance-solvable 2x2 game: bottom is strictly dominated by top."""
    return _bimatrix(
        [[1, 1], [0, 0]],
        [[1, 0], [1, 0.9]],
        [["top", "bottom"], ["left", "right"]],
        "fig1_dominance",
    )


def fig2_outside_option() -> Game:
    """Outside-option supergame of entry deterrence (3x2)."""
    return _bimatrix(
        [[2, 0], [0, 2], [-1, 1]],
        [[2, 0], [0, 0], [0, 3]],
        [["a0", "a1", "a2"], ["b0", "b1"]],
        "fig2_outside_option",
    )


def fig3_coordination() -> Game:
    """2x2 coordination game with identity payoff matrices."""
    return _bimatrix(np.eye(2), np.eye(2), [["a0", "a1"], ["b0", "b1"]],
                     "fig3_coordination")


def entry_deterrence() -> Game:
    """Repo-defined entry deterrence instance.

    Entrant {enter, stay out}, incumbent {fight, share}. "fight" is weakly
    dominated by "share" with a strict gap only when the entrant enters.
    """
    return _bimatrix(
        [[-1, 2], [0, 0]],
        [[-1, 1], [2, 2]],
        [["enter", "stay_out"], ["fight", "share"]],
        "entry_deterrence",
    )


def matching_pennies() -> Game:
    """Standard +-1 zero-sum matching pennies."""
    return _bimatrix(
        [[1, -1], [-1, 1]],
        [[-1, 1], [1, -1]],
        [["heads", "tails"], ["heads", "tails"]],
        "matching_pennies",
    )


BUILTINS = {
    "fig1_dominance": fig1_dominance,
    "fig2_outside_option": fig2_outside_option,
    "fig3_coordination": fig3_coordination,
    "entry_deterrence": entry_deterrence,
    "matching_pennies": matching_pennies,
}


def get_builtin(name: str) -> Game:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin game {name!r}; "
                       f"choose from {', '.join(BUILTINS)}") from None
