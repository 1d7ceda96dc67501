import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_game
from hodyn.builtins import get_builtin
from hodyn.dominance import (Kind, Mode, dominates_mixed, dominates_pure,
                             find_pure_dominator_mixed, iterated_elimination)
from hodyn.game import Game, GameError, Restriction, action_payoffs, restrict


def labels_of(report):
    return report.survivor_labels()


def test_fig1_bottom_strictly_dominated_margin_one():
    g = get_builtin("fig1_dominance")
    rel = dominates_pure(g, 0, 1, 0)
    assert rel.kind is Kind.STRICT
    assert rel.margin == pytest.approx(1.0)
    assert dominates_pure(g, 0, 0, 1).kind is Kind.NONE


def test_outside_option_a2_dominated():
    g = get_builtin("fig2_outside_option")
    assert dominates_pure(g, 0, 2, 0).kind is Kind.NONE
    assert dominates_pure(g, 0, 2, 1).kind is Kind.STRICT
    # b1 is only weakly dominated once a2 is gone
    assert dominates_pure(g, 1, 1, 0).kind is Kind.NONE
    sub = restrict(g, Restriction(((0, 1), (0, 1))))
    assert dominates_pure(sub, 1, 1, 0).kind is Kind.WEAK
    rel = dominates_mixed(g, 0, [0, 0, 1], [0.5, 0.5, 0])
    assert rel.kind is Kind.WEAK
    assert rel.witness == (0,)
    qp = find_pure_dominator_mixed(g, 0, 2, strict=True)
    assert qp is not None
    assert dominates_mixed(g, 0, [0, 0, 1], qp).kind is Kind.STRICT


def test_entry_deterrence_fight_weakly_dominated_with_witness():
    g = get_builtin("entry_deterrence")
    rel = dominates_pure(g, 1, 0, 1)
    assert rel.kind is Kind.WEAK
    assert rel.margin == 0.0
    assert rel.witness is not None
    assert rel.witness_gap > 0
    assert bool(rel)


def test_self_comparison_and_bad_vectors():
    g = get_builtin("fig1_dominance")
    with pytest.raises(GameError):
        dominates_pure(g, 0, 1, 1)
    with pytest.raises(GameError):
        dominates_mixed(g, 0, [0.5, 0.6], [1, 0])


def test_iterated_fig1_two_rounds():
    g = get_builtin("fig1_dominance")
    rep = iterated_elimination(g, Mode.STRICT_PURE)
    assert rep.num_rounds == 2
    assert [(e.player, e.label) for e in rep.rounds[0]] == [(0, "bottom")]
    assert [(e.player, e.label) for e in rep.rounds[1]] == [(1, "right")]
    assert labels_of(rep) == (("top",), ("left",))
    assert rep.is_solvable()
    assert "dominance_solvable=true" in rep.to_text()


def test_iterated_fig2_modes():
    g = get_builtin("fig2_outside_option")
    pure = iterated_elimination(g, "strict-pure")
    assert pure.num_rounds == 1
    assert labels_of(pure) == (("a0", "a1"), ("b0", "b1"))
    mixed = iterated_elimination(g, "strict-mixed")
    assert labels_of(mixed)[0] == ("a0", "a1")
    weak = iterated_elimination(g, "weak-then-strict")
    assert weak.num_rounds == 1
    assert [(e.player, e.label) for e in weak.rounds[0]] == [(0, "a2")]
    assert labels_of(weak) == (("a0", "a1"), ("b0", "b1"))


def test_matching_pennies_nothing_removed():
    g = get_builtin("matching_pennies")
    for mode in Mode:
        rep = iterated_elimination(g, mode)
        assert rep.num_rounds == 0
        assert not rep.is_solvable()


def test_entry_deterrence_weak_removes_fight():
    g = get_builtin("entry_deterrence")
    assert iterated_elimination(g, "strict-mixed").num_rounds == 0
    rep = iterated_elimination(g, "weak-then-strict")
    removed = [(e.player, e.label) for rnd in rep.rounds for e in rnd]
    assert (1, g.labels[1][0]) in removed
    assert rep.is_solvable()


def test_strict_dominance_implies_weak(rng):
    for _ in range(20):
        g = random_game(rng, (3, 3))
        for a, b in itertools.permutations(range(3), 2):
            rel = dominates_pure(g, 0, a, b)
            if rel.kind is Kind.STRICT:
                # strict gap shows up at every opponent vertex
                M = g.payoffs[0]
                assert np.all(M[b] - M[a] > 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_vertex_sufficiency(seed):
    """A vertex-checked strict dominance holds at random interior opponents."""
    rng = np.random.default_rng(seed)
    g = random_game(rng, (3, 2, 2))
    for a, b in itertools.permutations(range(3), 2):
        rel = dominates_pure(g, 0, a, b)
        if rel.kind is not Kind.STRICT:
            continue
        for _ in range(5):
            x = [np.ones(3) / 3, rng.dirichlet([1, 1]), rng.dirichlet([1, 1])]
            u = action_payoffs(g, x, 0)
            assert u[b] - u[a] >= rel.margin - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_strict_elimination_order_independent(seed):
    """Strict survivors do not depend on the order of the players."""
    rng = np.random.default_rng(seed)
    g = random_game(rng, (3, 3), low=-3, high=4)
    rep = iterated_elimination(g, "strict-mixed")
    swapped = Game((g.payoffs[1].T, g.payoffs[0].T))
    rep2 = iterated_elimination(swapped, "strict-mixed")
    assert rep.final.actions == tuple(reversed(rep2.final.actions))


def test_start_restriction_respected():
    g = get_builtin("fig1_dominance")
    rep = iterated_elimination(g, start=Restriction(((0, 1), (1,))))
    assert rep.final.actions[1] == (1,)
