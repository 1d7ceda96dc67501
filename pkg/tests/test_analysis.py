import math

import numpy as np
import pytest

from conftest import random_game
from hodyn.analysis import (Classification, FolkTheoremViolation, InsufficientGrowthError,
                            NonConvergenceError, classify_limit, extinction_rate_fit,
                            field_divergence, kl_curve, kl_divergence, strict_convergence_fit,
                            weak_dominance_escape_check)
from hodyn.builtins import get_builtin
from hodyn.dominance import dominates_pure
from hodyn.dynamics import DynamicsConfig, make_field
from hodyn.game import Game, MixedProfile
from hodyn.integrator import IntegratorConfig, Trajectory
from hodyn.simulation import simulate
from hodyn.verify import rest_run


def run(name, x0, n, t_end, **kw):
    g = get_builtin(name)
    return g, simulate(g, DynamicsConfig(order=n, **kw), x0, IntegratorConfig(t_end=t_end))


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert kl_divergence([1, 0], [math.exp(-5), 1 - math.exp(-5)]) == pytest.approx(5.0)
    expect = 0.5 * math.log(0.5 / 0.9) + 0.5 * math.log(0.5 / 0.1)
    assert kl_divergence([0.5, 0.5], [0.9, 0.1]) == pytest.approx(expect, abs=1e-15)
    assert kl_divergence([0.5, 0.5], [0.9, 0.1]) == pytest.approx(0.5108, abs=1e-4)
    assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf
    assert kl_divergence([1.0, 0.0], [1.0, 0.0]) == 0.0


@pytest.mark.parametrize("n,lo,hi", [(1, 0.9, 1.1), (2, 1.8, 2.2)])
def test_fig1_extinction_exponent(n, lo, hi):
    g, tr = run("fig1_dominance", MixedProfile.barycenter(get_builtin("fig1_dominance")),
                n, 20)
    fit = extinction_rate_fit(tr, g, 1, 0, n)
    assert lo <= fit.exponent_estimate <= hi
    # z_bottom = -t^n/n! exactly, so D ~ t^n/n! with unit coefficient
    assert fit.coefficient_estimate == pytest.approx(1.0, rel=0.05)
    assert fit.window[0] < fit.window[1]
    assert fit.residual >= 0
    assert "fit.exponent=" in fit.to_text()


def test_fig1_lower_bound_pointwise():
    g, tr = run("fig1_dominance", MixedProfile.barycenter(get_builtin("fig1_dominance")),
                2, 20)
    margin = dominates_pure(g, 0, 1, 0).margin
    D, sat = kl_curve(tr, g, [0, 1], 0)
    t = tr.times
    tail = (t >= 10) & ~sat
    # lower-order slack allowed by the bound is a constant here
    assert np.all(D[tail] >= margin * t[tail] ** 2 / 2 - 1.0)
    assert np.all(np.diff(D[t >= 1]) >= -1e-9)


def test_insufficient_growth_for_undominated():
    g, tr = run("matching_pennies", [[0.55, 0.45], [0.5, 0.5]], 2, 10)
    with pytest.raises(InsufficientGrowthError):
        extinction_rate_fit(tr, g, 0, 0, 2)


@pytest.mark.parametrize("n,lo,hi", [(1, 0.9, 1.1), (2, 1.8, 2.2)])
def test_strict_convergence_rate(n, lo, hi):
    g, tr = run("fig3_coordination", [[0.7, 0.3], [0.7, 0.3]], n, 20)
    fit = strict_convergence_fit(tr, g, [[1, 0], [1, 0]], n)
    assert lo <= fit.exponent_estimate <= hi


def test_strict_convergence_errors():
    g = Game((np.zeros((2, 2)), np.zeros((2, 2))))
    tr = simulate(g, DynamicsConfig(order=2), MixedProfile.barycenter(g),
                  IntegratorConfig(t_end=5))
    with pytest.raises(NonConvergenceError):
        strict_convergence_fit(tr, g, [[1, 0], [1, 0]], 2)
    co, tr = run("fig3_coordination", [[0.3, 0.7], [0.3, 0.7]], 2, 10)
    with pytest.raises(NonConvergenceError):
        strict_convergence_fit(tr, co, [[1, 0], [1, 0]], 2)


def test_classify_coordination_barycenter():
    g, tr = run("fig3_coordination", [[0.5, 0.5], [0.5, 0.5]], 2, 20)
    rep = classify_limit(tr, g)
    assert rep.converged
    assert rep.classification is Classification.NASH
    np.testing.assert_allclose(rep.limit.flat, 0.5)


def test_classify_fig1_strict():
    g, tr = run("fig1_dominance", MixedProfile.barycenter(get_builtin("fig1_dominance")),
                2, 20)
    rep = classify_limit(tr, g)
    assert rep.converged
    assert rep.classification is Classification.STRICT_NASH
    assert rep.limit.support() == ((0,), (0,))
    assert "limit.classification=strict-nash" in rep.to_text()


def test_classify_matching_pennies_not_stationary():
    g, tr = run("matching_pennies", [[0.6, 0.4], [0.5, 0.5]], 2, 50)
    rep = classify_limit(tr, g)
    assert not rep.converged
    assert rep.classification is Classification.NOT_STATIONARY


def test_classify_boundary_restricted_equilibrium():
    # pure (bottom, right) is stationary but not Nash; boundary start is allowed
    g, tr = run("fig1_dominance", [[0, 1], [0, 1]], 2, 5)
    rep = classify_limit(tr, g)
    assert rep.classification is Classification.RESTRICTED_EQ_ONLY


def test_classify_raises_on_fake_interior_non_nash():
    g = get_builtin("fig1_dominance")
    times = np.linspace(0, 10, 101)
    prof = np.tile([0.4, 0.6, 0.5, 0.5], (101, 1))
    with pytest.raises(FolkTheoremViolation):
        classify_limit(Trajectory(times, prof, prof), g)


def test_divergence_estimator():
    assert field_divergence(lambda y: -y, np.ones(7)) == pytest.approx(-7, abs=1e-8)
    assert field_divergence(lambda t, y: -2 * y, np.ones(3)) == pytest.approx(-6, abs=1e-8)


def test_divergence_zero_for_score_fields(rng):
    g = random_game(rng, (2, 2), integer=False)
    for kind in ("ld", "zd"):
        f = make_field(g, DynamicsConfig(order=2, kind=kind))
        for _ in range(100):
            assert abs(field_divergence(f, rng.normal(size=f.dim) * 3)) < 1e-4


CENTER = [[0, 1], [0.85, 0.15]]


@pytest.mark.parametrize("x0", [((0.05, 0.95), (0.9, 0.1)), ((0.02, 0.98), (0.85, 0.15)),
                                ((0.1, 0.9), (0.85, 0.15))])
def test_weak_escape_order_contrast(x0):
    g = get_builtin("entry_deterrence")
    esc2 = weak_dominance_escape_check(rest_run("entry_deterrence", x0, 2, 60.0), g,
                                       0, 1, CENTER, 0.31)
    assert esc2.escaped
    assert 0 < esc2.escape_time < 60
    esc1 = weak_dominance_escape_check(rest_run("entry_deterrence", x0, 1, 60.0), g,
                                       0, 1, CENTER, 0.31)
    assert not esc1.escaped


def test_strict_equilibrium_never_escapes():
    g, tr = run("fig3_coordination", [[0.9, 0.1], [0.9, 0.1]], 2, 20)
    res = weak_dominance_escape_check(tr, g, 1, 0, [[1, 0], [1, 0]], 0.2)
    assert not res
