import math

import numpy as np
import pytest

from hodyn.builtins import get_builtin
from hodyn.dynamics import DynamicsConfig, make_field
from hodyn.game import Game, MixedProfile
from hodyn.integrator import (BlowupError, BoundaryError, IntegratorConfig, Method,
                              TruncationError, event_convergence, event_extinction,
                              hermite, integrate)
from hodyn.simulation import simulate


class Linear:
    """y' = A y + b, enough of the field protocol for integrate."""

    kind = "test"

    def __init__(self, A, b=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.zeros(self.A.shape[0]) if b is None else np.asarray(b, dtype=float)

    def __call__(self, t, y):
        return self.A @ y + self.b

    def profile(self, y):
        return np.asarray(y)

    def postprocess(self, y):
        return y

    def check(self, y):
        pass


class Bad(Linear):
    def __call__(self, t, y):
        return np.full_like(y, np.nan) if t > 0.5 else np.ones_like(y)


@pytest.mark.parametrize("method", list(Method))
def test_zero_field_constant(method):
    tr = integrate(Linear([[0.0, 0.0], [0.0, 0.0]]), [0.3, -2.0],
                   IntegratorConfig(method=method, t_end=3))
    assert np.all(tr.states == np.array([0.3, -2.0]))
    assert np.all(np.diff(tr.times) > 0)
    assert tr.t_end == 3.0


def test_unit_flow_exact_rk4():
    g = Game((np.ones((1, 1)), np.ones((1, 1))))
    f = make_field(g, DynamicsConfig(order=1, kind="ld"))
    y0 = np.array([0.25, -1.0])
    tr = integrate(f, y0, IntegratorConfig(method="rk4", step=0.125, t_end=4,
                                           sample_every=0.125))
    np.testing.assert_allclose(tr.states, y0 + tr.times[:, None], rtol=0, atol=1e-13)


def test_ld2_constant_game_bias_linear():
    g = Game((np.zeros((2, 2)), np.zeros((2, 2))))
    c = np.array([0.4, -0.4, 1.0, -1.0])
    tr = simulate(g, DynamicsConfig(order=2, kind="ld"), MixedProfile.barycenter(g),
                  IntegratorConfig(t_end=5), bias={1: c})
    y0 = tr.states[0, :4]
    np.testing.assert_allclose(tr.states[:, :4], y0 + np.outer(tr.times, c), atol=1e-12)
    np.testing.assert_allclose(tr.states[:, 4:], np.tile(c, (tr.times.size, 1)), atol=1e-13)


def test_extinction_fig1_closed_form_time():
    g = get_builtin("fig1_dominance")
    ev = event_extinction(g, 0, 1, 1e-6)
    tr = simulate(g, DynamicsConfig(order=2, kind="zd"), MixedProfile.barycenter(g),
                  IntegratorConfig(t_end=8, rel_tol=1e-10, abs_tol=1e-12), events=[ev])
    hit = tr.first_event("extinction")
    assert hit is not None
    # z_bottom = -t^2/2 exactly, so x_bottom = 1 / (1 + exp(t^2/2))
    assert hit.time == pytest.approx(math.sqrt(2 * math.log(1e6 - 1)), abs=1e-8)


def test_extinction_not_fired_on_symmetric_line():
    g = get_builtin("fig3_coordination")
    ev = event_extinction(g, 0, 0, 1e-6)
    tr = simulate(g, DynamicsConfig(order=2), [[0.6, 0.4], [0.6, 0.4]],
                  IntegratorConfig(t_end=20), events=[ev])
    assert tr.first_event("extinction") is None
    np.testing.assert_allclose(tr.profiles[:, :2], tr.profiles[:, 2:], atol=1e-12)


def test_threshold_half_consistent_with_samples():
    g = get_builtin("fig1_dominance")
    ev = event_extinction(g, 0, 1, 0.5)
    tr = simulate(g, DynamicsConfig(order=2), MixedProfile.barycenter(g),
                  IntegratorConfig(t_end=3), events=[ev])
    hit = tr.first_event("extinction")
    share = tr.share(g, 0, 1)
    assert hit is not None
    assert np.all(share[tr.times > hit.time + 1e-9] < 0.5)
    assert np.all(share[tr.times < hit.time - 1e-9] >= 0.5)

    # a stationary barycenter never dips below one half
    co = get_builtin("fig3_coordination")
    tr = simulate(co, DynamicsConfig(order=2), MixedProfile.barycenter(co),
                  IntegratorConfig(t_end=3), events=[event_extinction(co, 0, 1, 0.5)])
    assert tr.first_event("extinction") is None


def test_terminal_event_stops_early():
    g = get_builtin("fig1_dominance")
    ev = event_extinction(g, 0, 1, 1e-3, terminal=True)
    tr = simulate(g, DynamicsConfig(order=2), MixedProfile.barycenter(g),
                  IntegratorConfig(t_end=20), events=[ev])
    assert tr.t_end == pytest.approx(tr.events[0].time, abs=1e-9)
    assert tr.t_end < 20


def test_convergence_event_coordination():
    g = get_builtin("fig3_coordination")
    target = MixedProfile.pure(g, (0, 0))
    tr = simulate(g, DynamicsConfig(order=2), [[0.6, 0.4], [0.6, 0.4]],
                  IntegratorConfig(t_end=15), events=[event_convergence(target, 1e-3)])
    hit = tr.first_event("convergence")
    assert hit is not None
    i = np.searchsorted(tr.times, hit.time)
    assert np.all(np.max(np.abs(tr.profiles[i + 1:] - target.flat), axis=1) <= 1e-3)
    assert np.max(np.abs(tr.profiles[max(i - 2, 0)] - target.flat)) > 1e-3 - 1e-6


def test_convergence_event_matching_pennies_never():
    g = get_builtin("matching_pennies")
    center = MixedProfile([[0.5, 0.5], [0.5, 0.5]])
    tr = simulate(g, DynamicsConfig(order=2), [[0.55, 0.45], [0.5, 0.5]],
                  IntegratorConfig(t_end=20), events=[event_convergence(center, 1e-3)])
    assert tr.first_event("convergence") is None


def test_convergence_event_immediate_at_stationary_target():
    g = get_builtin("matching_pennies")
    center = MixedProfile([[0.5, 0.5], [0.5, 0.5]])
    tr = simulate(g, DynamicsConfig(order=2), center, IntegratorConfig(t_end=1),
                  events=[event_convergence(center, 1e-3)])
    assert tr.first_event("convergence").time == 0.0


def test_event_argument_checks():
    g = get_builtin("fig1_dominance")
    with pytest.raises(ValueError):
        event_extinction(g, 0, 1, 1.5)
    with pytest.raises(ValueError):
        event_convergence(MixedProfile.barycenter(g), 0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(step=-1)


def _coord_ld2(cfg):
    g = get_builtin("fig3_coordination")
    return simulate(g, DynamicsConfig(order=2, kind="ld"), [[0.7, 0.3], [0.35, 0.65]], cfg)


def test_rk4_fourth_order():
    base = dict(method="rk4", t_end=5, sample_every=0.2, max_step=1.0)
    ref = _coord_ld2(IntegratorConfig(step=0.2 / 16, **base)).states
    e1 = np.max(np.abs(_coord_ld2(IntegratorConfig(step=0.2, **base)).states - ref))
    e2 = np.max(np.abs(_coord_ld2(IntegratorConfig(step=0.1, **base)).states - ref))
    assert 12 < e1 / e2 < 20


def test_adaptive_matches_fixed():
    a = _coord_ld2(IntegratorConfig(t_end=10, rel_tol=1e-9, abs_tol=1e-11))
    b = _coord_ld2(IntegratorConfig(method="rk4", step=1e-4, t_end=10))
    assert np.max(np.abs(a.profiles - b.profiles)) < 1e-6


def test_bit_identical_runs():
    cfg = IntegratorConfig(t_end=6)
    a, b = _coord_ld2(cfg), _coord_ld2(cfg)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, b.times)


def test_profiles_stay_on_simplex():
    g = get_builtin("fig2_outside_option")
    tr = simulate(g, DynamicsConfig(order=2), [[0.2, 0.3, 0.5], [0.4, 0.6]],
                  IntegratorConfig(t_end=30))
    assert np.all(tr.profiles >= 0)
    np.testing.assert_allclose(tr.profiles[:, :3].sum(axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(tr.profiles[:, 3:].sum(axis=1), 1, atol=1e-12)


def test_truncation_keeps_partial_trajectory():
    with pytest.raises(TruncationError) as info:
        integrate(Linear([[1.0]]), [1.0], IntegratorConfig(max_steps=3, t_end=10))
    assert info.value.trajectory is not None
    assert info.value.trajectory.t_end < 10


def test_blowup_reports_state():
    with pytest.raises(BlowupError) as info:
        integrate(Bad([[0.0]]), [0.0], IntegratorConfig(method="rk4", step=0.1, t_end=2))
    assert info.value.state is not None


def test_strategy_space_boundary_guard():
    g = get_builtin("fig1_dominance")
    with pytest.raises(BoundaryError):
        simulate(g, DynamicsConfig(order=2, kind="rd"), MixedProfile.barycenter(g),
                 IntegratorConfig(t_end=20))


def test_hermite_reproduces_cubic():
    p = np.poly1d([0.5, -1.0, 2.0, 3.0])
    dp = p.deriv()
    for t in (0.1, 0.5, 0.9):
        v = hermite(0.0, np.array([p(0)]), np.array([dp(0)]),
                    1.0, np.array([p(1)]), np.array([dp(1)]), t)
        assert v[0] == pytest.approx(p(t), abs=1e-14)


def test_boundary_start_runs_on_support():
    g = get_builtin("fig2_outside_option")
    tr = simulate(g, DynamicsConfig(order=2), [[0.5, 0.5, 0.0], [0.3, 0.7]],
                  IntegratorConfig(t_end=5))
    assert np.all(tr.profiles[:, 2] == 0)
    assert tr.meta["field"] == "lifted"
