"""One-call runs: build the field, the initial state and integrate.

Profiles on the boundary of X are handled by integrating on the sub-game
spanned by their support (faces of X are invariant) and lifting the sampled
profiles back into the full game.
"""

from __future__ import annotations

import numpy as np

from .dynamics import DynamicsConfig, Kind, make_field
from .game import Game, Restriction, as_profile, restrict
from .integrator import IntegratorConfig, Trajectory, integrate


class LiftedField:
    """Field of a sub-game whose ``profile`` reports full-game profiles."""

    def __init__(self, inner, game: Game, r: Restriction):
        self.inner = inner
        self.game = game
        self.kind = "lifted"
        self.index = np.concatenate([np.asarray(s, dtype=int) + off
                                     for s, off in zip(r.actions, game.offsets[:-1])])

    def __call__(self, t, y):
        return self.inner(t, y)

    def __getattr__(self, name):
        return getattr(self.inner, name)

    def profile(self, y):
        x = np.zeros(self.game.num_actions)
        x[self.index] = self.inner.profile(y)
        return x


def support_restriction(game: Game, x) -> Restriction:
    x = as_profile(game, x)
    return Restriction(tuple(tuple(int(a) for a in np.flatnonzero(x[k] > 0))
                             for k in range(game.num_players)))


def build(game: Game, cfg: DynamicsConfig, x0, bias=None):
    """Return (field, initial flat state) for a start at ``x0``."""
    x0 = as_profile(game, x0)
    if x0.is_interior():
        f = make_field(game, cfg)
        return f, f.initial(x0, bias)
    r = support_restriction(game, x0)
    if bias:
        raise ValueError("derivative biases need an interior initial profile")
    sub = restrict(game, r)
    sub_cfg = cfg
    if cfg.base_actions is not None:
        sub_cfg = DynamicsConfig(cfg.order, cfg.kind, cfg.lambdas, None, cfg.observable)
    inner = make_field(sub, sub_cfg)
    xs = [x0[k][list(s)] for k, s in enumerate(r.actions)]
    return LiftedField(inner, game, r), inner.initial(xs)


def simulate(game: Game, cfg: DynamicsConfig, x0, icfg: IntegratorConfig | None = None,
             bias=None, events=()) -> Trajectory:
    """Integrate from ``x0`` (at rest unless ``bias`` sets derivative levels)."""
    icfg = icfg or IntegratorConfig()
    f, y0 = build(game, cfg, x0, bias)
    meta = {
        "game": game.fingerprint(),
        "dynamics": {"kind": cfg.kind.value, "order": cfg.order,
                     "lambdas": list(cfg.lambda_vector(game)),
                     "observable": cfg.observable.describe()},
        "initial": [float(v) for v in as_profile(game, x0).flat],
        "field": f.kind,
    }
    if bias:
        meta["bias"] = {int(r): [float(v) for v in vals] for r, vals in dict(bias).items()}
    traj = integrate(f, y0, icfg, events, meta)
    traj.meta["field_obj"] = f
    return traj


def rest_run(game: Game, x0, order: int, t_end: float, kind: Kind = Kind.ZD,
             **kw) -> Trajectory:
    """Shorthand for a rest start with default tolerances."""
    events = kw.pop("events", ())
    icfg = IntegratorConfig(t_end=t_end, **{k: kw.pop(k) for k in
                                             ("rel_tol", "abs_tol", "sample_every",
                                              "method", "step") if k in kw})
    cfg = DynamicsConfig(order=order, kind=kind, **kw)
    return simulate(game, cfg, x0, icfg, events=events)
