"""Compare the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times the raw kernels on a few game sizes and one full second-order
integration per backend.
"""

import argparse
import timeit

import numpy as np

from hodyn import _kernels_py
from hodyn.builtins import get_builtin
from hodyn.dynamics import DynamicsConfig, RelativeScoreField
from hodyn.game import Game, MixedProfile
from hodyn.integrator import IntegratorConfig, integrate

try:
    from hodyn import _kernels as _compiled
except ImportError:
    _compiled = None


def _setup(shape, seed=0):
    rng = np.random.default_rng(seed)
    g = Game(tuple(rng.normal(size=shape) for _ in shape))
    counts = np.asarray(g.action_counts, dtype=np.int64)
    x = np.concatenate([rng.dirichlet(np.ones(n)) for n in shape])
    z = rng.normal(size=2 * (g.num_actions - len(shape)))
    return g, counts, x, z


def bench_kernels(mod, shape, repeat):
    g, counts, x, z = _setup(shape)
    lam = np.ones(len(shape))
    out = np.empty(g.num_actions)
    outz = np.empty_like(z)
    t_pay = min(timeit.repeat(lambda: mod.action_payoffs(g.table, counts, x, out),
                              number=1000, repeat=repeat)) / 1000
    t_rhs = min(timeit.repeat(lambda: mod.zd_rhs(g.table, counts, lam, z, 2, outz),
                              number=1000, repeat=repeat)) / 1000
    return t_pay, t_rhs


class _Swapped(RelativeScoreField):
    """Relative-score field forced onto one kernel module."""

    def __init__(self, game, cfg, mod):
        super().__init__(game, cfg)
        self.mod = mod

    def rhs(self, flat):
        flat = np.ascontiguousarray(flat, dtype=float)
        return self.mod.zd_rhs(self._inner.table, self.counts, self.lambdas, flat,
                               self.order, np.empty_like(flat))

    def profile(self, flat):
        x = np.empty(self.game.num_actions)
        self.mod.reduced_gibbs_blocks(np.ascontiguousarray(flat[:self.width]),
                                      self.lambdas, self.counts, x)
        return x[self._unperm]


def bench_integration(mod, repeat):
    g = get_builtin("fig2_outside_option")
    f = _Swapped(g, DynamicsConfig(order=2), mod)
    y0 = f.initial(MixedProfile.barycenter(g))
    cfg = IntegratorConfig(t_end=20)
    return min(timeit.repeat(lambda: integrate(f, y0, cfg), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.append(("compiled", _compiled))
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'backend':<10}{'game':<10}{'payoffs [us]':>14}{'zd_rhs [us]':>14}")
    for shape in [(2, 2), (3, 3), (4, 4, 4)]:
        for name, mod in backends:
            t_pay, t_rhs = bench_kernels(mod, shape, args.repeat)
            tag = "x".join(map(str, shape))
            print(f"{name:<10}{tag:<10}{t_pay * 1e6:>14.2f}{t_rhs * 1e6:>14.2f}")
    print()
    for name, mod in backends:
        t = bench_integration(mod, max(1, args.repeat // 2))
        print(f"{name:<10}fig2_outside_option n=2, t_end=20: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
