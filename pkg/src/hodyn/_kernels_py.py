"""NumPy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` module; selected
by ``hodyn.kernels`` when the extension is unavailable or disabled.
"""

import numpy as np


def action_payoffs(table, counts, x, out):
    """u_{k,a}(x) for every player k and action a, written into ``out``."""
    n_players = counts.shape[0]
    shape = tuple(int(c) for c in counts)
    off = 0
    blocks = []
    for k in range(n_players):
        blocks.append(x[off:off + shape[k]])
        off += shape[k]
    off = 0
    for k in range(n_players):
        t = table[:, k].reshape(shape)
        for j in reversed(range(n_players)):
            if j != k:
                t = np.tensordot(t, blocks[j], axes=([j], [0]))
        out[off:off + shape[k]] = t
        off += shape[k]
    return out


def gibbs_blocks(y, lambdas, counts, out):
    off = 0
    for k in range(counts.shape[0]):
        n = int(counts[k])
        v = lambdas[k] * y[off:off + n]
        e = np.exp(v - v.max())
        out[off:off + n] = e / e.sum()
        off += n
    return out


def reduced_gibbs_blocks(z, lambdas, counts, out):
    off = 0
    zoff = 0
    for k in range(counts.shape[0]):
        n = int(counts[k])
        v = np.empty(n)
        v[0] = 0.0
        v[1:] = lambdas[k] * z[zoff:zoff + n - 1]
        e = np.exp(v - v.max())
        out[off:off + n] = e / e.sum()
        off += n
        zoff += n - 1
    return out


def ld_rhs(table, counts, lambdas, state, order, out):
    a = int(counts.sum())
    out[:(order - 1) * a] = state[a:order * a]
    x = np.empty(a)
    gibbs_blocks(state[:a], lambdas, counts, x)
    action_payoffs(table, counts, x, out[(order - 1) * a:order * a])
    return out


def zd_rhs(table, counts, lambdas, state, order, out):
    a = int(counts.sum())
    m = a - counts.shape[0]
    out[:(order - 1) * m] = state[m:order * m]
    x = np.empty(a)
    reduced_gibbs_blocks(state[:m], lambdas, counts, x)
    u = np.empty(a)
    action_payoffs(table, counts, x, u)
    top = out[(order - 1) * m:order * m]
    off = 0
    zoff = 0
    for k in range(counts.shape[0]):
        n = int(counts[k])
        top[zoff:zoff + n - 1] = u[off + 1:off + n] - u[off]
        off += n
        zoff += n - 1
    return out
