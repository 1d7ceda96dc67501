"""Dense-tableau phase-I simplex for small linear feasibility problems."""

from __future__ import annotations

import numpy as np


class LPError(RuntimeError):
    pass


def phase_one(A: np.ndarray, b: np.ndarray, tol: float = 1e-9,
              max_iter: int = 10_000) -> np.ndarray | None:
    """Find ``x >= 0`` with ``A @ x == b`` or return None.

    Uses an artificial basis and Bland's rule, so it terminates on degenerate
    problems. The returned point satisfies the equalities to about ``tol``.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    m, n = A.shape
    if b.size != m:
        raise LPError("row count mismatch between A and b")
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # tableau columns: n structural, m artificial, rhs
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    # reduced-cost row for min sum(artificials), priced out against the basis
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    for _ in range(max_iter):
        costs = T[m, :n + m]
        candidates = np.flatnonzero(costs < -tol)
        if candidates.size == 0:
            break
        col = int(candidates[0])
        column = T[:m, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            # unbounded direction cannot occur in phase I (objective >= 0)
            raise LPError("phase I reported an unbounded direction")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        T[row] /= T[row, col]
        for r in range(m + 1):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        basis[row] = col
    else:
        raise LPError("simplex iteration limit reached")

    if -T[m, -1] > tol * max(1.0, np.abs(b).max(initial=0.0)):
        return None
    x = np.zeros(n + m)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    return np.clip(x[:n], 0.0, None)


def feasible_point(A_ge=None, b_ge=None, A_eq=None, b_eq=None, n: int | None = None,
                   tol: float = 1e-9) -> np.ndarray | None:
    """Find ``x >= 0`` with ``A_ge @ x >= b_ge`` and ``A_eq @ x == b_eq``."""
    blocks, rhs = [], []
    m_ge = 0
    if A_ge is not None:
        A_ge = np.atleast_2d(np.asarray(A_ge, dtype=float))
        n = A_ge.shape[1]
        m_ge = A_ge.shape[0]
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        n = A_eq.shape[1]
    if n is None:
        raise LPError("no constraints given")
    if A_ge is not None:
        # surplus variables turn >= rows into equalities
        blocks.append(np.hstack([A_ge, -np.eye(m_ge)]))
        rhs.append(np.asarray(b_ge, dtype=float).reshape(-1))
    if A_eq is not None:
        blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], m_ge))]))
        rhs.append(np.asarray(b_eq, dtype=float).reshape(-1))
    x = phase_one(np.vstack(blocks), np.concatenate(rhs), tol=tol)
    return None if x is None else x[:n]
