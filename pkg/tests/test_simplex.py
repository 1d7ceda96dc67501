import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodyn.simplex import LPError, feasible_point, phase_one

linprog = pytest.importorskip("scipy.optimize").linprog


def scipy_feasible(A_ge, b_ge, A_eq, b_eq):
    n = A_ge.shape[1]
    res = linprog(np.zeros(n), A_ub=-A_ge, b_ub=-b_ge, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * n, method="highs")
    return res.status == 0


def test_phase_one_simple():
    x = phase_one([[1, 1]], [1])
    assert x is not None
    assert x.sum() == pytest.approx(1.0)
    assert np.all(x >= 0)


def test_phase_one_infeasible():
    assert phase_one([[1, 1]], [-1]) is None
    assert phase_one([[1, 0], [1, 0]], [1, 2]) is None


def test_shape_mismatch():
    with pytest.raises(LPError):
        phase_one([[1, 1]], [1, 2])
    with pytest.raises(LPError):
        feasible_point()


def test_degenerate_terminates():
    # several redundant rows through the same vertex
    A = np.array([[1, 1, 0], [1, 1, 0], [2, 2, 0], [0, 0, 1]])
    x = phase_one(A, [1, 1, 2, 0])
    assert x is not None
    np.testing.assert_allclose(A @ x, [1, 1, 2, 0], atol=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 5))
def test_feasibility_agrees_with_scipy(seed, n, m):
    rng = np.random.default_rng(seed)
    A_ge = rng.integers(-3, 4, size=(m, n)).astype(float)
    b_ge = rng.integers(-2, 3, size=m).astype(float)
    A_eq = np.ones((1, n))
    b_eq = np.array([1.0])
    ours = feasible_point(A_ge, b_ge, A_eq, b_eq)
    assert (ours is not None) == scipy_feasible(A_ge, b_ge, A_eq, b_eq)
    if ours is not None:
        assert np.all(A_ge @ ours >= b_ge - 1e-8)
        assert ours.sum() == pytest.approx(1.0, abs=1e-8)
