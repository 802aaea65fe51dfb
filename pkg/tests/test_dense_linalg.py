import numpy as np
import pytest

from geonmpc.errors import DimensionMismatch, SingularMatrix
from geonmpc.linalg import (
    LuFactors,
    axpy,
    dot,
    lu_factor,
    lu_solve,
    matvec,
    norm2,
    scale,
)


def reconstruct(f: LuFactors) -> np.ndarray:
    """Rebuild P @ A from the packed factors."""
    n = f.dim
    lower = np.tril(f.lu, -1) + np.eye(n)
    upper = np.triu(f.lu)
    return lower @ upper


def test_identity_factors_trivially():
    f = lu_factor(np.eye(3))
    assert list(f.perm) == [0, 1, 2]
    assert np.array_equal(f.lu, np.eye(3))


def test_swap_matrix_pivots():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    f = lu_factor(a)
    assert list(f.perm) == [1, 0]
    x = lu_solve(f, np.array([2.0, 3.0]))
    assert np.allclose(a @ x, [2.0, 3.0], rtol=0, atol=1e-15)


def test_reconstruction_random_10x10():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((10, 10))
    f = lu_factor(a)
    err = np.max(np.abs(a[f.perm] - reconstruct(f)))
    assert err <= 1e-12 * np.max(np.abs(a))


def test_solve_residual_20x20():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((20, 20))
    b = rng.standard_normal(20)
    x = lu_solve(lu_factor(a), b)
    assert norm2(a @ x - b) <= 1e-10 * norm2(b)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 21, 34, 50])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_solve_roundtrip_property(n, seed):
    rng = np.random.default_rng(1000 * seed + n)
    a = rng.standard_normal((n, n))
    if np.linalg.cond(a) >= 1e8:
        pytest.skip("draw too ill-conditioned for the tolerance")
    b = rng.standard_normal(n)
    x = lu_solve(lu_factor(a), b)
    assert norm2(a @ x - b) <= 1e-9 * max(1.0, norm2(b))


def test_factorization_deterministic():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((12, 12))
    f1 = lu_factor(a)
    f2 = lu_factor(a.copy())
    assert np.array_equal(f1.lu, f2.lu)
    assert np.array_equal(f1.perm, f2.perm)


def test_singular_matrix_raises():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrix):
        lu_factor(a)
    with pytest.raises(SingularMatrix):
        lu_factor(np.zeros((3, 3)))


def test_factor_does_not_mutate_input():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    keep = a.copy()
    lu_factor(a)
    assert np.array_equal(a, keep)


def test_shape_errors():
    with pytest.raises(DimensionMismatch):
        lu_factor(np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        lu_factor(np.ones(4))
    f = lu_factor(np.eye(2))
    with pytest.raises(DimensionMismatch):
        lu_solve(f, np.ones(3))
    with pytest.raises(DimensionMismatch):
        matvec(np.eye(2), np.ones(3))
    with pytest.raises(DimensionMismatch):
        axpy(1.0, np.ones(2), np.ones(3))
    with pytest.raises(DimensionMismatch):
        dot(np.ones(2), np.ones(3))


def test_blas_helpers():
    x = np.array([1.0, 2.0, 2.0])
    y = np.array([1.0, 0.0, -1.0])
    assert dot(x, y) == -1.0
    assert norm2(x) == 3.0
    assert np.array_equal(axpy(2.0, x, y), [3.0, 4.0, 3.0])
    assert np.array_equal(scale(-1.0, x), [-1.0, -2.0, -2.0])
    assert np.array_equal(matvec(np.diag([1.0, 2.0, 3.0]), x), [1.0, 4.0, 6.0])
