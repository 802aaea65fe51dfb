"""Dense vector/matrix kernel: BLAS-2 style helpers and LU with partial pivoting.

Vectors are 1-d float64 ndarrays, matrices are 2-d row-major float64
ndarrays.  Everything here is sized for the small dense Jacobians this
package produces (a few hundred unknowns at most), so the factorization
is a plain right-looking LU with row pivoting and no blocking.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularMatrix

# A pivot column whose largest remaining entry is below this is treated as
# exactly singular.
PIVOT_TOL = 1e-14


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {v.shape}")
    return v


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class LuFactors:
    """Packed LU factors of a row-permuted square matrix.

    ``lu`` stores the unit-lower-triangular multipliers strictly below the
    diagonal and U on and above it; ``perm`` is the row permutation such
    that ``A[perm]`` equals ``L @ U``.
    """

    lu: np.ndarray
    perm: np.ndarray

    @property
    def dim(self) -> int:
        return self.lu.shape[0]


def lu_factor(a) -> LuFactors:
    """Factor a square matrix as ``P A = L U`` with partial row pivoting.

    Raises SingularMatrix when the best available pivot magnitude drops
    below ``PIVOT_TOL``.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise DimensionMismatch(f"lu_factor needs a square matrix, got {n}x{m}")
    if n < 1:
        raise DimensionMismatch("lu_factor needs dim >= 1")

    lu = a.copy()
    perm = np.arange(n)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[piv, k]) < PIVOT_TOL:
            raise SingularMatrix(
                f"pivot {abs(lu[piv, k]):.3e} below {PIVOT_TOL:g} in column {k}"
            )
        if piv != k:
            lu[[k, piv]] = lu[[piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return LuFactors(lu=lu, perm=perm)


def lu_solve(f: LuFactors, b) -> np.ndarray:
    """Solve ``A x = b`` from packed factors (forward then back substitution)."""
    b = as_vector(b)
    n = f.dim
    if b.shape[0] != n:
        raise DimensionMismatch(f"rhs has length {b.shape[0]}, factors have dim {n}")
    lu = f.lu
    x = b[f.perm].copy()
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1 :] @ x[i + 1 :]) / lu[i, i]
    return x


def matvec(a, v) -> np.ndarray:
    a = as_matrix(a)
    v = as_vector(v)
    if a.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"matvec: {a.shape} with length-{v.shape[0]} vector")
    return a @ v


def axpy(alpha: float, x, y) -> np.ndarray:
    """Return ``alpha * x + y``."""
    x = as_vector(x)
    y = as_vector(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"axpy: lengths {x.shape[0]} and {y.shape[0]}")
    return alpha * x + y


def dot(x, y) -> float:
    x = as_vector(x)
    y = as_vector(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"dot: lengths {x.shape[0]} and {y.shape[0]}")
    return float(x @ y)


def norm2(x) -> float:
    """Euclidean norm, the norm used for all residual reporting."""
    return float(np.linalg.norm(as_vector(x)))


def scale(alpha: float, x) -> np.ndarray:
    return alpha * as_vector(x)
