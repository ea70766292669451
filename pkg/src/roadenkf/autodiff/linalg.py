"""Cholesky-backed SPD solve and log-determinant, differentiable and batched.

Inputs are symmetrized as (A + A^T)/2 before factorization; gradients with
respect to the matrix argument are symmetrized accordingly. Both operations
accept stacked matrices (leading batch axes).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import DimensionError, NotSpdError
from .tensor import Tensor, as_tensor, record

__all__ = ["solve_spd", "logdet_spd"]


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _first_bad_pivot(m: np.ndarray) -> int:
    """Row of the first non-positive pivot of an unblocked Cholesky sweep."""
    n = m.shape[0]
    low = np.zeros_like(m)
    for j in range(n):
        s = m[j, j] - low[j, :j] @ low[j, :j]
        if s <= 0:
            return j
        low[j, j] = np.sqrt(s)
        if j + 1 < n:
            low[j + 1 :, j] = (m[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    return n - 1


def _cholesky(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        flat = a.reshape(-1, a.shape[-1], a.shape[-1])
        for bi in range(flat.shape[0]):
            try:
                np.linalg.cholesky(flat[bi])
            except np.linalg.LinAlgError:
                raise NotSpdError(_first_bad_pivot(flat[bi]), bi) from None
        raise  # pragma: no cover - cholesky failed but every element passed


def _cho_solve(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B given the lower Cholesky factor of A, batched."""
    n = low.shape[-1]
    shape = np.broadcast_shapes(low.shape[:-2], b.shape[:-2])
    lowf = np.broadcast_to(low, shape + low.shape[-2:]).reshape(-1, n, n)
    bf = np.broadcast_to(b, shape + b.shape[-2:]).reshape(-1, n, b.shape[-1])
    out = np.empty_like(bf)
    for i in range(lowf.shape[0]):
        y = solve_triangular(lowf[i], bf[i], lower=True, check_finite=False)
        out[i] = solve_triangular(lowf[i], y, lower=True, trans="T", check_finite=False)
    return out.reshape(shape + b.shape[-2:])


def _check_spd_args(a: Tensor) -> None:
    if a.is_complex:
        raise DimensionError("SPD operations are defined for real matrices")
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrices, got {a.shape}")


def solve_spd(a: Tensor, b: Tensor) -> Tensor:
    """Solve A X = B for symmetric positive definite A via Cholesky.

    ``a`` has shape (..., n, n), ``b`` shape (..., n, m); leading axes
    broadcast. The backward pass reuses the factor: dB = A^{-1} dX and
    dA = -sym(A^{-1} dX X^T).
    """
    a, b = as_tensor(a), as_tensor(b)
    _check_spd_args(a)
    if b.is_complex or b.ndim < 2 or b.shape[-2] != a.shape[-1]:
        raise DimensionError(f"solve_spd right-hand side {b.shape} vs matrix {a.shape}")
    asym = _sym(a.data)
    low = _cholesky(asym)
    x = _cho_solve(low, b.data)
    a_shape, b_shape = a.shape, b.shape

    def bwd(g):
        s = _cho_solve(low, g)
        ga = -0.5 * (np.matmul(s, np.swapaxes(x, -1, -2)) + np.matmul(x, np.swapaxes(s, -1, -2)))
        from .ops import _unbroadcast

        return _unbroadcast(ga, a_shape), _unbroadcast(s, b_shape)

    return record("solve_spd", x, (a, b), bwd)


def logdet_spd(a: Tensor) -> Tensor:
    """log det A for SPD A, via 2·sum(log diag(chol A)); gradient is sym(A^{-1})."""
    a = as_tensor(a)
    _check_spd_args(a)
    asym = _sym(a.data)
    low = _cholesky(asym)
    diag = np.diagonal(low, axis1=-2, axis2=-1)
    out = 2.0 * np.sum(np.log(diag), axis=-1)
    n = a.shape[-1]

    def bwd(g):
        inv = _cho_solve(low, np.broadcast_to(np.eye(n), low.shape))
        return (g[..., None, None] * _sym(inv),)

    return record("logdet_spd", out, (a,), bwd)
