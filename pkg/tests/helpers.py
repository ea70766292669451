"""Shared test utilities: oracles and small builders."""

import numpy as np

from roadenkf.autodiff import Tape, Tensor


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_spd(n: int, seed: int) -> np.ndarray:
    """M^T M + I is comfortably positive definite."""
    m = rng(seed).standard_normal((n, n))
    return m.T @ m + np.eye(n)


def fd_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of one real array."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = g.ravel()
    xf = x.astype(np.float64).ravel()
    for i in range(xf.size):
        xp = xf.copy()
        xm = xf.copy()
        xp[i] += eps
        xm[i] -= eps
        flat[i] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2 * eps)
    return g


def tape_gradient(op, x: np.ndarray, *extra):
    """Gradient of sum(op(x, *extra)) with respect to x via the tape."""
    t = Tensor(x, requires_grad=True)
    with Tape() as tape:
        from roadenkf.autodiff import sum as tsum

        out = tsum(op(t, *extra))
    tape.backward(out)
    return tape.grad(t)


def rel_err(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(1e-12, float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max()) / denom
