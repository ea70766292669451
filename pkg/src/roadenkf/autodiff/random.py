"""Counter-based random streams and the Gaussian reparameterization.

:class:`RngStream` wraps numpy's Philox generator. Every draw pins the
generator at the stream's (key, counter) position and then advances the
counter by a full 2^64 blocks, so draws never overlap regardless of how much
entropy a call consumed, and the same (key, counter) reproduces draws exactly
on any platform and thread count. Child streams fold an index into the key
(splitmix64), giving independent substreams that never advance the parent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, ParameterizationError
from .ops import add, matmul, mul, transpose
from .tensor import Tensor, as_tensor, constant

__all__ = ["RngStream", "gaussian_reparam"]

_MASK64 = (1 << 64) - 1
_STRIDE = 1 << 64


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass
class RngStream:
    """A reproducible, splittable random stream (Philox-backed)."""

    key: int
    counter: int = 0

    def _generator(self) -> np.random.Generator:
        gen = np.random.Generator(
            np.random.Philox(key=self.key & _MASK64, counter=self.counter)
        )
        self.counter += _STRIDE
        return gen

    def child(self, index: int) -> "RngStream":
        """An independent substream; never overlaps this stream or siblings."""
        folded = _splitmix64(_splitmix64(self.key & _MASK64) ^ _splitmix64(index & _MASK64))
        return RngStream(key=folded, counter=0)

    # -- draws (each consumes one counter stride) -----------------------
    def standard_normal(self, shape) -> np.ndarray:
        return self._generator().standard_normal(shape)

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self._generator().uniform(low, high, shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator().permutation(n)

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        return self._generator().choice(n, size=k, replace=False)


def gaussian_reparam(mean: Tensor, scale, stream: RngStream) -> Tensor:
    """Draw mean + L·xi with xi ~ N(0, I); gradients flow to mean and scale only.

    ``scale`` is either elementwise standard deviations (broadcast against
    ``mean``) or a square lower-triangular factor L with covariance LL^T
    matching the last extent of ``mean``. The noise xi is a constant on the
    tape, which is what lets the stochastic map stay differentiable.
    """
    mean = as_tensor(mean)
    scale = as_tensor(scale)
    matrix_form = (
        scale.ndim == 2
        and mean.ndim >= 2
        and scale.shape[0] == scale.shape[1] == mean.shape[-1]
        and scale.shape != mean.shape
    )
    if matrix_form:
        if np.any(np.diagonal(scale.data) < 0):
            raise ParameterizationError("factor diagonal must be nonnegative")
        xi = constant(stream.standard_normal(mean.shape))
        return add(mean, matmul(xi, transpose(scale)))
    if np.any(scale.data < 0):
        raise ParameterizationError("elementwise scales must be nonnegative")
    try:
        out_shape = np.broadcast_shapes(mean.shape, scale.shape)
    except ValueError as exc:
        raise DimensionError(f"mean {mean.shape} vs scale {scale.shape}") from exc
    xi = constant(stream.standard_normal(out_shape))
    return add(mean, mul(scale, xi))
