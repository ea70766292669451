"""One-sided real DFT pair with tape gradients.

Convention: unnormalized forward transform, 1/d on the inverse. The pair is
only ever used back to back around learned per-mode weights, so any
self-consistent normalization gives the same maps; this one matches
``np.fft.rfft`` / ``np.fft.irfft``.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError
from .tensor import Tensor, as_tensor, record

__all__ = ["rdft", "irdft"]


def rdft(v: Tensor) -> Tensor:
    """One-sided DFT of a real signal along the last axis.

    Input (..., d) real; output (..., floor(d/2)+1) complex. The backward pass
    is the adjoint transform under the real-composite inner product.
    """
    v = as_tensor(v)
    if v.is_complex:
        raise DimensionError("rdft input must be real")
    if v.shape[-1] < 1:
        raise DimensionError("rdft needs a last extent of at least 1")
    d = v.shape[-1]
    out = np.fft.rfft(v.data, axis=-1)
    lead = v.shape[:-1]

    def bwd(g):
        full = np.zeros(lead + (d,), dtype=np.complex128)
        full[..., : g.shape[-1]] = g
        return (np.fft.ifft(full, axis=-1).real * d,)

    return record("rdft", out, (v,), bwd)


def _adjust_modes(lam: np.ndarray, h0: int, d: int) -> np.ndarray:
    """Truncate or zero-pad one-sided modes to h0 and force real DC/Nyquist."""
    h = lam.shape[-1]
    if h == h0:
        out = lam.copy()
    elif h > h0:
        out = lam[..., :h0].copy()
    else:
        out = np.zeros(lam.shape[:-1] + (h0,), dtype=np.complex128)
        out[..., :h] = lam
    out[..., 0] = out[..., 0].real
    if d % 2 == 0:
        out[..., -1] = out[..., -1].real
    return out


def irdft(lam: Tensor, d: int) -> Tensor:
    """Real inverse of a one-sided Hermitian spectrum, output length ``d``.

    The spectrum is truncated (keeping leading modes) or zero-padded to
    floor(d/2)+1 entries first; the imaginary parts of mode 0 and, for even
    ``d``, the Nyquist mode are forced to zero so the result is exactly real.
    Normalization is 1/d, inverting :func:`rdft`.
    """
    lam = as_tensor(lam)
    if not lam.is_complex:
        raise DimensionError("irdft input must be complex (use to_complex first)")
    if lam.shape[-1] < 1 or d < 1:
        raise DimensionError("irdft needs at least one mode and d >= 1")
    h = lam.shape[-1]
    h0 = d // 2 + 1
    lam0 = _adjust_modes(lam.data, h0, d)
    out = np.fft.irfft(lam0, n=d, axis=-1)
    lead = lam.shape[:-1]

    def bwd(g):
        spec = np.fft.rfft(g, axis=-1) / d
        if d % 2 == 0:
            spec[..., 1:-1] *= 2.0
            spec[..., -1] = spec[..., -1].real
        else:
            spec[..., 1:] *= 2.0
        spec[..., 0] = spec[..., 0].real
        if h <= h0:
            gl = np.ascontiguousarray(spec[..., :h])
        else:
            gl = np.zeros(lead + (h,), dtype=np.complex128)
            gl[..., :h0] = spec
        return (gl,)

    return record("irdft", out, (lam,), bwd)
