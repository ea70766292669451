"""Differentiable elementwise, reduction and structural operations.

All functions take and return :class:`Tensor`; gradients follow the
real-composite convention for complex operands (multiplicative rules pick up a
conjugate on the saved operand, which is a no-op for real data).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from ..errors import ContractError, DimensionError, NumericDomainError
from .tensor import Tensor, as_tensor, check_same_kind, record

__all__ = [
    "add", "sub", "mul", "div", "scale", "relu", "softplus", "exp", "log",
    "sqrt", "sum", "mean", "matmul", "transpose", "reshape", "concat",
    "take_last", "to_complex", "creal", "cimag", "mode_mix", "layernorm_channels",
]

_EXP_MAX = 709.782712893384  # largest x with finite exp(x) in float64


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient computed at broadcast shape back to ``shape``."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _first_flat_index(mask: np.ndarray) -> int:
    return int(np.argmax(mask.ravel()))


def _require_real(t: Tensor, op: str) -> None:
    if t.is_complex:
        raise DimensionError(f"{op} is defined for real tensors only")


# ---------------------------------------------------------------------------
# binary elementwise
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    check_same_kind(a, b, "add")
    out = a.data + b.data
    return record(
        "add", out, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    check_same_kind(a, b, "sub")
    out = a.data - b.data
    return record(
        "sub", out, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    check_same_kind(a, b, "mul")
    out = a.data * b.data
    ad, bd = a.data, b.data
    return record(
        "mul", out, (a, b),
        lambda g: (
            _unbroadcast(g * np.conj(bd), a.shape),
            _unbroadcast(g * np.conj(ad), b.shape),
        ),
    )


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    check_same_kind(a, b, "div")
    out = a.data / b.data
    bd = b.data
    return record(
        "div", out, (a, b),
        lambda g: (
            _unbroadcast(g * np.conj(1.0 / bd), a.shape),
            _unbroadcast(-g * np.conj(out / bd), b.shape),
        ),
    )


def scale(a: Tensor, s: float) -> Tensor:
    a = as_tensor(a)
    s = float(s)
    return record("scale", a.data * s, (a,), lambda g: (g * s,))


# ---------------------------------------------------------------------------
# unary elementwise
# ---------------------------------------------------------------------------

def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    _require_real(a, "relu")
    mask = a.data > 0  # gradient at exactly 0 is 0
    out = np.where(mask, a.data, 0.0)
    return record("relu", out, (a,), lambda g: (g * mask,))


def softplus(a: Tensor) -> Tensor:
    a = as_tensor(a)
    _require_real(a, "softplus")
    out = np.logaddexp(0.0, a.data)
    ad = a.data
    return record("softplus", out, (a,), lambda g: (g * expit(ad),))


def exp(a: Tensor) -> Tensor:
    a = as_tensor(a)
    _require_real(a, "exp")
    bad = a.data > _EXP_MAX
    if np.any(bad):
        raise NumericDomainError("exp overflow", _first_flat_index(bad))
    out = np.exp(a.data)
    return record("exp", out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    a = as_tensor(a)
    _require_real(a, "log")
    bad = a.data <= 0
    if np.any(bad):
        raise NumericDomainError("log of non-positive value", _first_flat_index(bad))
    out = np.log(a.data)
    ad = a.data
    return record("log", out, (a,), lambda g: (g / ad,))


def sqrt(a: Tensor) -> Tensor:
    a = as_tensor(a)
    _require_real(a, "sqrt")
    bad = a.data < 0
    if np.any(bad):
        raise NumericDomainError("sqrt of negative value", _first_flat_index(bad))
    out = np.sqrt(a.data)
    return record("sqrt", out, (a,), lambda g: (g * (0.5 / np.where(out == 0, np.inf, out)),))


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def _expand_reduced(g: np.ndarray, shape: tuple, axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = axis if isinstance(axis, tuple) else (axis,)
    if not keepdims:
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    out = np.sum(a.data, axis=axis, keepdims=keepdims)
    shape = a.shape
    return record(
        "sum", out, (a,),
        lambda g: (_expand_reduced(g, shape, axis, keepdims),),
    )


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = np.mean(a.data, axis=axis, keepdims=keepdims)
    count = a.size if axis is None else np.prod(
        [a.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))]
    )
    shape = a.shape
    inv = 1.0 / float(count)
    return record(
        "mean", out, (a,),
        lambda g: (_expand_reduced(g * inv, shape, axis, keepdims),),
    )


# ---------------------------------------------------------------------------
# linear algebra / structure
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    check_same_kind(a, b, "matmul")
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(
            f"matmul needs matrices (ndim >= 2), got {a.shape} @ {b.shape}"
        )
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    out = np.matmul(a.data, b.data)
    ad, bd = a.data, b.data

    def bwd(g):
        ga = np.matmul(g, np.conj(np.swapaxes(bd, -1, -2)))
        gb = np.matmul(np.conj(np.swapaxes(ad, -1, -2)), g)
        return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

    return record("matmul", out, (a, b), bwd)


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        if a.ndim < 2:
            raise DimensionError("transpose needs ndim >= 2")
        out = np.swapaxes(a.data, -1, -2)
        return record("transpose", out, (a,), lambda g: (np.swapaxes(g, -1, -2),))
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = np.transpose(a.data, axes)
    return record("transpose", out, (a,), lambda g: (np.transpose(g, inv),))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    out = np.reshape(a.data, shape)
    old = a.shape
    return record("reshape", out, (a,), lambda g: (np.reshape(g, old),))


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    if not parts:
        raise DimensionError("concat of zero tensors")
    for p in parts[1:]:
        check_same_kind(parts[0], p, "concat")
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum(sizes)[:-1]

    def bwd(g):
        return tuple(np.ascontiguousarray(piece) for piece in np.split(g, offsets, axis=axis))

    return record("concat", out, tuple(parts), bwd)


def take_last(a: Tensor, indices: np.ndarray) -> Tensor:
    """Select entries along the last axis.

    ``indices`` is a 1-D integer array applied to every row, or a 2-D array of
    per-leading-batch index rows (``indices.shape[0] == a.shape[0]``). Indices
    must be distinct along the last axis; the backward pass scatters into a
    zero buffer under that assumption.
    """
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim == 1:
        out = a.data[..., idx]
        shape = a.shape

        def bwd(g):
            z = np.zeros(shape, dtype=g.dtype)
            z[..., idx] = g
            return (z,)

        return record("take_last", out, (a,), bwd)
    if idx.ndim == 2:
        if a.ndim < 2 or idx.shape[0] != a.shape[0]:
            raise DimensionError(
                f"per-batch take_last: indices {idx.shape} vs tensor {a.shape}"
            )
        expanded = idx.reshape(idx.shape[0], *([1] * (a.ndim - 2)), idx.shape[1])
        out = np.take_along_axis(a.data, np.broadcast_to(expanded, a.shape[:-1] + (idx.shape[1],)), axis=-1)
        shape = a.shape

        def bwd(g):
            z = np.zeros(shape, dtype=g.dtype)
            np.put_along_axis(
                z, np.broadcast_to(expanded, g.shape), g, axis=-1
            )
            return (z,)

        return record("take_last", out, (a,), bwd)
    raise DimensionError(f"take_last indices must be 1-D or 2-D, got {idx.ndim}-D")


def to_complex(a: Tensor) -> Tensor:
    """Promote a real tensor to complex with zero imaginary part."""
    a = as_tensor(a)
    _require_real(a, "to_complex")
    out = a.data.astype(np.complex128)
    return record("to_complex", out, (a,), lambda g: (np.ascontiguousarray(g.real),))


def creal(a: Tensor) -> Tensor:
    """Real part of a complex tensor."""
    a = as_tensor(a)
    if not a.is_complex:
        raise DimensionError("creal expects a complex tensor")
    out = np.ascontiguousarray(a.data.real)
    return record("creal", out, (a,), lambda g: (g.astype(np.complex128),))


def cimag(a: Tensor) -> Tensor:
    """Imaginary part of a complex tensor."""
    a = as_tensor(a)
    if not a.is_complex:
        raise DimensionError("cimag expects a complex tensor")
    out = np.ascontiguousarray(a.data.imag)
    return record("cimag", out, (a,), lambda g: (1j * g,))


def mode_mix(w: Tensor, lam: Tensor) -> Tensor:
    """Per-mode channel mixing: ``out[..., o, k] = sum_i w[o, i, k] * lam[..., i, k]``."""
    w, lam = as_tensor(w), as_tensor(lam)
    if not (w.is_complex and lam.is_complex):
        raise DimensionError("mode_mix operates on complex tensors")
    if w.ndim != 3 or lam.shape[-2] != w.shape[1] or lam.shape[-1] != w.shape[2]:
        raise DimensionError(f"mode_mix shapes: weights {w.shape}, input {lam.shape}")
    out = np.einsum("oik,...ik->...ok", w.data, lam.data)
    wd, ld = w.data, lam.data
    n_out, n_in, k = w.shape

    def bwd(g):
        gf = g.reshape(-1, n_out, k)
        lf = ld.reshape(-1, n_in, k)
        gw = np.einsum("bok,bik->oik", gf, np.conj(lf))
        gl = np.einsum("oik,bok->bik", np.conj(wd), gf).reshape(ld.shape)
        return gw, gl

    return record("mode_mix", out, (w, lam), bwd)


def layernorm_channels(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Layer normalization over the channel axis (second to last) of ``x``.

    ``x`` has shape (..., C, X); ``gain`` and ``bias`` have shape (C,). Each
    spatial node's channel vector is normalized to zero mean / unit variance,
    then scaled and shifted, so the layer is independent of the grid size X.
    """
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    _require_real(x, "layernorm_channels")
    if x.ndim < 2 or gain.shape != (x.shape[-2],) or bias.shape != (x.shape[-2],):
        raise DimensionError(
            f"layernorm_channels: x {x.shape}, gain {gain.shape}, bias {bias.shape}"
        )
    xd = x.data
    m = xd.mean(axis=-2, keepdims=True)
    xc = xd - m
    var = np.mean(xc * xc, axis=-2, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gcol = gain.data[:, None]
    out = gcol * xhat + bias.data[:, None]
    reduce_axes = tuple(i for i in range(xd.ndim) if i != xd.ndim - 2)

    def bwd(g):
        gh = g * gcol
        gx = inv * (
            gh
            - gh.mean(axis=-2, keepdims=True)
            - xhat * np.mean(gh * xhat, axis=-2, keepdims=True)
        )
        ggain = np.ascontiguousarray((g * xhat).sum(axis=reduce_axes))
        gbias = np.ascontiguousarray(g.sum(axis=reduce_axes))
        return gx, ggain, gbias

    return record("layernorm_channels", out, (x, gain, bias), bwd)
