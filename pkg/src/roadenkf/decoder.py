"""Spectral decoder: complex lift, Fourier layers, channel-mixing head.

The decoder maps a latent vector to a high-dimensional field: a complex
linear layer produces one-sided Fourier modes, an inverse real DFT lifts them
onto the spatial grid, a stack of Fourier layers (spectral convolution plus a
one-by-one convolution branch, channel LayerNorm, ReLU) refines the field, and
a small two-layer network mixes channels at each spatial node to emit the
state. A surrogate variant that skips the lift (input already lives on the
grid) serves as the learned full-order dynamics of the baseline filter.

Storing only floor(d_u/2)+1 modes of each spectral weight realizes the even
symmetry that keeps every output exactly real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    RngStream,
    Tensor,
    add,
    irdft,
    matmul,
    layernorm_channels,
    mode_mix,
    rdft,
    relu,
    reshape,
    to_complex,
    transpose,
)
from .dynamics import FcNet2, fc2_apply, init_fc2
from .errors import DimensionError

__all__ = [
    "SpecConvWeights",
    "FourierLayerParams",
    "FndParams",
    "SurrogateParams",
    "complex_linear",
    "hermitian_lift",
    "spec_conv",
    "fourier_layer",
    "fnd_decode",
    "spectral_surrogate_step",
    "init_fnd",
    "init_surrogate",
]


@dataclass
class SpecConvWeights:
    """One-sided storage of an even-symmetric per-mode channel-mixing tensor."""

    w: Tensor  # complex, (n_out, n_in, floor(d_u/2)+1)

    @property
    def n_out(self) -> int:
        return self.w.shape[0]

    @property
    def n_in(self) -> int:
        return self.w.shape[1]

    @property
    def modes(self) -> int:
        return self.w.shape[2]


@dataclass
class FourierLayerParams:
    spec: SpecConvWeights
    mix_w: Tensor  # (n_out, n_in) one-by-one convolution weights
    mix_b: Tensor  # (n_out,)
    norm_gain: Tensor  # (n_out,)
    norm_bias: Tensor  # (n_out,)


@dataclass
class FndParams:
    """Full decoder parameter bundle (the gamma part of the model)."""

    w0: Tensor  # complex, (h, d_z)
    b0: Tensor  # complex, (h,)
    layers: list = field(default_factory=list)  # FourierLayerParams per layer
    head: FcNet2 = None  # applied over channels at each spatial node
    d_u: int = 0

    @property
    def latent_dim(self) -> int:
        return self.w0.shape[1]


@dataclass
class SurrogateParams:
    """Decoder without the lift: a grid-to-grid map for the full-order baseline."""

    layers: list = field(default_factory=list)
    head: FcNet2 = None
    d_u: int = 0


def complex_linear(p: FndParams, z: Tensor) -> Tensor:
    """W0·z + b0 with real z promoted to complex; output (..., h)."""
    if z.shape[-1] != p.latent_dim:
        raise DimensionError(f"complex_linear: latent extent {z.shape[-1]} != {p.latent_dim}")
    flat = z.ndim == 1
    if flat:
        z = reshape(z, (1, z.shape[0]))
    out = add(matmul(to_complex(z), transpose(p.w0)), p.b0)
    if flat:
        out = reshape(out, (out.shape[-1],))
    return out


def hermitian_lift(z0: Tensor, d_u: int) -> Tensor:
    """Treat z0 as one-sided Hermitian modes and lift to a real grid field."""
    if d_u < 2:
        raise DimensionError("hermitian_lift needs d_u >= 2")
    return irdft(z0, d_u)


def spec_conv(w: SpecConvWeights, v: Tensor) -> Tensor:
    """Spectral convolution: DFT, per-mode channel mixing, inverse DFT.

    ``v`` has shape (..., n_in, d_u); output (..., n_out, d_u), exactly real.
    Equivalent to a learned circular convolution along the grid.
    """
    d_u = v.shape[-1]
    if v.shape[-2] != w.n_in:
        raise DimensionError(f"spec_conv: {v.shape[-2]} input channels, weights take {w.n_in}")
    if w.modes != d_u // 2 + 1:
        raise DimensionError(
            f"spec_conv: weights hold {w.modes} modes, grid of {d_u} needs {d_u // 2 + 1}"
        )
    return irdft(mode_mix(w.w, rdft(v)), d_u)


def _one_by_one_conv(lp: FourierLayerParams, v: Tensor) -> Tensor:
    bias = reshape(lp.mix_b, (lp.mix_b.shape[0], 1))
    return add(matmul(lp.mix_w, v), bias)


def fourier_layer(lp: FourierLayerParams, v: Tensor) -> Tensor:
    """Act(Norm(SpecConv(v) + 1x1Conv(v))) with LayerNorm over channels."""
    mixed = add(spec_conv(lp.spec, v), _one_by_one_conv(lp, v))
    return relu(layernorm_channels(mixed, lp.norm_gain, lp.norm_bias))


def _channel_head(head: FcNet2, v: Tensor) -> Tensor:
    # (..., C, X) -> (..., X, C) -> two-layer net per spatial node -> (..., X)
    per_node = fc2_apply(head, transpose(v))
    return reshape(per_node, per_node.shape[:-1])


def fnd_decode(p: FndParams, z: Tensor) -> Tensor:
    """Decode latent vectors (..., d_z) to state fields (..., d_u)."""
    z0 = complex_linear(p, z)
    v = hermitian_lift(z0, p.d_u)
    v = reshape(v, v.shape[:-1] + (1, p.d_u))
    for lp in p.layers:
        v = fourier_layer(lp, v)
    return _channel_head(p.head, v)


def spectral_surrogate_step(p: SurrogateParams, u: Tensor) -> Tensor:
    """Grid-to-grid map: Fourier layers and channel head, no lift at the front."""
    if u.shape[-1] != p.d_u:
        raise DimensionError(f"surrogate built for d_u={p.d_u}, got {u.shape[-1]}")
    v = reshape(u, u.shape[:-1] + (1, p.d_u))
    for lp in p.layers:
        v = fourier_layer(lp, v)
    return _channel_head(p.head, v)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _init_spec_weights(n_out: int, n_in: int, modes: int, stream: RngStream) -> SpecConvWeights:
    s = 1.0 / (n_in * n_out)
    re = stream.uniform(-s, s, (n_out, n_in, modes))
    im = stream.uniform(-s, s, (n_out, n_in, modes))
    return SpecConvWeights(Tensor(re + 1j * im, requires_grad=True))


def _init_layer(n_out: int, n_in: int, modes: int, stream: RngStream) -> FourierLayerParams:
    lim = math.sqrt(6.0 / (n_in + n_out))
    return FourierLayerParams(
        spec=_init_spec_weights(n_out, n_in, modes, stream),
        mix_w=Tensor(stream.uniform(-lim, lim, (n_out, n_in)), requires_grad=True),
        mix_b=Tensor(np.zeros(n_out), requires_grad=True),
        norm_gain=Tensor(np.ones(n_out), requires_grad=True),
        norm_bias=Tensor(np.zeros(n_out), requires_grad=True),
    )


def _init_layers(channels, d_u: int, stream: RngStream) -> list:
    if channels[0] != 1:
        raise DimensionError(f"channel chain must start at 1, got {channels}")
    modes = d_u // 2 + 1
    return [
        _init_layer(channels[i + 1], channels[i], modes, stream.child(i))
        for i in range(len(channels) - 1)
    ]


def init_fnd(
    d_z: int,
    d_u: int,
    h: int,
    channels,
    stream: RngStream,
) -> FndParams:
    """Fresh decoder parameters; channels is the chain (n_0=1, n_1, ..., n_L)."""
    channels = tuple(channels)
    lim = math.sqrt(6.0 / (d_z + h))
    w0 = stream.uniform(-lim, lim, (h, d_z)) + 1j * stream.uniform(-lim, lim, (h, d_z))
    n_last = channels[-1]
    return FndParams(
        w0=Tensor(w0, requires_grad=True),
        b0=Tensor(np.zeros(h, dtype=complex), requires_grad=True),
        layers=_init_layers(channels, d_u, stream.child(1000)),
        head=init_fc2(n_last, 1, 2 * n_last, stream.child(1001)),
        d_u=d_u,
    )


def init_surrogate(d_u: int, channels, stream: RngStream) -> SurrogateParams:
    channels = tuple(channels)
    n_last = channels[-1]
    return SurrogateParams(
        layers=_init_layers(channels, d_u, stream.child(2000)),
        head=init_fc2(n_last, 1, 2 * n_last, stream.child(2001)),
        d_u=d_u,
    )
