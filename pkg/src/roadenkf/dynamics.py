"""Parameterized latent dynamics: two-layer networks, flow maps, stochastic transitions.

The latent dynamics map is the flow of a learned vector field over one
observation interval, integrated with fixed-step RK4 (or forward Euler),
followed by one additive Gaussian noise draw per interval. All pieces are
differentiable through the tape, including every integrator substep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import (
    RngStream,
    Tensor,
    add,
    exp,
    gaussian_reparam,
    matmul,
    relu,
    scale,
    transpose,
)
from .errors import DimensionError, DivergenceError

__all__ = [
    "FcNet2",
    "DiagNoise",
    "FlowConfig",
    "fc2_apply",
    "init_fc2",
    "integrate",
    "latent_transition",
    "sample_initial_latent",
]


@dataclass
class FcNet2:
    """Two-layer fully connected network with ReLU: W2·relu(W1·x + b1) + b2."""

    w1: Tensor  # (hidden, d_in)
    b1: Tensor  # (hidden,)
    w2: Tensor  # (d_out, hidden)
    b2: Tensor  # (d_out,)

    @property
    def d_in(self) -> int:
        return self.w1.shape[1]

    @property
    def d_out(self) -> int:
        return self.w2.shape[0]


def init_fc2(d_in: int, d_out: int, hidden: int, stream: RngStream) -> FcNet2:
    """Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))), zero biases."""
    lim1 = math.sqrt(6.0 / (d_in + hidden))
    lim2 = math.sqrt(6.0 / (hidden + d_out))
    return FcNet2(
        w1=Tensor(stream.uniform(-lim1, lim1, (hidden, d_in)), requires_grad=True),
        b1=Tensor(np.zeros(hidden), requires_grad=True),
        w2=Tensor(stream.uniform(-lim2, lim2, (d_out, hidden)), requires_grad=True),
        b2=Tensor(np.zeros(d_out), requires_grad=True),
    )


def fc2_apply(net: FcNet2, x: Tensor) -> Tensor:
    """Batched forward pass; ``x`` has shape (..., d_in)."""
    if x.shape[-1] != net.d_in:
        raise DimensionError(f"fc2_apply: input extent {x.shape[-1]} != {net.d_in}")
    flat = x.ndim == 1
    if flat:
        from .autodiff import reshape

        x = reshape(x, (1, x.shape[0]))
    h = relu(add(matmul(x, transpose(net.w1)), net.b1))
    out = add(matmul(h, transpose(net.w2)), net.b2)
    if flat:
        from .autodiff import reshape

        out = reshape(out, (out.shape[-1],))
    return out


@dataclass
class DiagNoise:
    """Diagonal Gaussian noise parameterized by log standard deviations.

    The implied covariance diag(exp(2·log_scales)) is positive definite for
    every finite parameter value, which is the point of the parameterization.
    """

    log_scales: Tensor  # (d,)

    @property
    def dim(self) -> int:
        return self.log_scales.shape[0]

    def std(self) -> Tensor:
        return exp(self.log_scales)


def init_diag_noise(d: int, initial_std: float = 0.1) -> DiagNoise:
    return DiagNoise(Tensor(np.full(d, math.log(initial_std)), requires_grad=True))


@dataclass(frozen=True)
class FlowConfig:
    """Observation interval, integrator step and scheme for the flow map."""

    dt_obs: float
    dt_int: float
    scheme: str = "rk4"  # or "euler"

    def __post_init__(self):
        if self.dt_obs <= 0 or self.dt_int <= 0:
            raise DimensionError("time steps must be positive")
        ratio = self.dt_obs / self.dt_int
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise DimensionError(
                f"dt_obs/dt_int must be a positive integer, got {ratio}"
            )
        if self.scheme not in ("rk4", "euler"):
            raise DimensionError(f"unknown scheme {self.scheme!r}")

    @property
    def substeps(self) -> int:
        return int(round(self.dt_obs / self.dt_int))


def _check_finite(x: Tensor, substep: int) -> None:
    if not np.all(np.isfinite(x.data)):
        raise DivergenceError(substep)


def integrate(field: Callable[[Tensor], Tensor], x0: Tensor, cfg: FlowConfig) -> Tensor:
    """Flow-map image of ``x0`` after one observation interval.

    Composes dt_obs/dt_int substeps of classical RK4 or forward Euler and is
    differentiable through every substep. Raises :class:`DivergenceError`
    carrying the substep index if the state leaves the finite range.
    """
    dt = cfg.dt_int
    x = x0
    for step in range(cfg.substeps):
        if cfg.scheme == "euler":
            x = add(x, scale(field(x), dt))
        else:
            k1 = field(x)
            k2 = field(add(x, scale(k1, dt / 2)))
            k3 = field(add(x, scale(k2, dt / 2)))
            k4 = field(add(x, scale(k3, dt)))
            incr = add(add(k1, scale(add(k2, k3), 2.0)), k4)
            x = add(x, scale(incr, dt / 6.0))
        _check_finite(x, step)
    return x


def latent_transition(
    net: FcNet2,
    noise: DiagNoise,
    z_prev: Tensor,
    cfg: FlowConfig,
    stream: RngStream,
) -> Tensor:
    """Propagate an ensemble one observation interval and add transition noise.

    ``z_prev`` has shape (..., N, d); each particle is pushed through the flow
    of the learned field, then receives an independent reparameterized draw
    from the diagonal Gaussian (one draw per interval, not per substep).
    """
    flowed = integrate(lambda z: fc2_apply(net, z), z_prev, cfg)
    return gaussian_reparam(flowed, noise.std(), stream)


def sample_initial_latent(
    d_z: int,
    n_particles: int,
    sigma0: float,
    stream: RngStream,
    batch: int | None = None,
) -> Tensor:
    """I.i.d. N(0, sigma0^2 I) ensemble, shape (batch, N, d_z) or (N, d_z)."""
    if sigma0 < 0:
        raise DimensionError("sigma0 must be nonnegative")
    shape = (n_particles, d_z) if batch is None else (batch, n_particles, d_z)
    return Tensor(sigma0 * stream.standard_normal(shape))
