"""Minimal dense-tensor engine with tape-based reverse-mode differentiation."""

from .gradcheck import grad_check
from .linalg import logdet_spd, solve_spd
from .ops import (
    add,
    cimag,
    concat,
    creal,
    div,
    exp,
    layernorm_channels,
    log,
    matmul,
    mean,
    mode_mix,
    mul,
    relu,
    reshape,
    scale,
    softplus,
    sqrt,
    sub,
    sum,
    take_last,
    to_complex,
    transpose,
)
from .random import RngStream, gaussian_reparam
from .spectral import irdft, rdft
from .tensor import Tape, Tensor, active_tape, as_tensor, constant


def backward(tape: Tape, output: Tensor) -> None:
    """Populate gradient buffers on ``tape`` for a recorded scalar ``output``."""
    tape.backward(output)


__all__ = [
    "Tensor", "Tape", "RngStream", "active_tape", "as_tensor", "constant",
    "backward", "grad_check", "gaussian_reparam",
    "add", "sub", "mul", "div", "scale", "relu", "softplus", "exp", "log",
    "sqrt", "sum", "mean", "matmul", "transpose", "reshape", "concat",
    "take_last", "to_complex", "creal", "cimag", "mode_mix", "layernorm_channels",
    "rdft", "irdft", "solve_spd", "logdet_spd",
]
