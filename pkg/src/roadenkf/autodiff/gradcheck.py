"""Central finite-difference verification of tape gradients.

The map under test must be deterministic: any internal randomness has to come
from an RngStream rebuilt at a fixed (key, counter) on every call (common
random numbers). Unpinned randomness makes the finite-difference quotient
meaningless, which is itself a documented (and tested) failure mode.
"""

from __future__ import annotations

from typing import Callable, Sequence, Union

import numpy as np

from ..errors import ContractError
from .tensor import Tape, Tensor

__all__ = ["grad_check"]

Params = Union[Tensor, Sequence[Tensor]]


def _scalar(value: Tensor) -> float:
    if value.size != 1:
        raise ContractError(f"grad_check map must return a scalar, got {value.shape}")
    return float(np.real(value.data.reshape(())))


def grad_check(f: Callable[[Params], Tensor], params: Params, eps: float = 1e-5) -> float:
    """Max relative error between tape gradients of ``f`` and central differences.

    ``f`` receives (copies of) the parameter tensor(s) it is differentiated
    with respect to — it must read them from its argument, not close over the
    originals. Complex parameters are perturbed on their real and imaginary
    parts independently. Returns

        max over coordinates of |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
    """
    single = isinstance(params, Tensor)
    plist = [params] if single else list(params)

    def call(tensors: list) -> Tensor:
        return f(tensors[0] if single else tensors)

    with Tape() as tape:
        for p in plist:
            if p.requires_grad:
                tape.watch(p)
        out = call(plist)
    if out.size != 1:
        raise ContractError(f"grad_check map must return a scalar, got {out.shape}")
    tape.backward(out)
    grads = [tape.grad(p) if p.requires_grad else None for p in plist]

    base = [p.data.copy() for p in plist]

    def eval_at(datas: list) -> float:
        return _scalar(call([Tensor(d) for d in datas]))

    worst = 0.0
    for pi, p in enumerate(plist):
        if not p.requires_grad:
            continue
        g_ad = grads[pi]
        # Arrays handled here are fresh contiguous copies, so these are views
        # and in-place perturbation reaches the underlying parameter copy.
        if np.iscomplexobj(base[pi]):
            flat_view = lambda arr: arr.view(np.float64).ravel()
        else:
            flat_view = lambda arr: arr.ravel()
        g_flat = flat_view(g_ad.astype(base[pi].dtype, order="C", copy=True))
        for j in range(g_flat.size):
            plus = [b.copy() for b in base]
            minus = [b.copy() for b in base]
            flat_view(plus[pi])[j] += eps
            flat_view(minus[pi])[j] -= eps
            g_fd = (eval_at(plus) - eval_at(minus)) / (2.0 * eps)
            err = abs(g_flat[j] - g_fd) / max(1e-8, abs(g_flat[j]) + abs(g_fd))
            worst = max(worst, err)
    return worst
