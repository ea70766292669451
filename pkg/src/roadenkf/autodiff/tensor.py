"""Dense-tensor core with tape-based reverse-mode differentiation.

A :class:`Tensor` wraps a float64 or complex128 numpy array. Operations on
tensors (defined in the sibling modules) run eagerly in numpy and, when a
:class:`Tape` is active, append one node per operation. ``Tape.backward``
walks the node list in exact reverse append order, so topological order is
append order by construction.

Complex tensors follow the real-composite convention: the gradient stored for
a complex array ``w`` is the complex array ``dL/d(Re w) + i dL/d(Im w)``.
This is sufficient because every loss in this package is real.

Tensors are immutable after construction. A tape is single-owner: it must not
be shared across threads (the active-tape stack is thread-local, so parallel
work at a higher level simply uses one tape per worker).
"""

from __future__ import annotations

import threading
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ContractError, DimensionError

__all__ = ["Tensor", "Tape", "active_tape", "record", "as_tensor", "constant"]

_state = threading.local()


def _tape_stack() -> list:
    if not hasattr(_state, "stack"):
        _state.stack = []
    return _state.stack


def active_tape() -> Optional["Tape"]:
    """The innermost open tape on this thread, or None."""
    stack = _tape_stack()
    return stack[-1] if stack else None


def _coerce(data) -> np.ndarray:
    arr = np.asarray(data)
    if np.iscomplexobj(arr):
        return np.ascontiguousarray(arr, dtype=np.complex128)
    return np.ascontiguousarray(arr, dtype=np.float64)


class Tensor:
    """Immutable dense array (real float64 or complex128) with an optional tape handle."""

    __slots__ = ("data", "requires_grad", "_tape", "_node_id")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _coerce(data)
        self.requires_grad = bool(requires_grad)
        self._tape: Optional[Tape] = None
        self._node_id: Optional[int] = None

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)

    @property
    def kind(self) -> str:
        return "complex" if self.is_complex else "real"

    def node_id(self, tape: "Tape") -> Optional[int]:
        """This tensor's node id on ``tape``, or None if not recorded there."""
        return self._node_id if self._tape is tape else None

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return self.data.reshape(()).item()

    def detach(self) -> "Tensor":
        """A view of the same data with no gradient and no tape handle."""
        return Tensor(self.data, requires_grad=False)

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, kind={self.kind}{grad})"

    # -- operator sugar (delegates to ops) ------------------------------
    def __add__(self, other):
        from . import ops

        return ops.add(self, as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, as_tensor(other))

    def __rsub__(self, other):
        from . import ops

        return ops.sub(as_tensor(other), self)

    def __mul__(self, other):
        from . import ops

        if isinstance(other, (int, float)) :
            return ops.scale(self, float(other))
        return ops.mul(self, as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops

        if isinstance(other, (int, float)):
            return ops.scale(self, 1.0 / float(other))
        return ops.div(self, as_tensor(other))

    def __rtruediv__(self, other):
        from . import ops

        return ops.div(as_tensor(other), self)

    def __neg__(self):
        from . import ops

        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, as_tensor(other))


def as_tensor(value) -> Tensor:
    """Wrap arrays/scalars as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


def constant(value) -> Tensor:
    """A tensor that never receives gradients."""
    return Tensor(value, requires_grad=False)


class _Node:
    __slots__ = ("op", "parents", "backward_fn", "shape", "dtype", "is_leaf")

    def __init__(self, op, parents, backward_fn, shape, dtype, is_leaf):
        self.op = op
        self.parents = parents
        self.backward_fn = backward_fn
        self.shape = shape
        self.dtype = dtype
        self.is_leaf = is_leaf


class Tape:
    """Append-only record of operations, replayed in reverse for gradients.

    Use as a context manager::

        with Tape() as tape:
            loss = ...            # ops on tensors record nodes here
        tape.backward(loss)
        g = tape.grad(param)      # ndarray, same shape as param

    ``backward`` may be called again after ``reset_grads`` and yields identical
    results. Leaf gradients are zero-filled when a watched leaf does not
    influence the output.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.grads: list[Optional[np.ndarray]] = []

    # -- context management ---------------------------------------------
    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        popped = _tape_stack().pop()
        assert popped is self, "tape stack corrupted"

    # -- recording -------------------------------------------------------
    def _append(self, node: _Node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def leaf_id(self, t: Tensor) -> int:
        """Node id of ``t`` on this tape, registering it as a leaf if needed."""
        nid = t.node_id(self)
        if nid is None:
            nid = self._append(
                _Node("leaf", (), None, t.shape, t.data.dtype, is_leaf=True)
            )
            t._tape = self
            t._node_id = nid
        return nid

    def watch(self, t: Tensor) -> None:
        """Ensure ``t`` gets a (possibly zero) gradient buffer after backward."""
        if not t.requires_grad:
            raise ContractError("watch() requires a tensor with requires_grad=True")
        self.leaf_id(t)

    # -- reverse pass ------------------------------------------------------
    def backward(self, output: Tensor) -> None:
        """Accumulate gradients of a scalar ``output`` into this tape's buffers."""
        if output.size != 1:
            raise ContractError(
                f"backward() needs a scalar output, got shape {output.shape}"
            )
        if output.is_complex:
            raise ContractError("backward() outputs must be real")
        out_id = output.node_id(self)
        if out_id is None:
            raise ContractError("output is not recorded on this tape")

        grads: list[Optional[np.ndarray]] = [None] * len(self.nodes)
        grads[out_id] = np.ones(output.shape, dtype=np.float64)
        for nid in range(out_id, -1, -1):
            g = grads[nid]
            if g is None:
                continue
            node = self.nodes[nid]
            if node.is_leaf:
                continue
            contributions = node.backward_fn(g)
            for pid, pg in zip(node.parents, contributions):
                if pid is None or pg is None:
                    continue
                if grads[pid] is None:
                    grads[pid] = pg
                else:
                    grads[pid] = grads[pid] + pg
            grads[nid] = None  # free intermediate buffers as soon as consumed

        # Zero-fill watched leaves not reached by the sweep.
        for nid, node in enumerate(self.nodes):
            if node.is_leaf and grads[nid] is None:
                grads[nid] = np.zeros(node.shape, dtype=node.dtype)
        self.grads = grads

    def grad(self, t: Tensor) -> Optional[np.ndarray]:
        """Gradient buffer for ``t`` from the last backward pass (None if absent)."""
        nid = t.node_id(self)
        if nid is None or nid >= len(self.grads):
            return None
        return self.grads[nid]

    def reset_grads(self) -> None:
        """Drop gradient buffers so backward can be re-run from scratch."""
        self.grads = []


def record(
    op: str,
    out_data: np.ndarray,
    inputs: Sequence[Tensor],
    backward_fn: Callable[[np.ndarray], tuple],
) -> Tensor:
    """Create the result tensor of ``op`` and register it on the active tape.

    ``backward_fn`` receives the output gradient and returns one contribution
    per input (None for inputs that do not need one). Recording only happens
    when a tape is active and at least one input requires a gradient; otherwise
    this is a plain eager computation.
    """
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=requires)
    tape = active_tape()
    if tape is None or not requires:
        return out
    parents = tuple(
        tape.leaf_id(t) if t.requires_grad else None for t in inputs
    )
    nid = tape._append(
        _Node(op, parents, backward_fn, out.shape, out.data.dtype, is_leaf=False)
    )
    out._tape = tape
    out._node_id = nid
    return out


def check_same_kind(a: Tensor, b: Tensor, op: str) -> None:
    if a.is_complex != b.is_complex:
        raise DimensionError(
            f"{op}: operands must both be real or both complex "
            f"(got {a.kind} and {b.kind})"
        )
