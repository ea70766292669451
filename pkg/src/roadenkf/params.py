"""Generic walking of dataclass parameter containers.

Parameter bundles (networks, noise models, decoders) are plain dataclasses
whose leaves are :class:`Tensor`. These helpers flatten them to named tensors
for the optimizer and checkpoints, and rebuild new instances functionally
(tensors are immutable; updates create fresh containers).
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Dict, Iterator, Tuple

from .autodiff import Tensor

__all__ = ["named_tensors", "map_tensors", "replace_tensors"]


def named_tensors(obj, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
    """Yield (dotted name, tensor) for every Tensor leaf under ``obj``."""
    if isinstance(obj, Tensor):
        yield prefix.rstrip("."), obj
    elif dataclasses.is_dataclass(obj):
        for f in dataclasses.fields(obj):
            yield from named_tensors(getattr(obj, f.name), f"{prefix}{f.name}.")
    elif isinstance(obj, (list, tuple)):
        for i, item in enumerate(obj):
            yield from named_tensors(item, f"{prefix}{i}.")


def map_tensors(obj, fn: Callable[[str, Tensor], Tensor], prefix: str = ""):
    """Rebuild ``obj`` with ``fn`` applied to every Tensor leaf."""
    if isinstance(obj, Tensor):
        return fn(prefix.rstrip("."), obj)
    if dataclasses.is_dataclass(obj):
        updates = {
            f.name: map_tensors(getattr(obj, f.name), fn, f"{prefix}{f.name}.")
            for f in dataclasses.fields(obj)
        }
        return dataclasses.replace(obj, **updates)
    if isinstance(obj, list):
        return [map_tensors(v, fn, f"{prefix}{i}.") for i, v in enumerate(obj)]
    if isinstance(obj, tuple):
        return tuple(map_tensors(v, fn, f"{prefix}{i}.") for i, v in enumerate(obj))
    return obj


def replace_tensors(obj, mapping: Dict[str, Tensor]):
    """Rebuild ``obj`` substituting tensors by dotted name (missing names keep the old leaf)."""
    return map_tensors(obj, lambda name, t: mapping.get(name, t))
