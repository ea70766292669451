"""Exception types shared across the package."""


class RoadEnkfError(Exception):
    """Base class for all package errors."""


class DimensionError(RoadEnkfError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ContractError(RoadEnkfError, ValueError):
    """An operation was called outside its contract (e.g. backward on a non-scalar)."""


class NumericDomainError(RoadEnkfError, FloatingPointError):
    """Elementwise domain violation (log of a non-positive value, exp overflow).

    Carries the flat index of the first offending element in ``index``.
    """

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (first offending flat index {index})")
        self.index = index


class NotSpdError(RoadEnkfError, ValueError):
    """Cholesky factorization hit a non-positive pivot.

    ``pivot`` is the row of the first failing pivot; ``batch_index`` identifies
    the failing matrix when the input is batched.
    """

    def __init__(self, pivot: int, batch_index: int = 0):
        super().__init__(
            f"matrix is not symmetric positive definite "
            f"(non-positive pivot at row {pivot}, batch element {batch_index})"
        )
        self.pivot = pivot
        self.batch_index = batch_index


class ParameterizationError(RoadEnkfError, ValueError):
    """A noise scale or factor violates its positivity constraint."""


class DivergenceError(RoadEnkfError, ArithmeticError):
    """An ODE integration produced a non-finite state.

    ``substep`` is the index of the integrator substep that diverged.
    """

    def __init__(self, substep: int, message: str = "state became non-finite"):
        super().__init__(f"{message} at integrator substep {substep}")
        self.substep = substep


class FilterDivergenceError(RoadEnkfError, ArithmeticError):
    """The ensemble filter failed (SPD solve failure or non-finite likelihood).

    ``time_index`` is the 1-based observation step at which the filter broke.
    """

    def __init__(self, time_index: int, message: str = "filter diverged"):
        super().__init__(f"{message} at time step {time_index}")
        self.time_index = time_index


class DegenerateEnsembleError(RoadEnkfError, ValueError):
    """Fewer than two particles: empirical covariances are undefined."""


class FormatError(RoadEnkfError, ValueError):
    """A serialized tensor file is corrupt. Carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ConfigError(RoadEnkfError, ValueError):
    """A configuration file or CLI argument set is invalid."""
