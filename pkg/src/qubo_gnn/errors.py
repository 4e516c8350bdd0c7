"""
Exception hierarchy for qubo_gnn.

Every error raised by the library derives from :class:`SolverError` so
callers (and the CLI) can catch the whole family at once. Input
validation problems additionally derive from ``ValueError``; failures
that only show up while running (a diverging training shot, a generator
that ran out of attempts) derive from ``RuntimeError``.
"""

from __future__ import annotations


class SolverError(Exception):
    """Base class for all qubo_gnn errors."""


# --------------------------------------------------------------------- graphs


class GraphError(SolverError, ValueError):
    """Invalid graph construction input."""


class IndexOutOfRangeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class InfeasibleDegreeError(GraphError):
    """No simple d-regular graph exists for the requested (n, d)."""


class GenerationFailedError(SolverError, RuntimeError):
    """The pairing model did not produce a simple graph within the retry budget."""


# -------------------------------------------------------------- file formats


class FormatError(SolverError, ValueError):
    """Malformed instance or data file."""


class MalformedHeaderError(FormatError):
    pass


class MalformedEdgeLineError(FormatError):
    pass


class EdgeCountMismatchError(FormatError):
    pass


class MalformedInstanceError(FormatError):
    """A QUBO/PUBO text file could not be parsed."""


# --------------------------------------------------------------- hamiltonians


class LengthMismatchError(SolverError, ValueError):
    pass


class NonPositivePenaltyError(SolverError, ValueError):
    pass


class OutOfRangeProbabilityError(SolverError, ValueError):
    pass


class NegativeCostError(SolverError, ValueError):
    pass


class AsymmetricMatrixError(SolverError, ValueError):
    pass


class InvalidCorrelationMatrixError(SolverError, ValueError):
    pass


class InvalidIntervalError(SolverError, ValueError):
    pass


# ---------------------------------------------------------------------- model


class EmptyGraphError(SolverError, ValueError):
    pass


class DimensionMismatchError(SolverError, ValueError):
    pass


class ShapeMismatchError(SolverError, ValueError):
    pass


class StaleCacheError(SolverError, RuntimeError):
    """A forward cache was used after the parameters it describes changed."""


class NonFiniteLossError(SolverError, RuntimeError):
    """Training diverged; ``epoch`` is the first epoch with a non-finite loss."""

    def __init__(self, epoch: int, loss: float) -> None:
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class EmptyCandidatePoolError(SolverError, RuntimeError):
    pass


# ------------------------------------------------------------ baselines/bench


class TooLargeError(SolverError, ValueError):
    pass


class UnsupportedDegreeError(SolverError, ValueError):
    pass


class EmptyInputError(SolverError, ValueError):
    pass


class MissingHyperparamsError(SolverError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else "missing hyperparameters"


class ConfigError(SolverError, ValueError):
    pass
