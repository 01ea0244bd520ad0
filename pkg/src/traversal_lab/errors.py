"""Exception types shared across the package."""


class TraversalLabError(Exception):
    """Base class for all package errors."""


class DegenerateChannelError(TraversalLabError):
    """Sideband energy is exactly zero; the channel wavenumber is undefined."""


class BranchPointError(TraversalLabError):
    """Energy sits exactly at the barrier top; perturb the energy slightly."""


class ChannelClosedError(TraversalLabError):
    """Requested sideband is not among the retained open channels."""


class SolverSingularError(TraversalLabError):
    """Matching system is numerically singular."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class UnsupportedTopologyError(TraversalLabError):
    """Potential does not have exactly one classically forbidden interval."""


class QuadratureAccuracyError(TraversalLabError):
    """Quadrature failed to reach the requested accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class StabilityError(TraversalLabError):
    """Norm drift of the propagated wavefunction exceeded tolerance."""


class WindowError(TraversalLabError):
    """Wavefunction reached the grid boundary with non-negligible density."""


class InsufficientTransmissionError(TraversalLabError):
    """Transmitted weight of the final wavefunction is too small to sample."""


class EmptyEnsembleError(TraversalLabError):
    """Path ensemble contains no usable transmitted paths."""


class ConfigError(TraversalLabError):
    """Invalid or incomplete run configuration."""
