"""Exception types shared across the library."""


class HzReachError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(HzReachError, ValueError):
    """Two fields that must agree in shape do not."""


class InfeasibleFactorError(HzReachError, ValueError):
    """A factor point violates its bounds or the equality constraints."""


class EnclosureError(HzReachError, ValueError):
    """A set is not contained in the interval the activation graph requires.

    Carries the offending coordinate and the amount by which the bound is
    exceeded so callers can resize the interval.
    """

    def __init__(self, message, coordinate=None, excess=None, layer=None):
        super().__init__(message)
        self.coordinate = coordinate
        self.excess = excess
        self.layer = layer


class SolverError(HzReachError, RuntimeError):
    """The LP/MILP engine failed; never silently mapped to a boolean answer."""


class NodeLimitError(SolverError):
    """Branch-and-bound exhausted its node budget before reaching a verdict."""


class LeafCapError(HzReachError, ValueError):
    """Leaf enumeration refused to run on a set with too many binary factors."""


class SamplingError(HzReachError, RuntimeError):
    """Rejection or factor sampling could not produce the requested points."""
