"""Exception hierarchy shared by all scaletree modules."""


class ScaletreeError(Exception):
    """Base class for all toolkit errors."""


class InputError(ScaletreeError):
    """Malformed or degenerate data (bad matrices, non-finite values, ...)."""


class ParseError(InputError):
    """Unreadable file contents; message carries the offending line number."""


class ConsistencyError(InputError):
    """A state object violates an invariant it was required to satisfy."""


class ParameterError(ScaletreeError):
    """Out-of-range or incoherent parameter / configuration value."""


class SizeError(ParameterError):
    """Problem size exceeds a hard cap of a brute-force routine."""


class InfeasiblePriorError(ScaletreeError):
    """The neighbor prior assigns zero probability to every reachable state."""


class ModelError(ScaletreeError):
    """Invalid likelihood-model parameters (non-positive variance or rate)."""


class StateError(ScaletreeError):
    """Operation requires model state (e.g. calibration) that is missing."""
