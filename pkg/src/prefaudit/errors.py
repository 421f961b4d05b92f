"""Exception types shared across the package."""


class PrefauditError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(PrefauditError):
    """Malformed input data (bad row, bad schema, unreadable file)."""


class InsufficientSupportError(PrefauditError):
    """Too few observations to compute the requested statistic."""


class DegenerateDataError(PrefauditError):
    """Zero-variance or otherwise degenerate input to an inferential statistic."""


class InfeasiblePlanError(PrefauditError):
    """A diagnostic plan cannot satisfy its structural constraints.

    The message names the binding constraint.
    """


class TransportError(PrefauditError):
    """A labeling endpoint could not be reached or returned a transport-level failure."""


class ProtocolError(PrefauditError):
    """A labeling endpoint returned a payload violating the response contract."""


class AllEndpointsFailedError(PrefauditError):
    """Every configured labeling endpoint failed for a request."""
