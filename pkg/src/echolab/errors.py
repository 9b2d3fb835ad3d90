"""Exception and warning types shared across the package."""


class EchoLabError(Exception):
    """Base class for all package errors."""


class DomainError(EchoLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SeriesConvergenceError(EchoLabError):
    """Diagram-series argument exceeds the radius of convergence."""


class GridSizeError(EchoLabError):
    """Requested contour grid exceeds the configured node cap."""


class ModeError(EchoLabError, ValueError):
    """Unknown error mode."""


class SaddleConvergenceError(EchoLabError):
    """Damped iteration failed to converge; carries the residual trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class SaddleDivergenceError(EchoLabError):
    """Propagator norm blew past the divergence guard."""


class OracleError(EchoLabError):
    """Exact-diagonalization oracle failure (size, integration, physicality)."""


class SchemaError(EchoLabError, ValueError):
    """Echo-table file does not match the expected schema."""

    def __init__(self, message, line=None, column=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.column = column


class EmptySeriesError(EchoLabError, ValueError):
    """Plot rendering was asked to draw zero series."""


class FitError(EchoLabError):
    """Calibration failed (no start converged, or window under-determined)."""


class WindowError(EchoLabError):
    """Requested analysis window contains no comparable data."""


class PerturbationWarning(UserWarning):
    """Perturbative echo left its trust region (result < 0.9)."""


class IdentifiabilityWarning(UserWarning):
    """Fitted parameters are degenerate over the supplied window."""
